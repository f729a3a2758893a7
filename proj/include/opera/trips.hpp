#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "opera/model.hpp"

namespace opera {

struct BoundingBox {
  double lat_min = 0.0;
  double lat_max = 0.0;
  double lon_min = 0.0;
  double lon_max = 0.0;
};

// Default box around Manhattan used when no box is given.
BoundingBox manhattan_box();

// Square cells of side cell_km laid over a box, row-major from the
// south-west corner. Distances use an equirectangular projection at the box's
// mid latitude.
class Grid {
 public:
  Grid(const BoundingBox& box, double cell_km);
  int cols() const { return cols_; }
  int rows() const { return rows_; }
  int num_cells() const { return cols_ * rows_; }
  double cell_km() const { return cell_km_; }
  const BoundingBox& box() const { return box_; }
  // Cell id, or -1 when the point lies outside the box.
  int cell_of(double lat, double lon) const;
  // Center of a cell in km from the south-west corner.
  std::pair<double, double> center_km(int cell) const;
  double distance_km(int a, int b) const;

 private:
  BoundingBox box_;
  double cell_km_;
  double km_per_lat_, km_per_lon_;
  int cols_ = 1, rows_ = 1;
};

struct Discretized {
  std::vector<int> cells;  // one per kept point, input order
  int64_t dropped = 0;     // points outside the box
};

Discretized grid_discretize(std::span<const std::pair<double, double>> points,
                            const Grid& grid);

struct Trip {
  std::string day;             // YYYY-MM-DD of pickup
  int second_of_day = 0;       // pickup time
  double pickup_lat = 0.0, pickup_lon = 0.0;
  double dropoff_lat = 0.0, dropoff_lon = 0.0;
  int duration_seconds = -1;   // from an optional dropoff_datetime column
};

struct TripReadReport {
  int64_t rows = 0;
  int64_t malformed = 0;
};

// Columns: pickup_datetime, pickup_lat, pickup_lon, dropoff_lat, dropoff_lon
// and optionally dropoff_datetime; datetimes as "YYYY-MM-DD HH:MM:SS". The
// header row is required. Malformed rows are counted and skipped.
std::vector<Trip> read_trips_csv(std::istream& in, TripReadReport& report);

// Per-round arrival model over num_types OD types plus a null type (index
// num_types). b^t is the rounded mean number of requests in round t over the
// given days (at least 1); p_v^t the mean count of type v divided by b^t,
// scaled down if it exceeds b^t; the null type takes the remainder.
struct OdCounts {
  int rounds = 0;
  int num_types = 0;
  int days = 0;
  std::vector<double> totals;  // [t * num_types + v], summed over days
};

ArrivalModel estimate_arrival_model(const OdCounts& counts);

struct TripInstanceParams {
  BoundingBox box = manhattan_box();
  double cell_km = 4.0;
  int rounds = 240;
  int resources = 10;
  int kappa = 2;
  int test_days = -1;  // most recent days held out; -1: one if two or more
  double base_revenue = 10.0;
  double revenue_per_round = 0.5;
  double speed_kmh = 20.0;        // duration fallback for unobserved ODs
  double duration_quantile = 0.5;
};

struct TripInstance {
  Instance instance;
  std::vector<std::string> train_days;
  std::vector<std::string> test_days;
  int num_cells = 0;   // active cells, those touched by a training trip
  int grid_cells = 0;
  int64_t dropped_outside = 0;
  int64_t test_trips = 0;
};

// Builds an instance whose types are (origin cell, destination cell) pairs
// over the active cells, origin-major, plus the null type. Groups hold up to kappa requests with a
// common origin cell; the null type joins no group. A group keeps its
// resource busy for the longest member trip, in rounds, and pays the sum of
// its members' fares base + rate * c_v.
TripInstance build_trip_instance(const std::vector<Trip>& trips,
                                 const TripInstanceParams& params);

}  // namespace opera
