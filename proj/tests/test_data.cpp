#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

#include "opera/errors.hpp"
#include "opera/instance_io.hpp"
#include "opera/rng.hpp"
#include "opera/stats.hpp"
#include "opera/synthetic.hpp"
#include "opera/trips.hpp"

using namespace opera;

namespace {

std::string trip_line(const std::string& day, int sec, double la, double lo, double la2,
                      double lo2) {
  char buf[200];
  std::snprintf(buf, sizeof(buf), "%s %02d:%02d:%02d,%.6f,%.6f,%.6f,%.6f\n", day.c_str(),
                sec / 3600, sec / 60 % 60, sec % 60, la, lo, la2, lo2);
  return buf;
}

const std::string kHeader = "pickup_datetime,pickup_lat,pickup_lon,dropoff_lat,dropoff_lon\n";

}  // namespace

TEST_CASE("synthetic defaults validate") {
  SyntheticParams p;
  const Instance inst = generate_synthetic(p, 7);
  CHECK(validate_instance(inst).ok());
  CHECK(inst.num_resources() == 10);
  CHECK(inst.num_types() == 10);
  CHECK(inst.rounds() == 200);
  for (int u = 0; u < 10; ++u) {
    for (int g = 0; g < inst.num_groups(); g += 7) {
      const int c = inst.occupancy(u, g, 0).constant_value();
      CHECK(c >= 1);
      CHECK(c <= 60);
      CHECK(inst.weight(u, g, 0) == doctest::Approx(10.0 + 0.5 * c));
      CHECK(inst.occupancy(u, g, 199) == inst.occupancy(u, g, 0));
    }
  }
}

TEST_CASE("synthetic weight formula with base 0") {
  SyntheticParams p;
  p.resources = 2;
  p.types = 2;
  p.rounds = 3;
  p.batch_size = 3;
  p.base_revenue = 0.0;
  p.max_occupancy = 1;
  const Instance inst = generate_synthetic(p, 1);
  // c is 1 here; 0 + 0.5 * 1.
  CHECK(inst.weight(0, 0, 0) == 0.5);
  p.max_occupancy = 2;
  const Instance two = generate_synthetic(p, 1);
  for (int u = 0; u < 2; ++u) {
    for (int g = 0; g < 2; ++g) {
      if (two.occupancy(u, g, 0).constant_value() == 2) CHECK(two.weight(u, g, 0) == 1.0);
    }
  }
}

TEST_CASE("synthetic is a pure function of params and seed") {
  SyntheticParams p;
  p.resources = 4;
  p.rounds = 20;
  CHECK(serialize_instance(generate_synthetic(p, 3)) ==
        serialize_instance(generate_synthetic(p, 3)));
  CHECK(serialize_instance(generate_synthetic(p, 3)) !=
        serialize_instance(generate_synthetic(p, 4)));
}

TEST_CASE("grid") {
  const BoundingBox box{40.0, 40.1, -74.0, -73.9};
  const Grid grid(box, 4.0);
  CHECK(grid.cell_of(40.0, -74.0) == 0);
  CHECK(grid.cell_of(39.99, -74.0) == -1);
  const Grid one(box, 100.0);
  CHECK(one.num_cells() == 1);
  CHECK(one.cell_of(40.05, -73.95) == 0);
  const std::vector<std::pair<double, double>> pts = {{40.0, -74.0}, {41.0, -74.0}, {40.05, -73.95}};
  const Discretized d = grid_discretize(pts, grid);
  CHECK(d.dropped == 1);
  CHECK(d.cells.size() == 2u);
  CHECK_THROWS_AS(Grid(box, 0.0), InvalidArgument);
}

TEST_CASE("arrival model estimation") {
  OdCounts one;
  one.rounds = 2;
  one.num_types = 1;
  one.days = 1;
  one.totals = {1.0, 0.0};
  const ArrivalModel m = estimate_arrival_model(one);
  CHECK(m.batch_sizes[0] == 1);
  CHECK(m.probs[0][0] == 1.0);
  CHECK(m.probs[0][1] == 0.0);
  // Empty round: only the null type.
  CHECK(m.probs[1][0] == 0.0);
  CHECK(m.probs[1][1] == 1.0);
}

TEST_CASE("uniform trips over two OD pairs are recovered") {
  // Two cells far apart; trips alternate between A->B and B->A at random.
  const BoundingBox box{40.0, 40.1, -74.0, -73.9};
  RngStream rng(5, 0, StreamPurpose::kVerification);
  std::string csv = kHeader;
  const int days = 10, per_round = 20;
  int64_t ab = 0;
  for (int d = 1; d <= days; ++d) {
    char day[16];
    std::snprintf(day, sizeof(day), "2016-01-%02d", d);
    for (int i = 0; i < per_round; ++i) {
      const int sec = static_cast<int>(rng.below(3600));
      if (rng.uniform() < 0.5) {
        csv += trip_line(day, sec, 40.01, -73.99, 40.09, -73.91);
        if (d < days) ++ab;
      } else {
        csv += trip_line(day, sec, 40.09, -73.91, 40.01, -73.99);
      }
    }
  }
  std::stringstream in(csv);
  TripReadReport report;
  const auto trips = read_trips_csv(in, report);
  CHECK(report.rows == days * per_round);
  CHECK(report.malformed == 0);
  TripInstanceParams p;
  p.box = box;
  p.cell_km = 4.0;
  p.rounds = 24;
  p.kappa = 2;
  const TripInstance built = build_trip_instance(trips, p);
  CHECK(built.test_days == std::vector<std::string>{"2016-01-10"});
  CHECK(built.train_days.size() == 9u);
  CHECK(built.num_cells == 2);
  const Instance& inst = built.instance;
  CHECK(validate_instance(inst).ok());
  CHECK(inst.num_types() == 5);  // 4 OD pairs plus null
  CHECK(inst.batch_size(0) == per_round);
  const double n = double(days - 1) * per_round;
  const double expect = ab / n;
  CHECK(inst.probs(0)[1] == doctest::Approx(expect));
  CHECK(std::fabs(inst.probs(0)[1] - 0.5) < 3 * std::sqrt(0.25 / n));
  CHECK(std::fabs(inst.probs(0)[2] - 0.5) < 3 * std::sqrt(0.25 / n));
  CHECK(inst.probs(0)[4] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(inst.probs(5)[4] == 1.0);
  const auto& meta = inst.metadata();
  CHECK(meta["test_days"][0] == "2016-01-10");
  // Groups never mix origins or include the null type.
  for (const auto& g : inst.catalog().groups()) {
    for (int v : g.members) {
      CHECK(v != 4);
      CHECK(v / 2 == g.members.front() / 2);
    }
  }
}

TEST_CASE("eleven active cells give 121 OD types") {
  const BoundingBox box = manhattan_box();
  const Grid grid(box, 2.0);
  // One point per cell centre, for the first 11 cells whose centre is in the box.
  std::vector<std::pair<double, double>> centres;
  const double km_lat = 111.32;
  const double km_lon = 111.32 * std::cos(0.5 * (box.lat_min + box.lat_max) * M_PI / 180);
  for (int c = 0; c < grid.num_cells() && centres.size() < 11; ++c) {
    const auto [x, y] = grid.center_km(c);
    const double lat = box.lat_min + y / km_lat, lon = box.lon_min + x / km_lon;
    const int got = grid.cell_of(lat, lon);
    if (got < 0) continue;
    REQUIRE(got == c);
    centres.push_back({lat, lon});
  }
  REQUIRE(centres.size() == 11);
  std::string csv = kHeader;
  for (int c = 0; c < 11; ++c) {
    const auto& a = centres[c];
    const auto& b = centres[(c + 1) % 11];
    csv += trip_line("2016-01-01", 60 * c, a.first, a.second, b.first, b.second);
  }
  csv += "garbage,row\n";
  csv += trip_line("2016-01-01", 100, 10.0, 10.0, 40.75, -73.98);
  std::stringstream in(csv);
  TripReadReport report;
  const auto trips = read_trips_csv(in, report);
  CHECK(report.malformed == 1);
  TripInstanceParams p;
  p.rounds = 240;
  p.test_days = 0;
  p.cell_km = 2.0;
  const TripInstance built = build_trip_instance(trips, p);
  CHECK(built.num_cells == 11);
  CHECK(built.dropped_outside == 1);
  CHECK(built.instance.num_types() == 122);
  CHECK(built.instance.rounds() == 240);
  CHECK(validate_instance(built.instance).ok());
}

TEST_CASE("trip files need a header and a training day") {
  std::stringstream empty("");
  TripReadReport report;
  CHECK_THROWS_AS(read_trips_csv(empty, report), IoError);
  std::stringstream wrong("a,b,c\n");
  CHECK_THROWS_AS(read_trips_csv(wrong, report), IoError);
  TripInstanceParams p;
  CHECK_THROWS_AS(build_trip_instance({}, p), InvalidArgument);
}

TEST_CASE("dropoff times set occupancy") {
  std::string csv =
      "pickup_datetime,pickup_lat,pickup_lon,dropoff_lat,dropoff_lon,dropoff_datetime\n"
      "2016-01-01 00:00:00,40.75,-73.98,40.75,-73.98,2016-01-01 00:25:00\n"
      "2016-01-01 00:01:00,40.75,-73.98,40.75,-73.98,2016-01-01 00:05:00\n";
  std::stringstream in(csv);
  TripReadReport report;
  const auto trips = read_trips_csv(in, report);
  REQUIRE(trips.size() == 2u);
  CHECK(trips[0].duration_seconds == 1500);
  TripInstanceParams p;
  p.rounds = 144;  // 10 minute rounds
  p.test_days = 0;
  p.duration_quantile = 1.0;
  const TripInstance built = build_trip_instance(trips, p);
  CHECK(built.num_cells == 1);
  // Longest trip 25 minutes spans 3 rounds.
  CHECK(built.instance.occupancy(0, 0, 0).constant_value() == 3);
  CHECK(built.instance.weight(0, 0, 0) == doctest::Approx(10.0 + 0.5 * 3));
}
