#include "opera/trips.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <set>
#include <sstream>

#include "opera/errors.hpp"

namespace opera {

namespace {

constexpr double kKmPerDegree = 111.32;
constexpr int kSecondsPerDay = 86400;

// Seconds since the epoch for "YYYY-MM-DD HH:MM:SS"; false if malformed.
bool parse_datetime(const std::string& s, std::string& day, int& second_of_day,
                    int64_t& epoch) {
  int y, mo, d, h, mi, sec;
  char tail;
  if (std::sscanf(s.c_str(), "%d-%d-%d %d:%d:%d%c", &y, &mo, &d, &h, &mi, &sec,
                  &tail) != 6) {
    return false;
  }
  using namespace std::chrono;
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)},
                           std::chrono::day{static_cast<unsigned>(d)}};
  if (!ymd.ok() || h < 0 || h > 23 || mi < 0 || mi > 59 || sec < 0 ||
      sec > 60) {
    return false;
  }
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", y, mo, d);
  day = buf;
  second_of_day = std::min(h * 3600 + mi * 60 + sec, kSecondsPerDay - 1);
  epoch = static_cast<int64_t>(sys_days{ymd}.time_since_epoch().count()) *
              kSecondsPerDay +
          second_of_day;
  return true;
}

bool parse_double(const std::string& s, double& out) {
  char* end = nullptr;
  out = std::strtod(s.c_str(), &end);
  return end != s.c_str() && *end == '\0' && std::isfinite(out);
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string f;
  while (std::getline(ss, f, ',')) {
    while (!f.empty() && (f.back() == '\r' || f.back() == ' ')) f.pop_back();
    while (!f.empty() && f.front() == ' ') f.erase(f.begin());
    out.push_back(f);
  }
  return out;
}

double quantile(std::vector<double> xs, double q) {
  std::sort(xs.begin(), xs.end());
  const double pos = q * static_cast<double>(xs.size() - 1);
  const size_t lo = static_cast<size_t>(std::floor(pos));
  const size_t hi = std::min(lo + 1, xs.size() - 1);
  return xs[lo] + (pos - static_cast<double>(lo)) * (xs[hi] - xs[lo]);
}

}  // namespace

BoundingBox manhattan_box() { return {40.700, 40.880, -74.020, -73.910}; }

Grid::Grid(const BoundingBox& box, double cell_km) : box_(box), cell_km_(cell_km) {
  if (!(cell_km > 0.0)) throw InvalidArgument("cell size must be positive");
  if (!(box.lat_max > box.lat_min) || !(box.lon_max > box.lon_min)) {
    throw InvalidArgument("bounding box is empty");
  }
  const double mid = 0.5 * (box.lat_min + box.lat_max) * M_PI / 180.0;
  km_per_lat_ = kKmPerDegree;
  km_per_lon_ = kKmPerDegree * std::cos(mid);
  const double width = (box.lon_max - box.lon_min) * km_per_lon_;
  const double height = (box.lat_max - box.lat_min) * km_per_lat_;
  cols_ = std::max(1, static_cast<int>(std::ceil(width / cell_km - 1e-9)));
  rows_ = std::max(1, static_cast<int>(std::ceil(height / cell_km - 1e-9)));
}

int Grid::cell_of(double lat, double lon) const {
  if (!(lat >= box_.lat_min && lat <= box_.lat_max && lon >= box_.lon_min &&
        lon <= box_.lon_max)) {
    return -1;
  }
  const double x = (lon - box_.lon_min) * km_per_lon_;
  const double y = (lat - box_.lat_min) * km_per_lat_;
  const int c = std::min(cols_ - 1, static_cast<int>(x / cell_km_));
  const int r = std::min(rows_ - 1, static_cast<int>(y / cell_km_));
  return r * cols_ + c;
}

std::pair<double, double> Grid::center_km(int cell) const {
  return {(cell % cols_ + 0.5) * cell_km_, (cell / cols_ + 0.5) * cell_km_};
}

double Grid::distance_km(int a, int b) const {
  const auto [ax, ay] = center_km(a);
  const auto [bx, by] = center_km(b);
  return std::hypot(ax - bx, ay - by);
}

Discretized grid_discretize(std::span<const std::pair<double, double>> points,
                            const Grid& grid) {
  Discretized out;
  for (const auto& [lat, lon] : points) {
    const int c = grid.cell_of(lat, lon);
    if (c < 0) {
      ++out.dropped;
    } else {
      out.cells.push_back(c);
    }
  }
  return out;
}

std::vector<Trip> read_trips_csv(std::istream& in, TripReadReport& report) {
  report = {};
  std::string line;
  if (!std::getline(in, line)) throw IoError("trip file is empty");
  const auto header = split_csv(line);
  if (header.size() < 5 || header[0] != "pickup_datetime") {
    throw IoError("trip file must start with a pickup_datetime header");
  }
  const bool has_dropoff = header.size() >= 6 && header[5] == "dropoff_datetime";
  std::vector<Trip> trips;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    ++report.rows;
    const auto f = split_csv(line);
    Trip trip;
    int64_t pickup = 0;
    bool ok = f.size() >= 5 &&
              parse_datetime(f[0], trip.day, trip.second_of_day, pickup) &&
              parse_double(f[1], trip.pickup_lat) &&
              parse_double(f[2], trip.pickup_lon) &&
              parse_double(f[3], trip.dropoff_lat) &&
              parse_double(f[4], trip.dropoff_lon);
    if (ok && has_dropoff && f.size() >= 6 && !f[5].empty()) {
      std::string day;
      int sod = 0;
      int64_t dropoff = 0;
      ok = parse_datetime(f[5], day, sod, dropoff) && dropoff >= pickup;
      if (ok) trip.duration_seconds = static_cast<int>(dropoff - pickup);
    }
    if (!ok) {
      ++report.malformed;
      continue;
    }
    trips.push_back(std::move(trip));
  }
  return trips;
}

ArrivalModel estimate_arrival_model(const OdCounts& counts) {
  if (counts.rounds < 1 || counts.num_types < 1 || counts.days < 1) {
    throw InvalidArgument("arrival model needs rounds, types and days");
  }
  const int V = counts.num_types;
  ArrivalModel model;
  model.batch_sizes.resize(counts.rounds);
  model.probs.assign(counts.rounds, std::vector<double>(V + 1, 0.0));
  for (int t = 0; t < counts.rounds; ++t) {
    double total = 0.0;
    for (int v = 0; v < V; ++v) total += counts.totals[size_t(t) * V + v];
    const double mean = total / counts.days;
    const int b = std::max(1, static_cast<int>(std::lround(mean)));
    model.batch_sizes[t] = b;
    auto& row = model.probs[t];
    const double denom = std::max(static_cast<double>(b), mean);
    double used = 0.0;
    for (int v = 0; v < V; ++v) {
      row[v] = counts.totals[size_t(t) * V + v] / counts.days / denom;
      used += row[v];
    }
    row[V] = std::max(0.0, 1.0 - used);
  }
  return model;
}

TripInstance build_trip_instance(const std::vector<Trip>& trips,
                                 const TripInstanceParams& params) {
  if (params.rounds < 1 || params.resources < 1 || params.kappa < 1) {
    throw InvalidArgument("rounds, resources and kappa must be positive");
  }
  const Grid grid(params.box, params.cell_km);
  std::set<std::string> day_set;
  for (const Trip& t : trips) day_set.insert(t.day);
  std::vector<std::string> days(day_set.begin(), day_set.end());
  int test_days = params.test_days;
  if (test_days < 0) test_days = days.size() >= 2 ? 1 : 0;
  if (days.empty() || static_cast<int>(days.size()) <= test_days) {
    throw InvalidArgument("need at least one training day");
  }
  TripInstance out;
  out.train_days.assign(days.begin(), days.end() - test_days);
  out.test_days.assign(days.end() - test_days, days.end());
  const std::set<std::string> train(out.train_days.begin(), out.train_days.end());

  // Only cells touched by a training trip become part of the type space.
  std::vector<int> active(grid.num_cells(), -1);
  std::vector<int> cell_ids;
  for (const Trip& trip : trips) {
    if (!train.count(trip.day)) continue;
    const int o = grid.cell_of(trip.pickup_lat, trip.pickup_lon);
    const int d = grid.cell_of(trip.dropoff_lat, trip.dropoff_lon);
    if (o < 0 || d < 0) continue;
    for (int c : {o, d}) {
      if (active[c] < 0) {
        active[c] = 0;
        cell_ids.push_back(c);
      }
    }
  }
  if (cell_ids.empty()) throw InvalidArgument("no training trip inside the box");
  std::sort(cell_ids.begin(), cell_ids.end());
  for (size_t i = 0; i < cell_ids.size(); ++i) active[cell_ids[i]] = static_cast<int>(i);
  const int cells = static_cast<int>(cell_ids.size());
  const int V = cells * cells;
  if (static_cast<int64_t>(V) + 1 > 100000) {
    throw SizeLimitExceeded("grid yields too many OD types");
  }
  out.num_cells = cells;
  out.grid_cells = grid.num_cells();

  const int T = params.rounds;
  const double round_seconds = static_cast<double>(kSecondsPerDay) / T;
  OdCounts counts;
  counts.rounds = T;
  counts.num_types = V;
  counts.days = static_cast<int>(out.train_days.size());
  counts.totals.assign(static_cast<size_t>(T) * V, 0.0);
  std::map<int, std::vector<double>> durations;
  for (const Trip& trip : trips) {
    const int o = grid.cell_of(trip.pickup_lat, trip.pickup_lon);
    const int d = grid.cell_of(trip.dropoff_lat, trip.dropoff_lon);
    if (o < 0 || d < 0) {
      ++out.dropped_outside;
      continue;
    }
    if (!train.count(trip.day)) {
      ++out.test_trips;
      continue;
    }
    const int v = active[o] * cells + active[d];
    const int t = std::min(T - 1, static_cast<int>(trip.second_of_day / round_seconds));
    counts.totals[size_t(t) * V + v] += 1.0;
    if (trip.duration_seconds >= 0) durations[v].push_back(trip.duration_seconds);
  }
  ArrivalModel arrivals = estimate_arrival_model(counts);

  // Occupancy per OD type, in rounds.
  std::vector<int> occupancy(V);
  for (int v = 0; v < V; ++v) {
    double seconds;
    auto it = durations.find(v);
    if (it != durations.end()) {
      seconds = quantile(it->second, params.duration_quantile);
    } else {
      seconds = grid.distance_km(cell_ids[v / cells], cell_ids[v % cells]) /
                params.speed_kmh * 3600.0;
    }
    occupancy[v] = std::max(1, static_cast<int>(std::ceil(seconds / round_seconds - 1e-9)));
  }

  std::vector<VertexType> types(V + 1);
  for (int v = 0; v < V; ++v) {
    types[v] = {v, "o" + std::to_string(cell_ids[v / cells]) + "-d" +
                      std::to_string(cell_ids[v % cells])};
  }
  types[V] = {V, "null"};
  std::vector<Resource> resources(params.resources);
  for (int u = 0; u < params.resources; ++u) resources[u] = {u, params.kappa};
  GroupCatalog catalog = GroupCatalog::pruned(
      V + 1, params.kappa, [V, cells](const GroupType& g) {
        const int origin = g.members.front() / cells;
        for (int v : g.members) {
          if (v == V || v / cells != origin) return false;
        }
        return true;
      });
  Instance inst(params.kappa, std::move(types), std::move(resources),
                std::move(arrivals), std::move(catalog));
  inst.set_relax_batch_size(true);
  for (int g = 0; g < inst.num_groups(); ++g) {
    int c = 1;
    double w = 0.0;
    for (int v : inst.catalog()[g].members) {
      c = std::max(c, occupancy[v]);
      w += params.base_revenue + params.revenue_per_round * occupancy[v];
    }
    const auto dist = OccupancyDistribution::constant(std::min(c, T));
    for (int u = 0; u < inst.num_resources(); ++u) {
      inst.set_occupancy(u, g, dist);
      inst.set_weight(u, g, w);
    }
  }
  auto& meta = inst.metadata();
  meta["generator"] = "trips";
  meta["cell_km"] = params.cell_km;
  meta["grid"] = {{"cols", grid.cols()}, {"rows", grid.rows()}};
  meta["cells"] = cell_ids;
  meta["box"] = {params.box.lat_min, params.box.lat_max, params.box.lon_min,
                 params.box.lon_max};
  meta["train_days"] = out.train_days;
  meta["test_days"] = out.test_days;
  meta["dropped_outside"] = out.dropped_outside;
  out.instance = std::move(inst);
  return out;
}

}  // namespace opera
