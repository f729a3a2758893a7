#include "opera/model.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "opera/errors.hpp"

namespace opera {

OccupancyDistribution OccupancyDistribution::constant(int rounds) {
  if (rounds < 1) throw InvalidArgument("occupancy must be at least 1 round");
  OccupancyDistribution d;
  d.support_ = {rounds};
  d.probs_ = {1.0};
  return d;
}

OccupancyDistribution OccupancyDistribution::categorical(
    std::vector<int> support, std::vector<double> probs) {
  if (support.size() != probs.size() || support.empty()) {
    throw InvalidArgument("occupancy support and probabilities differ in size");
  }
  std::map<int, double> merged;
  double total = 0.0;
  for (size_t i = 0; i < support.size(); ++i) {
    if (support[i] < 1) throw InvalidArgument("occupancy support below 1");
    if (!(probs[i] >= 0.0)) {
      throw InvalidArgument("negative occupancy probability");
    }
    total += probs[i];
    if (probs[i] > 0.0) merged[support[i]] += probs[i];
  }
  if (std::abs(total - 1.0) > kProbabilityTolerance) {
    throw InvalidArgument("occupancy probabilities do not sum to 1");
  }
  OccupancyDistribution d;
  d.support_.clear();
  d.probs_.clear();
  for (auto [c, p] : merged) {
    d.support_.push_back(c);
    d.probs_.push_back(p);
  }
  if (d.support_.size() == 1) d.probs_[0] = 1.0;
  return d;
}

double OccupancyDistribution::survival(int d) const {
  double s = 0.0;
  for (size_t i = 0; i < support_.size(); ++i) {
    if (support_[i] > d) s += probs_[i];
  }
  return std::min(s, 1.0);
}

int OccupancyDistribution::sample(RngStream& rng) const {
  if (is_constant()) return support_.front();
  return support_[rng.categorical(probs_)];
}

Instance::Instance(int kappa, std::vector<VertexType> types,
                   std::vector<Resource> resources, ArrivalModel arrivals,
                   GroupCatalog catalog)
    : kappa_(kappa),
      types_(std::move(types)),
      resources_(std::move(resources)),
      arrivals_(std::move(arrivals)),
      catalog_(std::move(catalog)) {
  size_t n = static_cast<size_t>(num_resources()) * num_groups() * rounds();
  weights_.assign(n, 0.0);
  distributions_ = {OccupancyDistribution::constant(1)};
  occupancy_ref_.assign(n, 0);
}

void Instance::set_weight(int u, int g, double w) {
  for (int t = 0; t < rounds(); ++t) set_weight(u, g, t, w);
}

int Instance::intern(const OccupancyDistribution& d) {
  if (d.is_constant()) {
    // Constants are common; a linear scan over the few distinct ones is cheap.
    for (size_t i = 0; i < distributions_.size(); ++i) {
      if (distributions_[i] == d) return static_cast<int>(i);
    }
  } else {
    for (size_t i = distributions_.size(); i-- > 0;) {
      if (distributions_[i] == d) return static_cast<int>(i);
    }
  }
  distributions_.push_back(d);
  return static_cast<int>(distributions_.size() - 1);
}

void Instance::set_occupancy(int u, int g, int t,
                             const OccupancyDistribution& d) {
  occupancy_ref_[cell(u, g, t)] = intern(d);
}

void Instance::set_occupancy(int u, int g, const OccupancyDistribution& d) {
  int ref = intern(d);
  for (int t = 0; t < rounds(); ++t) occupancy_ref_[cell(u, g, t)] = ref;
}

int Instance::max_occupancy() const {
  int m = 1;
  std::vector<bool> used(distributions_.size(), false);
  for (int32_t r : occupancy_ref_) used[r] = true;
  for (size_t i = 0; i < distributions_.size(); ++i) {
    if (used[i]) m = std::max(m, distributions_[i].max_value());
  }
  return m;
}

ValidationReport validate_instance(const Instance& inst) {
  ValidationReport rep;
  auto fail = [&](std::string msg) { rep.failures.push_back(std::move(msg)); };
  const int kappa = inst.kappa();
  if (kappa < 1) fail("kappa must be at least 1");
  if (inst.num_types() < 1) fail("instance has no vertex types");
  if (inst.num_resources() < 1) fail("instance has no resources");
  if (inst.rounds() < 1) fail("instance has no rounds");
  for (int v = 0; v < inst.num_types(); ++v) {
    if (inst.vertex_types()[v].id != v) {
      fail("vertex type ids are not dense at position " + std::to_string(v));
      break;
    }
  }
  for (int u = 0; u < inst.num_resources(); ++u) {
    const auto& r = inst.resources()[u];
    if (r.id != u) {
      fail("resource ids are not dense at position " + std::to_string(u));
    }
    if (r.capacity != kappa) {
      fail("resource " + std::to_string(u) + " has capacity " +
           std::to_string(r.capacity) + " but kappa is " +
           std::to_string(kappa));
    }
  }
  const auto& cat = inst.catalog();
  if (cat.num_types() != inst.num_types() || cat.kappa() != kappa) {
    fail("group catalog does not match the vertex types and kappa");
  }
  const auto& arr = inst.arrivals();
  if (arr.probs.size() != arr.batch_sizes.size()) {
    fail("arrival probabilities and batch sizes cover different horizons");
    return rep;
  }
  for (int t = 0; t < arr.rounds(); ++t) {
    const int b = arr.batch_sizes[t];
    if (b < 1) {
      fail("batch size at t=" + std::to_string(t + 1) + " is below 1");
    } else if (b <= kappa && !inst.relax_batch_size()) {
      fail("batch size " + std::to_string(b) + " at t=" + std::to_string(t + 1) +
           " does not exceed kappa " + std::to_string(kappa) +
           " (b^t > kappa is required unless the relaxation flag is set)");
    }
    const auto& row = arr.probs[t];
    if (static_cast<int>(row.size()) != inst.num_types()) {
      fail("arrival row at t=" + std::to_string(t + 1) + " has wrong length");
      continue;
    }
    double sum = 0.0;
    bool negative = false;
    for (double p : row) {
      negative = negative || !(p >= 0.0);
      sum += p;
    }
    if (negative) {
      fail("negative arrival probability at t=" + std::to_string(t + 1));
    }
    if (std::abs(sum - 1.0) > kProbabilityTolerance) {
      fail("arrival probabilities do not sum to 1 at t=" +
           std::to_string(t + 1));
    }
  }
  int bad_weights = 0;
  for (int u = 0; u < inst.num_resources(); ++u) {
    for (int g = 0; g < inst.num_groups(); ++g) {
      for (int t = 0; t < inst.rounds(); ++t) {
        double w = inst.weight(u, g, t);
        if (!(w >= 0.0) || !std::isfinite(w)) ++bad_weights;
      }
    }
  }
  if (bad_weights) {
    fail(std::to_string(bad_weights) + " weights are negative or not finite");
  }
  for (const auto& d : inst.distinct_occupancies()) {
    double s = 0.0;
    for (double p : d.probs()) s += p;
    if (d.support().front() < 1 ||
        std::abs(s - 1.0) > kProbabilityTolerance) {
      fail("an occupancy distribution is not a distribution over {1,2,...}");
      break;
    }
  }
  return rep;
}

void require_valid(const Instance& inst) {
  auto rep = validate_instance(inst);
  if (rep.ok()) return;
  std::ostringstream os;
  os << "invalid instance:";
  for (const auto& f : rep.failures) os << "\n  " << f;
  throw InvalidArgument(os.str());
}

}  // namespace opera
