#pragma once

#include <cstdint>
#include <vector>

#include "opera/model.hpp"

namespace opera {

struct SyntheticParams {
  int resources = 10;
  int types = 10;
  int rounds = 200;
  int kappa = 2;
  int batch_size = 20;             // used for every round unless overridden
  std::vector<int> batch_sizes;    // optional per-round override
  double base_revenue = 10.0;
  double revenue_per_round = 0.5;  // w = base + revenue_per_round * c
  int max_occupancy = 60;          // c ~ U{1..max_occupancy}
  bool relax_batch_size = false;
};

// Arrival rows uniform on the simplex, one occupancy constant per
// (resource, group) drawn uniformly and held for every round, and weights
// base + revenue_per_round * c. A pure function of (params, seed).
Instance generate_synthetic(const SyntheticParams& params, uint64_t seed);

}  // namespace opera
