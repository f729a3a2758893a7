#include "opera/synthetic.hpp"

#include "opera/errors.hpp"

namespace opera {

Instance generate_synthetic(const SyntheticParams& params, uint64_t seed) {
  if (params.resources < 1 || params.types < 1 || params.rounds < 1 ||
      params.kappa < 1 || params.max_occupancy < 1) {
    throw InvalidArgument("synthetic parameters must be positive");
  }
  if (params.base_revenue < 0.0 || params.revenue_per_round < 0.0) {
    throw InvalidArgument("revenue parameters must be nonnegative");
  }
  ArrivalModel arrivals;
  if (params.batch_sizes.empty()) {
    arrivals.batch_sizes.assign(params.rounds, params.batch_size);
  } else if (static_cast<int>(params.batch_sizes.size()) == params.rounds) {
    arrivals.batch_sizes = params.batch_sizes;
  } else {
    throw InvalidArgument("batch_sizes must have one entry per round");
  }

  RngStream rng(seed, 0, StreamPurpose::kGenerator);
  arrivals.probs.assign(params.rounds, std::vector<double>(params.types));
  for (auto& row : arrivals.probs) {
    // Normalized unit exponentials are uniform on the simplex.
    double sum = 0.0;
    for (double& p : row) {
      p = rng.exponential();
      sum += p;
    }
    for (double& p : row) p /= sum;
  }

  std::vector<VertexType> types(params.types);
  for (int v = 0; v < params.types; ++v) types[v] = {v, "v" + std::to_string(v)};
  std::vector<Resource> resources(params.resources);
  for (int u = 0; u < params.resources; ++u) resources[u] = {u, params.kappa};

  Instance inst(params.kappa, std::move(types), std::move(resources),
                std::move(arrivals),
                GroupCatalog::full(params.types, params.kappa));
  inst.set_relax_batch_size(params.relax_batch_size);
  for (int u = 0; u < inst.num_resources(); ++u) {
    for (int g = 0; g < inst.num_groups(); ++g) {
      const int c = 1 + static_cast<int>(rng.below(params.max_occupancy));
      inst.set_occupancy(u, g, OccupancyDistribution::constant(c));
      inst.set_weight(u, g, params.base_revenue + params.revenue_per_round * c);
    }
  }
  auto& meta = inst.metadata();
  meta["generator"] = "synthetic";
  meta["seed"] = seed;
  meta["base_revenue"] = params.base_revenue;
  meta["revenue_per_round"] = params.revenue_per_round;
  meta["max_occupancy"] = params.max_occupancy;
  return inst;
}

}  // namespace opera
