#pragma once

#include <string>
#include <vector>

#include "opera/grouping.hpp"
#include "opera/model.hpp"

namespace opera::testing {

// Instance over the full catalog with every weight 0 and occupancy 1.
inline Instance make_instance(int resources, int types, int kappa,
                              std::vector<int> batch_sizes,
                              std::vector<std::vector<double>> probs,
                              bool relax = false) {
  std::vector<VertexType> vt;
  for (int v = 0; v < types; ++v) vt.push_back({v, "v" + std::to_string(v + 1)});
  std::vector<Resource> res;
  for (int u = 0; u < resources; ++u) res.push_back({u, kappa});
  Instance inst(kappa, std::move(vt), std::move(res),
                ArrivalModel{std::move(batch_sizes), std::move(probs)},
                GroupCatalog::full(types, kappa));
  inst.set_relax_batch_size(relax);
  return inst;
}

inline int group_index(const Instance& inst, std::vector<int> members) {
  return inst.catalog().index_of(members);
}

}  // namespace opera::testing
