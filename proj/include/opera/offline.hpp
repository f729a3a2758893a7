#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "opera/model.hpp"

namespace opera {

struct Assignment {
  int round = 0;
  int resource = 0;
  int group = 0;
  friend bool operator==(const Assignment&, const Assignment&) = default;
};

// One fixed draw of everything random in an episode.
struct Realization {
  std::vector<std::vector<int>> arrivals;  // [t] -> b^t vertex types
  // Occupancy draw for each (u, g, t) cell, indexed like Instance::cell.
  // May be empty when every occupancy distribution is a constant.
  std::vector<int> durations;
};

inline constexpr int64_t kDefaultNodeLimit = 1'000'000;

struct OfflineResult {
  double value = 0.0;
  std::vector<Assignment> assignments;
  int64_t nodes = 0;
};

// Maximum total weight of an integral assignment for a fixed realization:
// each idle resource takes at most one group per round, groups use each
// arrived vertex at most once, and an assignment keeps the resource busy for
// its realized duration. Exact depth-first branch and bound; throws
// SizeLimitExceeded past node_limit.
OfflineResult offline_optimal_fixed(const Instance& inst,
                                    const Realization& realization,
                                    int64_t node_limit = kDefaultNodeLimit);

inline constexpr int64_t kMaxEnumeratedSequences = 100'000;

// Sum over arrival realizations of P(a) times the offline optimum. Requires
// constant occupancy; throws SizeLimitExceeded when there are more than
// kMaxEnumeratedSequences arrival count patterns.
double expected_offline_optimal(const Instance& inst,
                                int64_t node_limit = kDefaultNodeLimit);

struct RoundMatching {
  double value = 0.0;
  std::vector<Assignment> assignments;
  bool exact = true;  // false when the node limit forced the heuristic
  int64_t nodes = 0;
};

// Maximum-weight assignment for a single round. `available` lists idle
// resources; `counts` is the number of arrived vertices of each type. When
// exact search would exceed node_limit the best assignment found so far is
// returned, which is never worse than the weight-ordered heuristic.
RoundMatching greedy_matching_ilp(const Instance& inst, int round,
                                  std::span<const int> available,
                                  std::span<const int> counts,
                                  int64_t node_limit = kDefaultNodeLimit);

}  // namespace opera
