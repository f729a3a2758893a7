#include "opera/offline.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "opera/errors.hpp"
#include "opera/stats.hpp"

namespace opera {
namespace {

bool formable(const std::vector<std::pair<int, int>>& mult,
              std::span<const int> counts) {
  for (auto [v, n] : mult) {
    if (counts[v] < n) return false;
  }
  return true;
}

void consume(const std::vector<std::pair<int, int>>& mult,
             std::vector<int>& counts, int sign) {
  for (auto [v, n] : mult) counts[v] -= sign * n;
}

struct Option {
  int group;
  double weight;
};

// Positive-weight groups formable from `counts`, heaviest first, ties by
// catalog index.
std::vector<Option> options_for(const Instance& inst, int u, int t,
                                const std::vector<int>& formable_groups) {
  std::vector<Option> out;
  for (int g : formable_groups) {
    const double w = inst.weight(u, g, t);
    if (w > 0.0) out.push_back({g, w});
  }
  std::stable_sort(out.begin(), out.end(), [](const Option& a, const Option& b) {
    return a.weight > b.weight;
  });
  return out;
}

std::vector<int> formable_groups(const Instance& inst,
                                 std::span<const int> counts) {
  std::vector<int> out;
  const auto& cat = inst.catalog();
  for (int g = 0; g < cat.size(); ++g) {
    bool ok = true;
    for (int v : cat[g].members) {
      if (counts[v] < cat[g].multiplicity(v)) {
        ok = false;
        break;
      }
    }
    if (ok) out.push_back(g);
  }
  return out;
}

std::vector<int> type_counts(const Instance& inst,
                             const std::vector<int>& arrivals) {
  std::vector<int> c(inst.num_types(), 0);
  for (int v : arrivals) {
    if (v < 0 || v >= inst.num_types()) {
      throw InvalidArgument("arrival type out of range");
    }
    ++c[v];
  }
  return c;
}

// Depth-first search over (round, resource) decision points.
class OfflineSearch {
 public:
  OfflineSearch(const Instance& inst, const Realization& rz, int64_t limit)
      : inst_(inst), rz_(rz), limit_(limit) {
    const int T = inst.rounds();
    const int U = inst.num_resources();
    if (static_cast<int>(rz.arrivals.size()) != T) {
      throw InvalidArgument("realization must cover every round");
    }
    if (rz.durations.empty()) {
      for (const auto& d : inst.distinct_occupancies()) {
        if (!d.is_constant()) {
          throw InvalidArgument(
              "non-constant occupancy needs realized durations");
        }
      }
    } else if (rz.durations.size() !=
               static_cast<size_t>(U) * inst.num_groups() * T) {
      throw InvalidArgument("realized durations have the wrong size");
    }
    mult_.resize(inst.num_groups());
    for (int g = 0; g < inst.num_groups(); ++g) {
      mult_[g] = inst.catalog()[g].multiplicities();
    }
    work_.resize(T);
    options_.resize(static_cast<size_t>(T) * U);
    bound_.assign(static_cast<size_t>(T) * U + 1, 0.0);
    for (int t = 0; t < T; ++t) {
      if (static_cast<int>(rz.arrivals[t].size()) != inst.batch_size(t)) {
        throw InvalidArgument("round " + std::to_string(t) +
                              " has the wrong number of arrivals");
      }
      work_[t] = type_counts(inst, rz.arrivals[t]);
      auto groups = formable_groups(inst, work_[t]);
      for (int u = 0; u < U; ++u) {
        options_[t * U + u] = options_for(inst, u, t, groups);
      }
    }
    for (int k = T * U - 1; k >= 0; --k) {
      const auto& o = options_[k];
      bound_[k] = bound_[k + 1] + (o.empty() ? 0.0 : o.front().weight);
    }
    busy_until_.assign(U, 0);
  }

  OfflineResult run() {
    dfs(0, 0.0);
    result_.nodes = nodes_;
    return result_;
  }

 private:
  int duration(int u, int g, int t) const {
    if (rz_.durations.empty()) {
      return inst_.occupancy(u, g, t).constant_value();
    }
    return rz_.durations[inst_.cell(u, g, t)];
  }

  void dfs(int k, double value) {
    if (++nodes_ > limit_) {
      throw SizeLimitExceeded("offline search exceeded " +
                              std::to_string(limit_) + " nodes");
    }
    const int U = inst_.num_resources();
    const int end = inst_.rounds() * U;
    if (k == end) {
      if (value > result_.value) {
        result_.value = value;
        result_.assignments = path_;
      }
      return;
    }
    if (value + bound_[k] <= result_.value) return;
    const int t = k / U;
    const int u = k % U;
    if (t >= busy_until_[u]) {
      for (const Option& o : options_[k]) {
        if (!formable(mult_[o.group], work_[t])) continue;
        consume(mult_[o.group], work_[t], 1);
        const int saved = busy_until_[u];
        busy_until_[u] = t + duration(u, o.group, t);
        path_.push_back({t, u, o.group});
        dfs(k + 1, value + o.weight);
        path_.pop_back();
        busy_until_[u] = saved;
        consume(mult_[o.group], work_[t], -1);
      }
    }
    dfs(k + 1, value);
  }

  const Instance& inst_;
  const Realization& rz_;
  const int64_t limit_;
  std::vector<std::vector<std::pair<int, int>>> mult_;
  std::vector<std::vector<int>> work_;
  std::vector<std::vector<Option>> options_;
  std::vector<double> bound_;
  std::vector<int> busy_until_;
  std::vector<Assignment> path_;
  OfflineResult result_;
  int64_t nodes_ = 0;
};

}  // namespace

OfflineResult offline_optimal_fixed(const Instance& inst,
                                    const Realization& realization,
                                    int64_t node_limit) {
  return OfflineSearch(inst, realization, node_limit).run();
}

double expected_offline_optimal(const Instance& inst, int64_t node_limit) {
  for (const auto& d : inst.distinct_occupancies()) {
    if (!d.is_constant()) {
      throw InvalidArgument("expected offline optimum needs constant occupancy");
    }
  }
  const int T = inst.rounds();
  const int V = inst.num_types();
  // Per round: every count vector of b^t arrivals with its multinomial
  // probability.
  struct Pattern {
    std::vector<int> arrivals;
    double prob;
  };
  std::vector<std::vector<Pattern>> per_round(T);
  double total = 1.0;
  for (int t = 0; t < T; ++t) {
    const int b = inst.batch_size(t);
    auto p = inst.probs(t);
    std::vector<int> cnt(V, 0);
    auto rec = [&](auto&& self, int v, int left) -> void {
      if (v == V - 1) {
        cnt[v] = left;
        double lf = std::lgamma(b + 1.0);
        double prob_log = lf;
        bool zero = false;
        for (int x = 0; x < V; ++x) {
          prob_log -= std::lgamma(cnt[x] + 1.0);
          if (cnt[x] > 0) {
            if (p[x] <= 0.0) {
              zero = true;
              break;
            }
            prob_log += cnt[x] * std::log(p[x]);
          }
        }
        if (!zero) {
          Pattern pat;
          for (int x = 0; x < V; ++x) {
            pat.arrivals.insert(pat.arrivals.end(), cnt[x], x);
          }
          pat.prob = std::exp(prob_log);
          per_round[t].push_back(std::move(pat));
        }
        return;
      }
      for (int c = 0; c <= left; ++c) {
        cnt[v] = c;
        self(self, v + 1, left - c);
      }
    };
    rec(rec, 0, b);
    total *= static_cast<double>(per_round[t].size());
    if (total > static_cast<double>(kMaxEnumeratedSequences)) {
      throw SizeLimitExceeded("too many arrival patterns to enumerate");
    }
  }
  std::vector<double> terms;
  Realization rz;
  rz.arrivals.resize(T);
  std::vector<size_t> idx(T, 0);
  while (true) {
    double prob = 1.0;
    for (int t = 0; t < T; ++t) {
      rz.arrivals[t] = per_round[t][idx[t]].arrivals;
      prob *= per_round[t][idx[t]].prob;
    }
    terms.push_back(prob * offline_optimal_fixed(inst, rz, node_limit).value);
    int t = T - 1;
    while (t >= 0 && ++idx[t] == per_round[t].size()) idx[t--] = 0;
    if (t < 0) break;
  }
  return pairwise_sum(terms);
}

RoundMatching greedy_matching_ilp(const Instance& inst, int round,
                                  std::span<const int> available,
                                  std::span<const int> counts,
                                  int64_t node_limit) {
  RoundMatching best;
  const int n = static_cast<int>(available.size());
  if (n == 0) return best;
  const auto groups = formable_groups(inst, counts);
  std::vector<std::vector<Option>> options(n);
  for (int i = 0; i < n; ++i) {
    options[i] = options_for(inst, available[i], round, groups);
  }
  std::vector<std::vector<std::pair<int, int>>> mult(inst.num_groups());
  for (int g : groups) mult[g] = inst.catalog()[g].multiplicities();
  std::vector<int> work(counts.begin(), counts.end());

  // Incumbent from the heaviest-first heuristic.
  {
    struct Cand {
      double w;
      int i;
      int g;
    };
    std::vector<Cand> all;
    for (int i = 0; i < n; ++i) {
      for (const Option& o : options[i]) all.push_back({o.weight, i, o.group});
    }
    std::stable_sort(all.begin(), all.end(),
                     [](const Cand& a, const Cand& b) { return a.w > b.w; });
    std::vector<char> used(n, 0);
    std::vector<Assignment> chosen(n, {-1, -1, -1});
    for (const Cand& c : all) {
      if (used[c.i] || !formable(mult[c.g], work)) continue;
      used[c.i] = 1;
      consume(mult[c.g], work, 1);
      chosen[c.i] = {round, available[c.i], c.g};
      best.value += c.w;
    }
    for (int i = 0; i < n; ++i) {
      if (used[i]) best.assignments.push_back(chosen[i]);
    }
    std::copy(counts.begin(), counts.end(), work.begin());
  }

  std::vector<double> bound(n + 1, 0.0);
  for (int i = n - 1; i >= 0; --i) {
    bound[i] = bound[i + 1] + (options[i].empty() ? 0.0 : options[i][0].weight);
  }
  if (best.value >= bound[0]) return best;

  std::vector<Assignment> path;
  int64_t nodes = 0;
  bool stopped = false;
  auto dfs = [&](auto&& self, int i, double value) -> void {
    if (stopped) return;
    if (++nodes > node_limit) {
      stopped = true;
      return;
    }
    if (i == n) {
      if (value > best.value) {
        best.value = value;
        best.assignments = path;
      }
      return;
    }
    if (value + bound[i] <= best.value) return;
    for (const Option& o : options[i]) {
      if (!formable(mult[o.group], work)) continue;
      consume(mult[o.group], work, 1);
      path.push_back({round, available[i], o.group});
      self(self, i + 1, value + o.weight);
      path.pop_back();
      consume(mult[o.group], work, -1);
      if (stopped) return;
    }
    self(self, i + 1, value);
  };
  dfs(dfs, 0, 0.0);
  best.nodes = nodes;
  best.exact = !stopped;
  return best;
}

}  // namespace opera
