#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "opera/grouping.hpp"
#include "opera/lp.hpp"
#include "opera/model.hpp"
#include "opera/simulator.hpp"

namespace opera {

// Root in (0, 1) of gamma = (1 - gamma)^(kappa + 1), by bisection.
double gamma_fixed_point(int kappa);

// Picks at most one resource from a safe set. probs[k] is the rule value for
// safe[k] (ascending resource order). When some value exceeds 1 or the total
// does, the values are rescaled to sum to 1 and `clamped` is set. One
// uniform is drawn; the residual mass means no assignment (-1).
int sample_safe_set(std::span<const int> safe, std::span<double> probs,
                    RngStream& rng, bool& clamped);

// Nonzero LP values x*_{u,g,t} arranged for fast lookup.
class LpPlan {
 public:
  LpPlan() = default;
  LpPlan(const Instance& inst, const LpSolution& sol);

  struct Entry {
    int index;  // resource or group, depending on the list
    double x;
  };
  // Groups with x*_{u,g,t} > 0, ascending by group.
  std::span<const Entry> by_resource(int u, int t) const;
  // Resources with x*_{u,g,t} > 0, ascending by resource.
  std::span<const Entry> by_group(int g, int t) const;
  double group_total(int g, int t) const { return totals_[key(g, t)]; }
  double objective() const { return objective_; }

 private:
  size_t key(int a, int t) const { return static_cast<size_t>(t) * width_ + a; }
  int width_ = 0;
  double objective_ = 0.0;
  std::vector<Entry> res_entries_, grp_entries_;
  std::vector<size_t> res_start_, grp_start_;
  std::vector<double> totals_;
};

// Myopic per-round maximum-weight assignment.
class GreedyPolicy : public Policy {
 public:
  explicit GreedyPolicy(const Instance& inst) : inst_(inst) {}
  std::string name() const override { return "greedy"; }
  void decide(const RoundView& view, RngStream& rng, std::vector<Decision>& out,
              Telemetry& tel) const override;

 private:
  const Instance& inst_;
};

// Shuffles every concrete vertex subset of size 1..kappa and gives each one
// that is still formable to a uniformly chosen idle resource with positive
// weight.
class RandomPolicy : public Policy {
 public:
  explicit RandomPolicy(const Instance& inst) : inst_(inst) {}
  std::string name() const override { return "random"; }
  void decide(const RoundView& view, RngStream& rng, std::vector<Decision>& out,
              Telemetry& tel) const override;

 private:
  const Instance& inst_;
};

// LP-guided heuristics. Idle resources are visited in random order; each
// picks among the groups still formable from the batch with x* > 0.
//   kRatioToExpected: weight x*_{u,g,t} / q_g^t, residual mass = no-assign.
//   kShareOfTotal:    weight x*_{u,g,t} / sum_u' x*_{u',g,t}, renormalized.
enum class OperaVariant { kRatioToExpected = 1, kShareOfTotal = 2 };

class OperaPolicy : public Policy {
 public:
  OperaPolicy(const Instance& inst, std::shared_ptr<const LpPlan> plan,
              OperaVariant variant);
  std::string name() const override;
  void decide(const RoundView& view, RngStream& rng, std::vector<Decision>& out,
              Telemetry& tel) const override;

 private:
  const Instance& inst_;
  std::shared_ptr<const LpPlan> plan_;
  OperaVariant variant_;
  std::vector<double> expected_;  // q_g^t by t * G + g
};

// Per round: Greedy with probability epsilon, OPERA-1 otherwise. No coin is
// drawn when epsilon is 0 or 1.
class EpsGreedyPolicy : public Policy {
 public:
  EpsGreedyPolicy(const Instance& inst, std::shared_ptr<const LpPlan> plan,
                  double epsilon);
  std::string name() const override { return "eps-greedy"; }
  void decide(const RoundView& view, RngStream& rng, std::vector<Decision>& out,
              Telemetry& tel) const override;

 private:
  GreedyPolicy greedy_;
  OperaPolicy opera_;
  double epsilon_;
};

// Marks the lowest unconsumed label of each member type as consumed and
// writes the labels in member order. Leaves `consumed` untouched and returns
// false if the group cannot be formed.
bool take_labels(const GroupType& group, std::span<const int> label_types,
                 std::vector<char>& consumed, std::vector<int>& labels);

}  // namespace opera
