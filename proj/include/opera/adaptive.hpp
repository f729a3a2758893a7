#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "opera/grouping.hpp"
#include "opera/model.hpp"
#include "opera/policies.hpp"
#include "opera/simulator.hpp"

namespace opera {

// kBatch processes the b labels one at a time (kappa = 1 only). kShare walks
// the step lattice and offers each concrete group at its first visit.
enum class AdaptiveKind { kBatch, kShare };

// How the share rule divides x* gamma / h:
//   kConditional: by prod p^n times C, where C is the probability that the
//     resource is idle and the members unconsumed given that the step shows
//     the group. At steps whose labels nobody has touched yet C equals beta.
//   kMarginal: by P * beta, the product of the marginal tables.
enum class AdaptiveRule { kConditional, kMarginal };

struct AdaptiveConfig {
  AdaptiveKind kind = AdaptiveKind::kShare;
  AdaptiveRule rule = AdaptiveRule::kConditional;
  double gamma = 0.0;  // 0 selects gamma_fixed_point(kappa)
  int samples = 10000;
  uint64_t seed = 1;
  // Estimate P for every group, not only those the LP uses.
  bool track_all_groups = false;
};

// Estimates for one group type at one step of one round.
struct GroupCell {
  int group = 0;
  int64_t shown = 0;      // particles whose step showed the group
  int64_t available = 0;  // ... with every member still unconsumed
  double p = 0.0;         // available / samples
  // Offset of this cell's conditional estimates; one per entry of
  // LpPlan::by_group(group, t), in that order.
  int cond_offset = 0;
};

struct RoundTables {
  int steps = 0;
  std::vector<double> beta;          // [step * U + u]
  std::vector<int> cell_start;       // [step], size steps + 1
  std::vector<GroupCell> cells;      // ascending group within a step
  std::vector<int64_t> cond_count;   // idle and unconsumed, given shown
  std::vector<double> cond;          // cond_count / shown

  const GroupCell* find(int step, int group) const;
};

struct AdaptiveTables {
  AdaptiveConfig config;
  double gamma = 0.0;
  int num_resources = 0;
  std::vector<RoundTables> rounds;
  Telemetry estimator;  // clamps seen while bootstrapping

  double beta(int t, int step, int u) const {
    return rounds[t].beta[static_cast<size_t>(step) * num_resources + u];
  }
  double standard_error(double p) const;
};

// Shared step lattices keyed by batch size.
class LatticeCache {
 public:
  explicit LatticeCache(int kappa) : kappa_(kappa) {}
  const StepLattice& get(int batch_size);
  // Lattice already built by get(); throws otherwise.
  const StepLattice& at(int batch_size) const { return *lattices_.at(batch_size); }

 private:
  int kappa_;
  std::map<int, std::unique_ptr<StepLattice>> lattices_;
};

// Simulates `samples` particles in lockstep. Within each round, every step
// first tallies the particles' state into beta, P and the conditional
// estimates, then lets each particle take the step with those estimates, so
// round t (and step s) uses only what earlier rounds and steps produced.
std::shared_ptr<const AdaptiveTables> estimate_adaptive_tables(
    const Instance& inst, std::shared_ptr<const LpPlan> plan,
    const AdaptiveConfig& config);

class AdaptiveEngine;

class AdaptivePolicy : public Policy {
 public:
  AdaptivePolicy(const Instance& inst, std::shared_ptr<const LpPlan> plan,
                 std::shared_ptr<const AdaptiveTables> tables);
  ~AdaptivePolicy() override;
  std::string name() const override;
  double gamma() const { return tables_->gamma; }
  const AdaptiveTables& tables() const { return *tables_; }
  void decide(const RoundView& view, RngStream& rng, std::vector<Decision>& out,
              Telemetry& tel) const override;

 private:
  const Instance& inst_;
  std::shared_ptr<const LpPlan> plan_;
  std::shared_ptr<const AdaptiveTables> tables_;
  std::unique_ptr<AdaptiveEngine> engine_;
};

// True when `group` can be offered at a step with these labels: the sizes
// match and labels holding equal member types are increasing.
bool step_compatible(const GroupType& group, std::span<const int> labels);

}  // namespace opera
