#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "opera/adaptive.hpp"
#include "opera/model.hpp"
#include "opera/rng.hpp"

namespace opera {

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct SuiteResult {
  std::string suite;
  std::vector<CheckResult> checks;
  double seconds = 0.0;
  bool pass() const;
};

struct VerifyOptions {
  uint64_t seed = 2024;
  int64_t mc_batches = 1'000'000;  // combinatorics Monte Carlo
  int upper_bound_instances = 50;
  int episodes = 100'000;          // match-rate suite
  int beta_samples = 10'000;
  int reduction_instances = 100;
  int reduction_runs = 20;
};

// gamma, combinatorics, upper-bound, match-rate, bounds, reduction, clamp.
const std::vector<std::string>& verify_suite_names();
SuiteResult run_verify_suite(const std::string& name, const VerifyOptions& options);

// Fixed instance used by the match-rate and bound suites: 2 resources, 2
// types, 4 rounds, batches of 3, occupancy 1..3 rounds.
Instance match_rate_instance(int kappa);

// Two equally likely types, batches of 3, two resources that are free again
// next round, and only the mixed pair pays. The pair's LP value saturates its
// supply, so the share rule with gamma = 0.5 exceeds 1 at late steps.
Instance clamp_instance();

struct TinyLimits {
  int max_resources = 2;
  int max_types = 2;
  int max_rounds = 3;
  int min_batch = 1;
  int max_batch = 2;
  int max_kappa = 2;
  int max_occupancy = 3;
  bool constant_occupancy = true;
};

// Random small instance within the limits; sets the batch-size relaxation
// flag when some b^t <= kappa.
Instance random_tiny_instance(RngStream& rng, const TinyLimits& limits);

// Empirical per-round frequency of each (u, g) pairing for an adaptive
// policy, with the expected value gamma x* and its standard error (episode
// noise plus the propagated error of the estimates the rule divides by).
struct MatchRateCell {
  int round = 0;
  int resource = 0;
  int group = 0;
  double x = 0.0;
  double target = 0.0;
  double frequency = 0.0;
  double se = 0.0;
};

struct MatchRateResult {
  std::vector<MatchRateCell> cells;
  double gamma = 0.0;
  Telemetry telemetry;
  int64_t stray = 0;  // matches of pairs with x* = 0
};

MatchRateResult measure_match_rates(const Instance& inst, AdaptiveKind kind,
                                    int samples, int episodes, uint64_t seed);

}  // namespace opera
