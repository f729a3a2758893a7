#pragma once

#include <cstdint>
#include <iosfwd>
#include <json.hpp>
#include <memory>
#include <string>
#include <vector>

#include "opera/adaptive.hpp"
#include "opera/lp.hpp"
#include "opera/model.hpp"
#include "opera/policies.hpp"
#include "opera/stats.hpp"

namespace opera {

// Known policy names: greedy, random, opera1, opera2, eps-greedy, adapbatch,
// adapshare.
struct PolicySpec {
  std::string name;
  double epsilon = 0.1;
  double gamma = 0.0;  // 0 selects the fixed point for the instance's kappa
  int beta_samples = 10000;
  AdaptiveRule rule = AdaptiveRule::kConditional;
};

bool is_known_policy(const std::string& name);
bool policy_needs_lp(const std::string& name);

struct ExperimentConfig {
  std::vector<PolicySpec> policies;
  int runs = 100;
  uint64_t seed = 1;
  int workers = 0;            // 0: OPERA_WORKERS, else hardware threads
  bool lp_bound = true;       // solve the LP even if no policy needs it
  bool exact_bound = false;   // also enumerate the expected offline optimum
  bool keep_traces = false;   // keep the trace of run 0 per policy/instance
};

nlohmann::json config_to_json(const ExperimentConfig& config);
// Unknown keys are rejected. Missing keys keep their defaults.
ExperimentConfig config_from_json(const nlohmann::json& j);

// Worker threads from OPERA_WORKERS, falling back to hardware concurrency.
int default_workers();

// Builds the named policy. `plan` may be null for policies that do not read
// the LP; adaptive policies estimate their tables here.
std::unique_ptr<Policy> make_policy(const Instance& inst, const PolicySpec& spec,
                                    std::shared_ptr<const LpPlan> plan,
                                    uint64_t seed);

struct InstanceSummary {
  std::string name;
  bool has_lp = false;
  double lp_bound = 0.0;
  int64_t lp_iterations = 0;
  bool has_exact = false;
  double exact_optimum = 0.0;
};

struct PolicyResult {
  std::string policy;
  int instance = 0;
  std::vector<double> rewards;  // by run
  Summary reward;
  double gamma = 0.0;           // adaptive policies only, else 0
  Telemetry telemetry;
  Trace trace;                  // run 0, when requested
};

struct ExperimentReport {
  ExperimentConfig config;
  std::vector<InstanceSummary> instances;
  std::vector<PolicyResult> results;  // instance-major, policies in order
  std::string error;                  // set if the run stopped early

  // All rewards of one policy across instances and runs.
  Summary pooled(const std::string& policy) const;
};

// For each instance: solve the LP once if needed, build each policy (which
// estimates adaptive tables once), then run `runs` episodes per policy. Run r
// of instance i uses seed derive_seed(config.seed, i) and index r for every
// policy, so policies see identical arrivals. Errors stop the experiment and
// are reported in `error` with the results finished so far.
ExperimentReport run_experiment(const std::vector<Instance>& instances,
                                const std::vector<std::string>& names,
                                const ExperimentConfig& config);

// One row per (policy, instance).
void write_report_csv(const ExperimentReport& report, std::ostream& out);
// One row per (policy, instance, run).
void write_runs_csv(const ExperimentReport& report, std::ostream& out);
nlohmann::json report_to_json(const ExperimentReport& report);

}  // namespace opera
