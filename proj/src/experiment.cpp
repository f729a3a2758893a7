#include "opera/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <ostream>
#include <thread>

#include "opera/errors.hpp"
#include "opera/offline.hpp"

namespace opera {

namespace {

const char* const kPolicies[] = {"greedy",     "random",    "opera1",
                                 "opera2",     "eps-greedy", "adapbatch",
                                 "adapshare"};

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

const char* rule_name(AdaptiveRule rule) {
  return rule == AdaptiveRule::kConditional ? "conditional" : "marginal";
}

AdaptiveRule parse_rule(const std::string& s) {
  if (s == "conditional") return AdaptiveRule::kConditional;
  if (s == "marginal") return AdaptiveRule::kMarginal;
  throw InvalidArgument("unknown adaptive rule '" + s + "'");
}

}  // namespace

bool is_known_policy(const std::string& name) {
  return std::find(std::begin(kPolicies), std::end(kPolicies), name) !=
         std::end(kPolicies);
}

bool policy_needs_lp(const std::string& name) {
  return name != "greedy" && name != "random";
}

int default_workers() {
  if (const char* env = std::getenv("OPERA_WORKERS")) {
    char* end = nullptr;
    const long n = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && n >= 1) return static_cast<int>(n);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

nlohmann::json config_to_json(const ExperimentConfig& config) {
  nlohmann::json policies = nlohmann::json::array();
  for (const PolicySpec& p : config.policies) {
    nlohmann::json j = {{"policy", p.name}};
    if (p.name == "eps-greedy") j["epsilon"] = p.epsilon;
    if (p.name == "adapbatch" || p.name == "adapshare") {
      j["gamma"] = p.gamma == 0.0 ? nlohmann::json("fixed-point")
                                  : nlohmann::json(p.gamma);
      j["beta_samples"] = p.beta_samples;
      j["rule"] = rule_name(p.rule);
    }
    policies.push_back(j);
  }
  return {{"policies", policies},
          {"runs", config.runs},
          {"seed", config.seed},
          {"lp_bound", config.lp_bound},
          {"exact_bound", config.exact_bound}};
}

ExperimentConfig config_from_json(const nlohmann::json& j) {
  ExperimentConfig c;
  if (!j.is_object()) throw InvalidArgument("config must be a JSON object");
  try {
    for (auto it = j.begin(); it != j.end(); ++it) {
      const std::string& key = it.key();
      if (key == "runs") {
        c.runs = it->get<int>();
      } else if (key == "seed") {
        c.seed = it->get<uint64_t>();
      } else if (key == "lp_bound") {
        c.lp_bound = it->get<bool>();
      } else if (key == "exact_bound") {
        c.exact_bound = it->get<bool>();
      } else if (key == "workers") {
        c.workers = it->get<int>();
      } else if (key == "policies") {
        for (const auto& pj : *it) {
          PolicySpec p;
          if (pj.is_string()) {
            p.name = pj.get<std::string>();
          } else {
            for (auto f = pj.begin(); f != pj.end(); ++f) {
              if (f.key() == "policy") {
                p.name = f->get<std::string>();
              } else if (f.key() == "epsilon") {
                p.epsilon = f->get<double>();
              } else if (f.key() == "gamma") {
                p.gamma = f->is_string() && f->get<std::string>() == "fixed-point"
                              ? 0.0
                              : f->get<double>();
              } else if (f.key() == "beta_samples") {
                p.beta_samples = f->get<int>();
              } else if (f.key() == "rule") {
                p.rule = parse_rule(f->get<std::string>());
              } else if (f.key() != "seed") {
                throw InvalidArgument("unknown policy key '" + f.key() + "'");
              }
            }
          }
          if (!is_known_policy(p.name)) {
            throw InvalidArgument("unknown policy '" + p.name + "'");
          }
          c.policies.push_back(p);
        }
      } else {
        throw InvalidArgument("unknown config key '" + key + "'");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("bad config: ") + e.what());
  }
  return c;
}

std::unique_ptr<Policy> make_policy(const Instance& inst, const PolicySpec& spec,
                                    std::shared_ptr<const LpPlan> plan,
                                    uint64_t seed) {
  if (!is_known_policy(spec.name)) {
    throw InvalidArgument("unknown policy '" + spec.name + "'");
  }
  if (spec.name == "greedy") return std::make_unique<GreedyPolicy>(inst);
  if (spec.name == "random") return std::make_unique<RandomPolicy>(inst);
  if (!plan) throw InvalidArgument(spec.name + " needs an LP solution");
  if (spec.name == "opera1") {
    return std::make_unique<OperaPolicy>(inst, plan,
                                         OperaVariant::kRatioToExpected);
  }
  if (spec.name == "opera2") {
    return std::make_unique<OperaPolicy>(inst, plan, OperaVariant::kShareOfTotal);
  }
  if (spec.name == "eps-greedy") {
    return std::make_unique<EpsGreedyPolicy>(inst, plan, spec.epsilon);
  }
  AdaptiveConfig ac;
  ac.kind = spec.name == "adapbatch" ? AdaptiveKind::kBatch : AdaptiveKind::kShare;
  ac.rule = spec.rule;
  ac.gamma = spec.gamma;
  ac.samples = spec.beta_samples;
  ac.seed = seed;
  return std::make_unique<AdaptivePolicy>(
      inst, plan, estimate_adaptive_tables(inst, plan, ac));
}

Summary ExperimentReport::pooled(const std::string& policy) const {
  std::vector<double> all;
  for (const PolicyResult& r : results) {
    if (r.policy == policy) all.insert(all.end(), r.rewards.begin(), r.rewards.end());
  }
  return summarize(all);
}

namespace {

// Runs episodes 0..runs-1 of one policy on `workers` threads; results land
// in run order.
void run_episodes(const Instance& inst, const Policy& policy, uint64_t seed,
                  int runs, int workers, bool keep_trace, PolicyResult& out) {
  std::vector<EpisodeResult> episodes(runs);
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&]() {
    while (true) {
      const int r = next.fetch_add(1);
      if (r >= runs) return;
      try {
        episodes[r] = run_episode(inst, policy, seed, static_cast<uint32_t>(r),
                                  keep_trace && r == 0);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next.store(runs);
      }
    }
  };
  const int n = std::min(workers, runs);
  if (n <= 1) {
    work();
  } else {
    std::vector<std::thread> threads;
    for (int k = 0; k < n; ++k) threads.emplace_back(work);
    for (auto& th : threads) th.join();
  }
  if (failure) std::rethrow_exception(failure);
  out.rewards.resize(runs);
  for (int r = 0; r < runs; ++r) {
    out.rewards[r] = episodes[r].reward;
    out.telemetry += episodes[r].telemetry;
  }
  if (keep_trace && runs > 0) out.trace = std::move(episodes[0].trace);
  out.reward = summarize(out.rewards);
}

}  // namespace

ExperimentReport run_experiment(const std::vector<Instance>& instances,
                                const std::vector<std::string>& names,
                                const ExperimentConfig& config) {
  ExperimentReport report;
  report.config = config;
  if (config.runs < 1) throw InvalidArgument("runs must be positive");
  for (size_t k = 0; k < config.policies.size(); ++k) {
    const std::string& name = config.policies[k].name;
    if (!is_known_policy(name)) {
      throw InvalidArgument("unknown policy '" + name + "'");
    }
    for (size_t m = 0; m < k; ++m) {
      if (config.policies[m].name == name) {
        throw InvalidArgument("policy '" + name + "' listed twice");
      }
    }
  }
  const int workers = config.workers > 0 ? config.workers : default_workers();
  bool need_lp = config.lp_bound;
  for (const PolicySpec& p : config.policies) need_lp |= policy_needs_lp(p.name);

  for (size_t i = 0; i < instances.size(); ++i) {
    const Instance& inst = instances[i];
    const uint64_t seed = derive_seed(config.seed, i);
    InstanceSummary summary;
    summary.name = i < names.size() ? names[i] : "instance" + std::to_string(i);
    try {
      std::shared_ptr<const LpPlan> plan;
      if (need_lp) {
        const LpSolution sol = solve_lp(build_lp_auto(inst));
        plan = std::make_shared<LpPlan>(inst, sol);
        summary.has_lp = true;
        summary.lp_bound = sol.objective;
        summary.lp_iterations = sol.iterations;
      }
      if (config.exact_bound) {
        summary.exact_optimum = expected_offline_optimal(inst);
        summary.has_exact = true;
      }
      report.instances.push_back(summary);
      for (const PolicySpec& spec : config.policies) {
        auto policy = make_policy(inst, spec, plan, seed);
        PolicyResult result;
        result.policy = spec.name;
        result.instance = static_cast<int>(i);
        if (auto* ap = dynamic_cast<const AdaptivePolicy*>(policy.get())) {
          result.gamma = ap->gamma();
        }
        run_episodes(inst, *policy, seed, config.runs, workers,
                     config.keep_traces, result);
        report.results.push_back(std::move(result));
      }
    } catch (const Error& e) {
      report.error = summary.name + ": " + e.what();
      return report;
    }
  }
  return report;
}

void write_report_csv(const ExperimentReport& report, std::ostream& out) {
  out << "policy,instance,runs,mean_reward,stddev,sem,lp_bound,cr_lp,"
         "exact_optimum,cr_exact,gamma,samples,clamps,inexact_rounds\n";
  for (const PolicyResult& r : report.results) {
    const InstanceSummary& inst = report.instances[r.instance];
    out << r.policy << ',' << inst.name << ',' << r.reward.n << ','
        << num(r.reward.mean) << ',' << num(r.reward.stddev) << ','
        << num(r.reward.sem) << ',';
    if (inst.has_lp) {
      out << num(inst.lp_bound) << ','
          << (inst.lp_bound > 0.0 ? num(r.reward.mean / inst.lp_bound) : "")
          << ',';
    } else {
      out << ",,";
    }
    if (inst.has_exact) {
      out << num(inst.exact_optimum) << ','
          << (inst.exact_optimum > 0.0 ? num(r.reward.mean / inst.exact_optimum)
                                       : "")
          << ',';
    } else {
      out << ",,";
    }
    out << (r.gamma > 0.0 ? num(r.gamma) : "") << ',' << r.telemetry.samples
        << ',' << r.telemetry.clamps << ',' << r.telemetry.inexact_rounds
        << '\n';
  }
}

void write_runs_csv(const ExperimentReport& report, std::ostream& out) {
  out << "policy,instance,run,reward\n";
  for (const PolicyResult& r : report.results) {
    const std::string& name = report.instances[r.instance].name;
    for (size_t k = 0; k < r.rewards.size(); ++k) {
      out << r.policy << ',' << name << ',' << k << ',' << num(r.rewards[k])
          << '\n';
    }
  }
}

nlohmann::json report_to_json(const ExperimentReport& report) {
  nlohmann::json j;
  j["config"] = config_to_json(report.config);
  nlohmann::json insts = nlohmann::json::array();
  for (const InstanceSummary& s : report.instances) {
    nlohmann::json e = {{"name", s.name}};
    if (s.has_lp) {
      e["lp_bound"] = s.lp_bound;
      e["lp_iterations"] = s.lp_iterations;
    }
    if (s.has_exact) e["exact_optimum"] = s.exact_optimum;
    insts.push_back(e);
  }
  j["instances"] = insts;
  nlohmann::json pols = nlohmann::json::array();
  for (const PolicySpec& spec : report.config.policies) {
    const Summary s = report.pooled(spec.name);
    double cr_sum = 0.0;
    int cr_n = 0;
    Telemetry tel;
    for (const PolicyResult& r : report.results) {
      if (r.policy != spec.name) continue;
      tel += r.telemetry;
      const InstanceSummary& inst = report.instances[r.instance];
      if (inst.has_lp && inst.lp_bound > 0.0) {
        cr_sum += r.reward.mean / inst.lp_bound;
        ++cr_n;
      }
    }
    nlohmann::json p = {{"policy", spec.name},
                        {"episodes", s.n},
                        {"mean_reward", s.mean},
                        {"stddev", s.stddev},
                        {"sem", s.sem},
                        {"samples", tel.samples},
                        {"clamps", tel.clamps},
                        {"inexact_rounds", tel.inexact_rounds}};
    if (cr_n > 0) p["mean_cr_lp"] = cr_sum / cr_n;
    pols.push_back(p);
  }
  j["policies"] = pols;
  if (!report.error.empty()) j["error"] = report.error;
  return j;
}

}  // namespace opera
