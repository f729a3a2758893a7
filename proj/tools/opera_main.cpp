// opera: generate instances, solve benchmark LPs, simulate policies and run
// the verification suites.

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <sstream>
#include <string>
#include <vector>

#include "opera/errors.hpp"
#include "opera/experiment.hpp"
#include "opera/instance_io.hpp"
#include "opera/lp.hpp"
#include "opera/policies.hpp"
#include "opera/synthetic.hpp"
#include "opera/trips.hpp"
#include "opera/verify.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailed = 1;
constexpr int kExitUsage = 2;

struct GenerateArgs {
  bool synthetic = false;
  std::string trips;
  std::string out = "instance.json";
  uint64_t seed = 1;
  opera::SyntheticParams syn;
  opera::TripInstanceParams trip;
  std::vector<double> box;
  int rounds = 0;
  int resources = 0;
  int kappa = 0;
};

struct SolveArgs {
  std::string instance;
  std::string lp = "auto";
  std::string out;
  std::string mps;
};

struct SimulateArgs {
  std::vector<std::string> instances;
  std::vector<std::string> policies;
  double epsilon = 0.1;
  std::string gamma = "fixed-point";
  int beta_samples = 10000;
  std::string rule = "conditional";
  int runs = 100;
  uint64_t seed = 1;
  int workers = 0;
  bool exact = false;
  std::string config;
  std::string out = ".";
  std::string trace;
};

struct VerifyArgs {
  std::vector<std::string> suites;
  opera::VerifyOptions options;
};

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw opera::IoError("cannot write " + path);
  return out;
}

int cmd_generate(const GenerateArgs& a) {
  if (a.synthetic == !a.trips.empty()) {
    throw opera::InvalidArgument("give exactly one of --synthetic or --trips FILE");
  }
  opera::Instance inst;
  if (a.synthetic) {
    opera::SyntheticParams p = a.syn;
    if (a.rounds > 0) p.rounds = a.rounds;
    if (a.resources > 0) p.resources = a.resources;
    if (a.kappa > 0) p.kappa = a.kappa;
    inst = opera::generate_synthetic(p, a.seed);
  } else {
    std::ifstream in(a.trips);
    if (!in) throw opera::IoError("cannot open " + a.trips);
    opera::TripReadReport read;
    const auto trips = opera::read_trips_csv(in, read);
    opera::TripInstanceParams p = a.trip;
    if (a.rounds > 0) p.rounds = a.rounds;
    if (a.resources > 0) p.resources = a.resources;
    if (a.kappa > 0) p.kappa = a.kappa;
    if (!a.box.empty()) {
      if (a.box.size() != 4) throw opera::InvalidArgument("--box needs 4 values");
      p.box = {a.box[0], a.box[1], a.box[2], a.box[3]};
    }
    opera::TripInstance built = opera::build_trip_instance(trips, p);
    std::fprintf(stderr,
                 "rows %lld, malformed %lld, outside box %lld, held-out trips %lld, "
                 "%d cells, %d types, %d groups\n",
                 static_cast<long long>(read.rows), static_cast<long long>(read.malformed),
                 static_cast<long long>(built.dropped_outside),
                 static_cast<long long>(built.test_trips), built.num_cells,
                 built.instance.num_types(), built.instance.num_groups());
    inst = std::move(built.instance);
  }
  opera::require_valid(inst);
  opera::save_instance(inst, a.out);
  std::printf("wrote %s: %d resources, %d types, %d groups, %d rounds, kappa %d\n",
              a.out.c_str(), inst.num_resources(), inst.num_types(), inst.num_groups(),
              inst.rounds(), inst.kappa());
  return kExitOk;
}

int cmd_solve(const SolveArgs& a) {
  const opera::Instance inst = opera::load_instance(a.instance);
  opera::LpModel model;
  if (a.lp == "auto") {
    model = opera::build_lp_auto(inst);
  } else if (a.lp == "sequential") {
    model = opera::build_lp_sequential(inst);
  } else if (a.lp == "batch") {
    model = opera::build_lp_batch(inst);
  } else if (a.lp == "share") {
    model = opera::build_lp_share(inst);
  } else {
    throw opera::InvalidArgument("unknown LP '" + a.lp + "'");
  }
  if (!a.mps.empty()) {
    auto out = open_out(a.mps);
    opera::write_mps(model, out);
  }
  const opera::LpSolution sol = opera::solve_lp(model);
  if (!a.out.empty()) {
    auto out = open_out(a.out);
    opera::write_solution_json(model, sol, out);
  }
  std::printf("%s bound %.10g (%d rows, %d columns, %lld iterations)\n",
              opera::lp_kind_name(sol.kind), sol.objective, model.num_rows(),
              model.num_cols(), static_cast<long long>(sol.iterations));
  return kExitOk;
}

int cmd_simulate(const SimulateArgs& a, const CLI::App& app) {
  opera::ExperimentConfig config;
  if (!a.config.empty()) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(opera::read_file(a.config));
    } catch (const nlohmann::json::exception& e) {
      throw opera::IoError(a.config + ": " + e.what());
    }
    config = opera::config_from_json(j);
  }
  auto given = [&](const char* flag) { return app.count(flag) > 0; };
  if (given("--policy") || config.policies.empty()) {
    config.policies.clear();
    for (const std::string& name : a.policies) {
      opera::PolicySpec spec;
      spec.name = name;
      config.policies.push_back(spec);
    }
  }
  if (config.policies.empty()) throw opera::InvalidArgument("no --policy given");
  for (opera::PolicySpec& spec : config.policies) {
    if (!opera::is_known_policy(spec.name)) {
      throw opera::InvalidArgument("unknown policy '" + spec.name + "'");
    }
    if (given("--epsilon")) spec.epsilon = a.epsilon;
    if (given("--beta-samples")) spec.beta_samples = a.beta_samples;
    if (given("--rule")) {
      spec.rule = a.rule == "marginal" ? opera::AdaptiveRule::kMarginal
                                       : opera::AdaptiveRule::kConditional;
    }
    if (given("--gamma")) {
      if (a.gamma == "fixed-point") {
        spec.gamma = 0.0;
      } else {
        try {
          spec.gamma = std::stod(a.gamma);
        } catch (const std::exception&) {
          throw opera::InvalidArgument("--gamma must be a number or fixed-point");
        }
        if (!(spec.gamma > 0.0 && spec.gamma <= 1.0)) {
          throw opera::InvalidArgument("--gamma must lie in (0, 1]");
        }
      }
    }
  }
  if (given("--runs") || a.config.empty()) config.runs = a.runs;
  if (given("--seed") || a.config.empty()) config.seed = a.seed;
  if (given("--workers")) config.workers = a.workers;
  if (given("--exact")) config.exact_bound = a.exact;
  if (!a.trace.empty()) config.keep_traces = true;
  if (config.runs < 1) throw opera::InvalidArgument("--runs must be positive");

  std::vector<opera::Instance> instances;
  std::vector<std::string> names;
  for (const std::string& path : a.instances) {
    instances.push_back(opera::load_instance(path));
    names.push_back(std::filesystem::path(path).stem().string());
  }
  const opera::ExperimentReport report = opera::run_experiment(instances, names, config);

  std::filesystem::create_directories(a.out);
  const std::filesystem::path dir(a.out);
  {
    auto out = open_out((dir / "report.csv").string());
    opera::write_report_csv(report, out);
  }
  {
    auto out = open_out((dir / "runs.csv").string());
    opera::write_runs_csv(report, out);
  }
  {
    auto out = open_out((dir / "report.json").string());
    out << opera::report_to_json(report).dump(2) << "\n";
  }
  if (!a.trace.empty() && !report.results.empty()) {
    auto out = open_out(a.trace);
    opera::write_trace(report.results.front().trace, out);
  }

  for (const opera::PolicySpec& spec : config.policies) {
    const opera::Summary s = report.pooled(spec.name);
    std::printf("%-11s mean %.6g  sem %.3g", spec.name.c_str(), s.mean, s.sem);
    for (const opera::PolicyResult& r : report.results) {
      if (r.policy == spec.name && r.gamma > 0.0) {
        std::printf("  gamma=%.5f", r.gamma);
        break;
      }
    }
    std::printf("\n");
  }
  for (const opera::InstanceSummary& s : report.instances) {
    if (s.has_lp) std::printf("%s: LP bound %.10g\n", s.name.c_str(), s.lp_bound);
    if (s.has_exact) {
      std::printf("%s: expected offline optimum %.10g\n", s.name.c_str(),
                  s.exact_optimum);
    }
  }
  if (!report.error.empty()) {
    std::fprintf(stderr, "error: %s\n", report.error.c_str());
    return kExitFailed;
  }
  return kExitOk;
}

int cmd_verify(const VerifyArgs& a) {
  std::vector<std::string> suites = a.suites;
  if (suites.empty()) suites = opera::verify_suite_names();
  bool all = true;
  for (const std::string& name : suites) {
    const opera::SuiteResult r = opera::run_verify_suite(name, a.options);
    for (const opera::CheckResult& c : r.checks) {
      std::printf("%s  %s: %s", c.pass ? "PASS" : "FAIL", name.c_str(), c.name.c_str());
      if (!c.detail.empty()) std::printf("  [%s]", c.detail.c_str());
      std::printf("\n");
    }
    std::printf("%s  suite %s (%.2f s)\n", r.pass() ? "PASS" : "FAIL", name.c_str(),
                r.seconds);
    std::fflush(stdout);
    all = all && r.pass();
  }
  return all ? kExitOk : kExitFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Online matching of reusable multi-capacity resources"};
  app.require_subcommand(1);

  GenerateArgs gen;
  auto* g = app.add_subcommand("generate", "write an instance file");
  g->add_flag("--synthetic", gen.synthetic, "random synthetic instance");
  g->add_option("--trips", gen.trips, "trip CSV to build a grid instance from");
  g->add_option("-o,--out", gen.out, "output instance file")->capture_default_str();
  g->add_option("--seed", gen.seed, "generator seed")->capture_default_str();
  g->add_option("--rounds", gen.rounds, "rounds T");
  g->add_option("--resources", gen.resources, "number of resources");
  g->add_option("--kappa", gen.kappa, "resource capacity");
  g->add_option("--types", gen.syn.types, "synthetic: vertex types");
  g->add_option("--batch-size", gen.syn.batch_size, "synthetic: batch size b");
  g->add_option("--base", gen.syn.base_revenue, "synthetic: base revenue");
  g->add_option("--rate", gen.syn.revenue_per_round, "synthetic: revenue per round");
  g->add_option("--max-occupancy", gen.syn.max_occupancy,
                "synthetic: occupancy drawn from 1..max");
  g->add_flag("--relax", gen.syn.relax_batch_size, "synthetic: allow b <= kappa");
  g->add_option("--cell-km", gen.trip.cell_km, "trips: grid cell side in km");
  g->add_option("--box", gen.box, "trips: lat_min lat_max lon_min lon_max")
      ->expected(4)
      ->delimiter(',');
  g->add_option("--test-days", gen.trip.test_days, "trips: held-out days");
  g->add_option("--fare-base", gen.trip.base_revenue, "trips: base fare");
  g->add_option("--fare-rate", gen.trip.revenue_per_round, "trips: fare per round");
  g->add_option("--speed", gen.trip.speed_kmh, "trips: km/h for unseen OD pairs");
  g->add_option("--duration-quantile", gen.trip.duration_quantile,
                "trips: duration quantile per OD pair");

  SolveArgs sol;
  auto* s = app.add_subcommand("solve", "solve a benchmark LP");
  s->add_option("instance", sol.instance, "instance file")->required();
  s->add_option("--lp", sol.lp, "auto, sequential, batch or share")
      ->capture_default_str()
      ->check(CLI::IsMember({"auto", "sequential", "batch", "share"}));
  s->add_option("-o,--out", sol.out, "solution JSON");
  s->add_option("--mps", sol.mps, "export the model in MPS format");

  SimulateArgs sim;
  auto* m = app.add_subcommand("simulate", "run policies on instances");
  m->add_option("instances", sim.instances, "instance files")->required();
  m->add_option("-p,--policy", sim.policies,
                "greedy, random, opera1, opera2, eps-greedy, adapbatch, adapshare");
  m->add_option("--epsilon", sim.epsilon, "eps-greedy exploration rate")
      ->capture_default_str();
  m->add_option("--gamma", sim.gamma, "adaptive scaling: fixed-point or a value")
      ->capture_default_str();
  m->add_option("--beta-samples", sim.beta_samples, "bootstrap runs for estimates")
      ->capture_default_str();
  m->add_option("--rule", sim.rule, "adaptive share rule")
      ->check(CLI::IsMember({"conditional", "marginal"}))
      ->capture_default_str();
  m->add_option("--runs", sim.runs, "episodes per instance")->capture_default_str();
  m->add_option("--seed", sim.seed, "base seed")->capture_default_str();
  m->add_option("--workers", sim.workers, "threads; default OPERA_WORKERS or all");
  m->add_flag("--exact", sim.exact, "also compute the expected offline optimum");
  m->add_option("--config", sim.config, "experiment JSON; flags win");
  m->add_option("-o,--out", sim.out, "output directory")->capture_default_str();
  m->add_option("--trace", sim.trace, "write the trace of the first run");

  VerifyArgs ver;
  auto* v = app.add_subcommand("verify", "run verification suites");
  v->add_option("--suite", ver.suites, "suite name; default all")
      ->check(CLI::IsMember(opera::verify_suite_names()));
  v->add_option("--seed", ver.options.seed, "seed")->capture_default_str();
  v->add_option("--episodes", ver.options.episodes, "match-rate episodes")
      ->capture_default_str();
  v->add_option("--beta-samples", ver.options.beta_samples, "bootstrap runs")
      ->capture_default_str();
  v->add_option("--mc-batches", ver.options.mc_batches, "combinatorics batches")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*g) return cmd_generate(gen);
    if (*s) return cmd_solve(sol);
    if (*m) return cmd_simulate(sim, *m);
    if (*v) return cmd_verify(ver);
  } catch (const opera::IoError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  } catch (const opera::InvalidArgument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitFailed;
  }
  return kExitUsage;
}
