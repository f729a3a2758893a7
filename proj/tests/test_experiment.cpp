#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sstream>
#include <vector>

#include "opera/errors.hpp"
#include "opera/experiment.hpp"
#include "opera/synthetic.hpp"

using namespace opera;

namespace {

std::vector<Instance> family(int kappa, int count) {
  std::vector<Instance> out;
  for (int i = 0; i < count; ++i) {
    SyntheticParams p;
    p.resources = 3;
    p.types = 3;
    p.rounds = 12;
    p.kappa = kappa;
    p.batch_size = 4;
    p.max_occupancy = 5;
    out.push_back(generate_synthetic(p, derive_seed(5, i)));
  }
  return out;
}

ExperimentConfig config_for(std::vector<std::string> names, int runs) {
  ExperimentConfig c;
  for (auto& n : names) {
    PolicySpec s;
    s.name = n;
    s.beta_samples = 1000;
    c.policies.push_back(s);
  }
  c.runs = runs;
  c.seed = 17;
  return c;
}

std::string csv(const ExperimentReport& r) {
  std::stringstream ss;
  write_report_csv(r, ss);
  write_runs_csv(r, ss);
  return ss.str();
}

}  // namespace

TEST_CASE("reports are deterministic across worker counts") {
  const auto insts = family(2, 2);
  auto c = config_for({"greedy", "random", "opera1", "opera2", "eps-greedy", "adapshare"}, 20);
  c.workers = 1;
  const ExperimentReport a = run_experiment(insts, {"a", "b"}, c);
  c.workers = 3;
  const ExperimentReport b = run_experiment(insts, {"a", "b"}, c);
  CHECK(a.error.empty());
  CHECK(csv(a) == csv(b));
  CHECK(a.results.size() == 12u);
}

TEST_CASE("empirical ratio stays below the LP bound") {
  const auto insts = family(2, 2);
  const auto c = config_for({"greedy", "opera2", "adapshare"}, 100);
  const ExperimentReport r = run_experiment(insts, {}, c);
  for (const PolicyResult& p : r.results) {
    const double lp = r.instances[p.instance].lp_bound;
    CHECK(p.reward.mean <= lp + 3 * p.reward.sem);
  }
  CHECK(r.instances[0].name == "instance0");
}

TEST_CASE("greedy and random run without an LP") {
  const auto insts = family(2, 1);
  auto c = config_for({"greedy", "random"}, 5);
  c.lp_bound = false;
  const ExperimentReport r = run_experiment(insts, {}, c);
  CHECK_FALSE(r.instances[0].has_lp);
  CHECK(r.error.empty());
  CHECK_FALSE(policy_needs_lp("greedy"));
  CHECK(policy_needs_lp("opera1"));
}

TEST_CASE("exact bound on a tiny instance") {
  SyntheticParams p;
  p.resources = 1;
  p.types = 2;
  p.rounds = 2;
  p.kappa = 2;
  p.batch_size = 3;
  p.max_occupancy = 2;
  auto c = config_for({"opera1"}, 10);
  c.exact_bound = true;
  const ExperimentReport r = run_experiment({generate_synthetic(p, 1)}, {}, c);
  REQUIRE(r.instances[0].has_exact);
  CHECK(r.instances[0].exact_optimum <= r.instances[0].lp_bound + 1e-9);
}

TEST_CASE("config json") {
  auto c = config_for({"opera2", "adapshare"}, 7);
  c.policies[1].gamma = 0.25;
  const ExperimentConfig back = config_from_json(config_to_json(c));
  CHECK(config_to_json(back) == config_to_json(c));
  CHECK(back.policies[1].gamma == 0.25);
  nlohmann::json j = {{"runs", 3}, {"policies", {{{"policy", "adapshare"}, {"gamma", "fixed-point"}}}}};
  CHECK(config_from_json(j).policies[0].gamma == 0.0);
  CHECK_THROWS_AS(config_from_json({{"bogus", 1}}), InvalidArgument);
  CHECK_THROWS_AS(config_from_json({{"policies", {"nope"}}}), InvalidArgument);
}

TEST_CASE("duplicate policies are refused") {
  const auto insts = family(2, 1);
  CHECK_THROWS_AS(run_experiment(insts, {}, config_for({"greedy", "greedy"}, 2)),
                  InvalidArgument);
}

TEST_CASE("errors keep partial results") {
  auto insts = family(2, 2);
  // kappa-2 instances cannot run the unit-capacity batch policy.
  const ExperimentReport r = run_experiment(insts, {}, config_for({"greedy", "adapbatch"}, 3));
  CHECK_FALSE(r.error.empty());
  CHECK(!r.results.empty());
  CHECK(r.results[0].policy == "greedy");
}
