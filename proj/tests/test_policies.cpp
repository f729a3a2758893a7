#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <memory>
#include <vector>

#include "opera/errors.hpp"
#include "opera/lp.hpp"
#include "opera/policies.hpp"
#include "opera/simulator.hpp"
#include "opera/synthetic.hpp"
#include "test_util.hpp"

using namespace opera;
using opera::testing::group_index;
using opera::testing::make_instance;

namespace {

LpSolution blank_solution(const Instance& inst) {
  LpSolution sol;
  sol.num_resources = inst.num_resources();
  sol.num_groups = inst.num_groups();
  sol.rounds = inst.rounds();
  sol.x.assign(static_cast<size_t>(sol.num_resources) * sol.num_groups * sol.rounds, 0.0);
  return sol;
}

void set_x(LpSolution& sol, int u, int g, int t, double x) {
  sol.x[(static_cast<size_t>(t) * sol.num_resources + u) * sol.num_groups + g] = x;
}

// Root of g = (1 - g)^(k + 1) by Newton's method from 0.
double newton_gamma(int k) {
  double g = 0.0;
  for (int i = 0; i < 100; ++i) {
    const double f = g - std::pow(1.0 - g, k + 1);
    const double df = 1.0 + (k + 1) * std::pow(1.0 - g, k);
    g -= f / df;
  }
  return g;
}

Instance synthetic(int kappa, uint64_t seed) {
  SyntheticParams p;
  p.resources = 3;
  p.types = 3;
  p.rounds = 12;
  p.kappa = kappa;
  p.batch_size = 4;
  p.max_occupancy = 4;
  return generate_synthetic(p, seed);
}

}  // namespace

TEST_CASE("gamma fixed point") {
  CHECK(gamma_fixed_point(2) == doctest::Approx(0.31767).epsilon(1e-5 / 0.31767));
  CHECK(std::fabs(gamma_fixed_point(1) - (3 - std::sqrt(5.0)) / 2) < 1e-12);
  CHECK(gamma_fixed_point(3) == doctest::Approx(0.27551).epsilon(1e-5 / 0.27551));
  for (int k = 1; k <= 10; ++k) {
    CHECK(std::fabs(gamma_fixed_point(k) - newton_gamma(k)) < 1e-12);
    if (k > 1) CHECK(gamma_fixed_point(k) < gamma_fixed_point(k - 1));
  }
}

TEST_CASE("safe set sampling") {
  RngStream rng(1, 0, StreamPurpose::kVerification);
  bool clamped = false;
  std::vector<int> none;
  std::vector<double> nothing;
  CHECK(sample_safe_set(none, nothing, rng, clamped) == -1);

  const std::vector<int> safe = {0, 3};
  const int n = 200000;
  std::vector<int> hits(3);
  for (int i = 0; i < n; ++i) {
    std::vector<double> p = {0.2, 0.3};
    const int u = sample_safe_set(safe, p, rng, clamped);
    CHECK_FALSE(clamped);
    ++hits[u == -1 ? 2 : (u == 0 ? 0 : 1)];
  }
  const double expect[3] = {0.2, 0.3, 0.5};
  for (int k = 0; k < 3; ++k) {
    const double se = std::sqrt(expect[k] * (1 - expect[k]) / n);
    CHECK(std::fabs(hits[k] / double(n) - expect[k]) < 4 * se);
  }

  int nulls = 0;
  for (int i = 0; i < 1000; ++i) {
    std::vector<double> p = {0.7, 0.6};
    nulls += sample_safe_set(safe, p, rng, clamped) == -1;
    CHECK(clamped);
  }
  CHECK(nulls == 0);
  std::vector<double> single = {1.5};
  CHECK(sample_safe_set(std::vector<int>{2}, single, rng, clamped) == 2);
  CHECK(clamped);
}

TEST_CASE("lp plan lookups") {
  Instance inst = make_instance(2, 2, 1, {2, 2}, {{0.5, 0.5}, {0.5, 0.5}});
  LpSolution sol = blank_solution(inst);
  set_x(sol, 1, 0, 0, 0.25);
  set_x(sol, 0, 0, 0, 0.5);
  set_x(sol, 0, 1, 1, 0.1);
  const LpPlan plan(inst, sol);
  const auto g0 = plan.by_group(0, 0);
  REQUIRE(g0.size() == 2);
  CHECK(g0[0].index == 0);
  CHECK(g0[1].index == 1);
  CHECK(plan.group_total(0, 0) == doctest::Approx(0.75));
  CHECK(plan.by_resource(0, 1).size() == 1);
  CHECK(plan.by_resource(1, 1).empty());
  LpSolution wrong = sol;
  wrong.rounds = 3;
  CHECK_THROWS_AS(LpPlan(inst, wrong), InvalidArgument);
}

TEST_CASE("opera1 with a saturated single candidate always assigns") {
  // q_{v1} = b p = 0.5 and x* = 0.5, so the ratio is 1.
  Instance inst = make_instance(1, 2, 1, {2, 2, 2}, {{0.25, 0.75}, {0.25, 0.75}, {0.25, 0.75}});
  inst.set_weight(0, 0, 1.0);
  LpSolution sol = blank_solution(inst);
  for (int t = 0; t < 3; ++t) set_x(sol, 0, 0, t, 0.5);
  auto plan = std::make_shared<LpPlan>(inst, sol);
  const OperaPolicy policy(inst, plan, OperaVariant::kRatioToExpected);
  CHECK(policy.name() == "opera1");
  for (uint32_t r = 0; r < 500; ++r) {
    const EpisodeResult e = run_episode(inst, policy, 3, r, true);
    int present = 0;
    for (const auto& types : e.trace.arrivals) {
      present += std::count(types.begin(), types.end(), 0) > 0;
    }
    CHECK(e.assignments == present);
  }
}

TEST_CASE("zero plan never assigns") {
  const Instance inst = synthetic(2, 4);
  auto plan = std::make_shared<LpPlan>(inst, blank_solution(inst));
  const OperaPolicy o1(inst, plan, OperaVariant::kRatioToExpected);
  const OperaPolicy o2(inst, plan, OperaVariant::kShareOfTotal);
  for (uint32_t r = 0; r < 50; ++r) {
    CHECK(run_episode(inst, o1, 1, r).assignments == 0);
    CHECK(run_episode(inst, o2, 1, r).assignments == 0);
  }
}

TEST_CASE("equal ratios split evenly") {
  Instance inst = make_instance(1, 2, 1, {2}, {{0.5, 0.5}});
  inst.set_weight(0, 0, 1.0);
  inst.set_weight(0, 1, 1.0);
  LpSolution sol = blank_solution(inst);
  set_x(sol, 0, 0, 0, 0.4);
  set_x(sol, 0, 1, 0, 0.4);
  auto plan = std::make_shared<LpPlan>(inst, sol);
  for (auto variant : {OperaVariant::kRatioToExpected, OperaVariant::kShareOfTotal}) {
    const OperaPolicy policy(inst, plan, variant);
    int first = 0, second = 0;
    for (uint32_t r = 0; r < 100000; ++r) {
      const EpisodeResult e = run_episode(inst, policy, 5, r, true);
      const auto& a = e.trace.arrivals[0];
      if (a[0] == a[1] || e.trace.events.empty()) continue;
      (e.trace.events[0].group == 0 ? first : second)++;
    }
    const double n = first + second;
    CHECK(n > 1000);
    CHECK(std::fabs(first / n - 0.5) < 3 * std::sqrt(0.25 / n));
  }
}

TEST_CASE("eps-greedy endpoints reproduce greedy and opera1") {
  const Instance inst = synthetic(2, 6);
  auto plan = std::make_shared<LpPlan>(inst, solve_lp(build_lp_share(inst)));
  const GreedyPolicy greedy(inst);
  const OperaPolicy opera1(inst, plan, OperaVariant::kRatioToExpected);
  const EpsGreedyPolicy all(inst, plan, 1.0);
  const EpsGreedyPolicy none(inst, plan, 0.0);
  for (uint32_t r = 0; r < 30; ++r) {
    CHECK(run_episode(inst, all, 2, r, true).trace == run_episode(inst, greedy, 2, r, true).trace);
    CHECK(run_episode(inst, none, 2, r, true).trace == run_episode(inst, opera1, 2, r, true).trace);
  }
  CHECK_THROWS_AS(EpsGreedyPolicy(inst, plan, 1.5), InvalidArgument);
}

TEST_CASE("random with one resource and one candidate always assigns") {
  Instance inst = make_instance(1, 1, 1, {1, 1}, {{1.0}, {1.0}}, true);
  inst.set_weight(0, 0, 1.0);
  const RandomPolicy policy(inst);
  for (uint32_t r = 0; r < 100; ++r) CHECK(run_episode(inst, policy, 1, r).assignments == 2);
}

TEST_CASE("greedy takes the best available group") {
  Instance inst = make_instance(1, 1, 2, {3}, {{1.0}});
  inst.set_weight(0, group_index(inst, {0}), 1.0);
  inst.set_weight(0, group_index(inst, {0, 0}), 1.5);
  const GreedyPolicy policy(inst);
  const EpisodeResult e = run_episode(inst, policy, 1, 0);
  CHECK(e.reward == 1.5);
}

TEST_CASE("take labels uses the lowest free labels") {
  const std::vector<int> types = {1, 0, 1, 0};
  std::vector<char> consumed(4, 0);
  std::vector<int> labels;
  CHECK(take_labels(GroupType{{0, 1}}, types, consumed, labels));
  CHECK(labels == std::vector<int>{1, 0});
  CHECK(take_labels(GroupType{{1}}, types, consumed, labels));
  CHECK(labels == std::vector<int>{2});
  CHECK_FALSE(take_labels(GroupType{{1}}, types, consumed, labels));
  CHECK(consumed == std::vector<char>{1, 1, 1, 0});
}
