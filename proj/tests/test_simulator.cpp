#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>
#include <memory>
#include <sstream>
#include <vector>

#include "opera/errors.hpp"
#include "opera/lp.hpp"
#include "opera/policies.hpp"
#include "opera/simulator.hpp"
#include "opera/synthetic.hpp"
#include "test_util.hpp"

using namespace opera;
using opera::testing::make_instance;

namespace {

Instance synthetic(int kappa, uint64_t seed, int max_occupancy = 4) {
  SyntheticParams p;
  p.resources = 3;
  p.types = 3;
  p.rounds = 15;
  p.kappa = kappa;
  p.batch_size = 4;
  p.max_occupancy = max_occupancy;
  return generate_synthetic(p, seed);
}

// Emits whatever decision it was built with, every round.
class ScriptedPolicy : public Policy {
 public:
  explicit ScriptedPolicy(std::vector<Decision> d) : d_(std::move(d)) {}
  std::string name() const override { return "scripted"; }
  void decide(const RoundView&, RngStream&, std::vector<Decision>& out,
              Telemetry&) const override {
    out = d_;
  }

 private:
  std::vector<Decision> d_;
};

}  // namespace

TEST_CASE("degenerate batch") {
  RngStream rng(1, 0, StreamPurpose::kArrivals);
  const std::vector<double> p = {1.0, 0.0};
  CHECK(sample_batch(p, 3, rng) == std::vector<int>{0, 0, 0});
}

TEST_CASE("batch type frequencies") {
  RngStream rng(2, 0, StreamPurpose::kArrivals);
  const std::vector<double> p = {0.2, 0.5, 0.3};
  std::vector<int64_t> counts(3);
  const int batches = 200000, b = 5;
  for (int i = 0; i < batches; ++i) {
    for (int v : sample_batch(p, b, rng)) ++counts[v];
  }
  const double n = double(batches) * b;
  double chi = 0.0;
  for (int v = 0; v < 3; ++v) chi += std::pow(counts[v] - n * p[v], 2) / (n * p[v]);
  CHECK(chi < 13.82);  // 0.999 quantile, 2 degrees of freedom
}

TEST_CASE("labels are a uniform permutation") {
  RngStream rng(3, 0, StreamPurpose::kArrivals);
  const std::vector<double> p = {1.0 / 3, 1.0 / 3, 1.0 / 3};
  std::map<std::vector<int>, int> orders;
  int distinct = 0;
  for (int i = 0; i < 300000; ++i) {
    const auto batch = sample_batch(p, 3, rng);
    if (batch[0] == batch[1] || batch[1] == batch[2] || batch[0] == batch[2]) continue;
    ++orders[batch];
    ++distinct;
  }
  CHECK(orders.size() == 6u);
  for (const auto& [order, n] : orders) {
    const double se = std::sqrt((1.0 / 6) * (5.0 / 6) / distinct);
    CHECK(std::fabs(n / double(distinct) - 1.0 / 6) < 3 * se);
  }
}

TEST_CASE("zero weights give zero reward") {
  Instance inst = make_instance(2, 2, 2, {3, 3}, {{0.5, 0.5}, {0.5, 0.5}});
  const GreedyPolicy greedy(inst);
  const RandomPolicy random(inst);
  for (uint32_t r = 0; r < 20; ++r) {
    CHECK(run_episode(inst, greedy, 1, r).reward == 0.0);
    CHECK(run_episode(inst, random, 1, r).reward == 0.0);
  }
}

TEST_CASE("occupancy spanning the horizon allows one assignment") {
  Instance inst = make_instance(1, 1, 1, {2, 2, 2, 2}, {{1.0}, {1.0}, {1.0}, {1.0}});
  inst.set_weight(0, 0, 1.0);
  inst.set_occupancy(0, 0, OccupancyDistribution::constant(4));
  const GreedyPolicy greedy(inst);
  const RandomPolicy random(inst);
  for (uint32_t r = 0; r < 20; ++r) {
    CHECK(run_episode(inst, greedy, 1, r).assignments == 1);
    CHECK(run_episode(inst, random, 1, r).assignments == 1);
  }
}

TEST_CASE("replay reproduces reward and checks conservation") {
  const Instance inst = synthetic(2, 8);
  auto plan = std::make_shared<LpPlan>(inst, solve_lp(build_lp_share(inst)));
  const OperaPolicy policy(inst, plan, OperaVariant::kShareOfTotal);
  for (uint32_t r = 0; r < 20; ++r) {
    const EpisodeResult e = run_episode(inst, policy, 5, r, true);
    CHECK(replay(inst, e.trace) == e.reward);
    double sum = 0.0;
    std::vector<int> busy(inst.num_resources(), 0);
    for (const TraceEvent& ev : e.trace.events) {
      CHECK(ev.weight == inst.weight(ev.resource, ev.group, ev.round));
      CHECK(ev.round >= busy[ev.resource]);
      busy[ev.resource] = ev.round + ev.duration;
      sum += ev.weight;
    }
    CHECK(sum == doctest::Approx(e.reward));
  }
}

TEST_CASE("trace file round trip") {
  const Instance inst = synthetic(2, 9);
  const GreedyPolicy policy(inst);
  const EpisodeResult e = run_episode(inst, policy, 5, 0, true);
  std::stringstream ss;
  write_trace(e.trace, ss);
  CHECK(ss.str().rfind(kTraceHeader, 0) == 0);
  const Trace back = read_trace(ss);
  CHECK(back == e.trace);
  CHECK(replay(inst, back) == e.reward);
  std::stringstream bad("# opera-trace v1\nZ,1\n");
  CHECK_THROWS_AS(read_trace(bad), IoError);
}

TEST_CASE("tampered trace is rejected") {
  const Instance inst = synthetic(2, 10);
  const GreedyPolicy policy(inst);
  EpisodeResult e = run_episode(inst, policy, 5, 0, true);
  REQUIRE(!e.trace.events.empty());
  Trace t = e.trace;
  t.events[0].weight += 1.0;
  CHECK_THROWS_AS(replay(inst, t), InvariantViolation);
  t = e.trace;
  t.events.insert(t.events.begin() + 1, t.events[0]);
  CHECK_THROWS_AS(replay(inst, t), InvariantViolation);
  t = e.trace;
  t.events.push_back(t.events[0]);
  CHECK_THROWS_AS(replay(inst, t), InvalidArgument);
}

TEST_CASE("illegal decisions abort the episode") {
  Instance inst = make_instance(2, 1, 2, {3}, {{1.0}});
  inst.set_weight(0, 0, 1.0);
  // Same label used twice.
  const ScriptedPolicy twice({{0, 0, {0}, -1}, {1, 0, {0}, -1}});
  CHECK_THROWS_AS(run_episode(inst, twice, 1, 0), InvariantViolation);
  // Resource assigned twice.
  const ScriptedPolicy same({{0, 0, {0}, -1}, {0, 0, {1}, -1}});
  CHECK_THROWS_AS(run_episode(inst, same, 1, 0), InvariantViolation);
  // Labels do not form the group.
  const ScriptedPolicy wrong({{0, 1, {0}, -1}});
  CHECK_THROWS_AS(run_episode(inst, wrong, 1, 0), InvariantViolation);
  try {
    run_episode(inst, twice, 1, 0);
  } catch (const InvariantViolation& e) {
    CHECK(e.round() == 1);
  }
}

TEST_CASE("busy resource cannot be reused") {
  Instance inst = make_instance(1, 1, 1, {2, 2}, {{1.0}, {1.0}});
  inst.set_weight(0, 0, 1.0);
  inst.set_occupancy(0, 0, OccupancyDistribution::constant(2));
  const ScriptedPolicy always({{0, 0, {0}, -1}});
  CHECK_THROWS_AS(run_episode(inst, always, 1, 0), InvariantViolation);
}

TEST_CASE("policies share arrivals under common random numbers") {
  const Instance inst = synthetic(2, 11);
  const GreedyPolicy greedy(inst);
  const RandomPolicy random(inst);
  for (uint32_t r = 0; r < 10; ++r) {
    CHECK(run_episode(inst, greedy, 3, r, true).trace.arrivals ==
          run_episode(inst, random, 3, r, true).trace.arrivals);
  }
}
