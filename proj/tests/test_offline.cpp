#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <vector>

#include "opera/errors.hpp"
#include "opera/lp.hpp"
#include "opera/offline.hpp"
#include "test_util.hpp"

using namespace opera;
using opera::testing::group_index;
using opera::testing::make_instance;

TEST_CASE("pair beats single") {
  Instance inst = make_instance(1, 1, 2, {2}, {{1.0}}, true);
  inst.set_weight(0, group_index(inst, {0}), 1.0);
  inst.set_weight(0, group_index(inst, {0, 0}), 2.0);
  Realization r{{{0, 0}}, {}};
  const OfflineResult res = offline_optimal_fixed(inst, r);
  CHECK(res.value == 2.0);
  REQUIRE(res.assignments.size() == 1);
  CHECK(res.assignments[0].group == group_index(inst, {0, 0}));
}

TEST_CASE("busy resource serves one of two rounds") {
  Instance inst = make_instance(1, 1, 1, {1, 1}, {{1.0}, {1.0}}, true);
  inst.set_weight(0, 0, 1.0);
  inst.set_occupancy(0, 0, OccupancyDistribution::constant(2));
  Realization r{{{0}, {0}}, {}};
  CHECK(offline_optimal_fixed(inst, r).value == 1.0);
}

TEST_CASE("empty arrivals give zero") {
  Instance inst = make_instance(1, 2, 1, {1}, {{0.5, 0.5}}, true);
  inst.set_weight(0, 0, 3.0);
  Realization r{{{1}}, {}};
  CHECK(offline_optimal_fixed(inst, r).value == 0.0);
}

TEST_CASE("expected optimum by enumeration") {
  Instance inst = make_instance(1, 2, 1, {1}, {{0.5, 0.5}}, true);
  inst.set_weight(0, 0, 2.0);
  CHECK(expected_offline_optimal(inst) == doctest::Approx(1.0));

  Instance det = make_instance(2, 1, 2, {3, 3}, {{1.0}, {1.0}});
  det.set_weight(0, group_index(det, {0, 0}), 1.5);
  det.set_weight(1, group_index(det, {0}), 1.0);
  Realization r{{{0, 0, 0}, {0, 0, 0}}, {}};
  CHECK(expected_offline_optimal(det) == doctest::Approx(offline_optimal_fixed(det, r).value));
  CHECK(expected_offline_optimal(det) == doctest::Approx(5.0));
}

TEST_CASE("expected optimum never exceeds the LP") {
  Instance inst = make_instance(2, 2, 2, {3, 2}, {{0.3, 0.7}, {0.6, 0.4}});
  inst.set_relax_batch_size(true);
  for (int u = 0; u < 2; ++u) {
    for (int g = 0; g < inst.num_groups(); ++g) {
      inst.set_weight(u, g, 1.0 + u + 0.5 * g);
      inst.set_occupancy(u, g, OccupancyDistribution::constant(1 + (g % 2)));
    }
  }
  CHECK(expected_offline_optimal(inst) <= solve_lp(build_lp_share(inst)).objective + 1e-9);
}

TEST_CASE("random occupancy is refused by the enumerator") {
  Instance inst = make_instance(1, 1, 1, {2}, {{1.0}});
  inst.set_occupancy(0, 0, OccupancyDistribution::categorical({1, 2}, {0.5, 0.5}));
  CHECK_THROWS(expected_offline_optimal(inst));
}

TEST_CASE("round matching") {
  // Types v1, v2, v3; g1 = {v1, v2} pays 3 and g2 = {v2, v3} pays 2. One v2.
  Instance inst = make_instance(2, 3, 2, {3}, {{0.4, 0.3, 0.3}});
  for (int u = 0; u < 2; ++u) {
    inst.set_weight(u, group_index(inst, {0, 1}), 3.0);
    inst.set_weight(u, group_index(inst, {1, 2}), 2.0);
  }
  const std::vector<int> both = {0, 1};
  const RoundMatching m = greedy_matching_ilp(inst, 0, both, std::vector<int>{1, 1, 1});
  CHECK(m.value == 3.0);
  CHECK(m.exact);
  CHECK(m.assignments.size() == 1);

  const RoundMatching d = greedy_matching_ilp(inst, 0, both, std::vector<int>{1, 2, 1});
  CHECK(d.value == 5.0);
  CHECK(d.assignments.size() == 2);

  const RoundMatching none = greedy_matching_ilp(inst, 0, std::vector<int>{},
                                                 std::vector<int>{1, 1, 1});
  CHECK(none.value == 0.0);
  CHECK(none.assignments.empty());
}
