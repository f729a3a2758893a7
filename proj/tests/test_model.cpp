#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <string>

#include "opera/errors.hpp"
#include "opera/instance_io.hpp"
#include "opera/model.hpp"
#include "opera/synthetic.hpp"
#include "test_util.hpp"

using namespace opera;
using opera::testing::make_instance;

namespace {

bool mentions(const ValidationReport& rep, const std::string& text) {
  for (const auto& f : rep.failures) {
    if (f.find(text) != std::string::npos) return true;
  }
  return false;
}

}  // namespace

TEST_CASE("well formed instance passes") {
  Instance inst = make_instance(2, 2, 1, {2, 2, 2}, {{0.5, 0.5}, {0.2, 0.8}, {1, 0}});
  inst.set_weight(0, 0, 1.0);
  CHECK(validate_instance(inst).ok());
}

TEST_CASE("rows that do not sum to one fail") {
  Instance inst = make_instance(2, 2, 1, {2, 2, 2}, {{0.5, 0.4}, {0.5, 0.5}, {1, 0}});
  const auto rep = validate_instance(inst);
  CHECK_FALSE(rep.ok());
  CHECK(mentions(rep, "arrival probabilities do not sum to 1 at t=1"));
  CHECK_THROWS_AS(require_valid(inst), InvalidArgument);
}

TEST_CASE("batch not above kappa needs the relaxation flag") {
  Instance inst = make_instance(1, 2, 2, {3, 2}, {{0.5, 0.5}, {0.5, 0.5}});
  const auto rep = validate_instance(inst);
  CHECK_FALSE(rep.ok());
  CHECK(mentions(rep, "b^t > kappa"));
  inst.set_relax_batch_size(true);
  CHECK(validate_instance(inst).ok());
}

TEST_CASE("negative weight fails") {
  Instance inst = make_instance(1, 1, 1, {2}, {{1.0}});
  inst.set_weight(0, 0, 0, -1.0);
  CHECK_FALSE(validate_instance(inst).ok());
}

TEST_CASE("occupancy distributions") {
  const auto c = OccupancyDistribution::constant(3);
  CHECK(c.is_constant());
  CHECK(c.survival(0) == 1.0);
  CHECK(c.survival(2) == 1.0);
  CHECK(c.survival(3) == 0.0);
  const auto d = OccupancyDistribution::categorical({3, 1, 3, 5}, {0.25, 0.5, 0.25, 0.0});
  CHECK(d.support() == std::vector<int>{1, 3});
  CHECK(d.probs()[1] == doctest::Approx(0.5));
  CHECK(d.survival(1) == doctest::Approx(0.5));
  CHECK(d.survival(3) == 0.0);
  CHECK(d.max_value() == 3);
}

TEST_CASE("canonical json round trip is byte identical") {
  SyntheticParams p;
  p.resources = 3;
  p.types = 3;
  p.rounds = 5;
  p.batch_size = 4;
  const Instance a = generate_synthetic(p, 3);
  const std::string s1 = serialize_instance(a);
  const Instance b = parse_instance(s1);
  CHECK(serialize_instance(b) == s1);
  CHECK(b.num_groups() == a.num_groups());
  for (int u = 0; u < 3; ++u) {
    for (int g = 0; g < a.num_groups(); ++g) {
      for (int t = 0; t < 5; ++t) {
        CHECK(a.weight(u, g, t) == b.weight(u, g, t));
        CHECK(a.occupancy(u, g, t) == b.occupancy(u, g, t));
      }
    }
  }
}

TEST_CASE("round trip keeps per-round and categorical data") {
  Instance inst = make_instance(2, 2, 2, {3, 4}, {{0.25, 0.75}, {0.5, 0.5}});
  inst.set_weight(1, 3, 1, 2.5);
  inst.set_occupancy(0, 2, 0, OccupancyDistribution::categorical({1, 2}, {0.3, 0.7}));
  inst.metadata()["note"] = "x";
  const std::string s = serialize_instance(inst);
  const Instance back = parse_instance(s);
  CHECK(serialize_instance(back) == s);
  CHECK(back.weight(1, 3, 1) == 2.5);
  CHECK(back.weight(1, 3, 0) == 0.0);
  CHECK(back.occupancy(0, 2, 0).support() == std::vector<int>{1, 2});
  CHECK(back.metadata()["note"] == "x");
}

TEST_CASE("malformed json is an io error") {
  CHECK_THROWS_AS(parse_instance("{not json"), IoError);
  CHECK_THROWS_AS(load_instance("/nonexistent/file.json"), IoError);
}
