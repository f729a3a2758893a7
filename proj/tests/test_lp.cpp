#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <boost/multiprecision/cpp_int.hpp>
#include <cmath>
#include <functional>
#include <sstream>
#include <vector>

#include "opera/errors.hpp"
#include "opera/lp.hpp"
#include "opera/simplex.hpp"
#include "opera/synthetic.hpp"
#include "test_util.hpp"

using namespace opera;
using opera::testing::group_index;
using opera::testing::make_instance;
using Rational = boost::multiprecision::cpp_rational;

namespace {

// Exact optimum of max c'x, Ax <= b, x >= 0 by enumerating every basis of
// the n tight constraints chosen among the m rows and n bounds.
Rational vertex_oracle(const std::vector<std::vector<Rational>>& a,
                       const std::vector<Rational>& b,
                       const std::vector<Rational>& c) {
  const int m = static_cast<int>(a.size());
  const int n = static_cast<int>(c.size());
  // Rows 0..m-1 are A, rows m..m+n-1 are -x <= 0.
  auto row = [&](int r, int j) -> Rational {
    if (r < m) return a[r][j];
    return r - m == j ? Rational(-1) : Rational(0);
  };
  auto rhs = [&](int r) -> Rational { return r < m ? b[r] : Rational(0); };
  Rational best = 0;
  std::vector<int> pick(n);
  std::function<void(int, int)> rec = [&](int k, int start) {
    if (k == n) {
      std::vector<std::vector<Rational>> mat(n, std::vector<Rational>(n + 1));
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) mat[i][j] = row(pick[i], j);
        mat[i][n] = rhs(pick[i]);
      }
      for (int col = 0; col < n; ++col) {
        int p = -1;
        for (int i = col; i < n; ++i) {
          if (mat[i][col] != 0) {
            p = i;
            break;
          }
        }
        if (p < 0) return;
        std::swap(mat[p], mat[col]);
        for (int i = 0; i < n; ++i) {
          if (i == col || mat[i][col] == 0) continue;
          const Rational f = mat[i][col] / mat[col][col];
          for (int j = col; j <= n; ++j) mat[i][j] -= f * mat[col][j];
        }
      }
      std::vector<Rational> x(n);
      for (int i = 0; i < n; ++i) x[i] = mat[i][n] / mat[i][i];
      for (int r = 0; r < m + n; ++r) {
        Rational lhs = 0;
        for (int j = 0; j < n; ++j) lhs += row(r, j) * x[j];
        if (lhs > rhs(r)) return;
      }
      Rational obj = 0;
      for (int j = 0; j < n; ++j) obj += c[j] * x[j];
      if (obj > best) best = obj;
      return;
    }
    for (int r = start; r < m + n; ++r) {
      pick[k] = r;
      rec(k + 1, r + 1);
    }
  };
  rec(0, 0);
  return best;
}

double solve_value(const LpModel& model) { return solve_lp(model).objective; }

}  // namespace

TEST_CASE("sequential examples") {
  Instance one = make_instance(1, 1, 1, {1}, {{1.0}}, true);
  one.set_weight(0, 0, 1.0);
  CHECK(solve_value(build_lp_sequential(one)) == doctest::Approx(1.0));

  Instance two = make_instance(1, 1, 1, {1, 1}, {{1.0}, {1.0}}, true);
  two.set_weight(0, 0, 1.0);
  two.set_occupancy(0, 0, OccupancyDistribution::constant(2));
  CHECK(solve_value(build_lp_sequential(two)) == doctest::Approx(1.0));
  two.set_weight(0, 0, 0.0);
  CHECK(solve_value(build_lp_sequential(two)) == 0.0);
}

TEST_CASE("batch examples") {
  Instance a = make_instance(1, 1, 1, {2}, {{1.0}});
  a.set_weight(0, 0, 1.0);
  CHECK(solve_value(build_lp_batch(a)) == doctest::Approx(1.0));
  Instance b = make_instance(2, 1, 1, {2}, {{1.0}});
  b.set_weight(0, 0, 1.0);
  b.set_weight(1, 0, 1.0);
  CHECK(solve_value(build_lp_batch(b)) == doctest::Approx(2.0));
}

TEST_CASE("batch with unit batches equals sequential") {
  SyntheticParams p;
  p.resources = 3;
  p.types = 3;
  p.rounds = 6;
  p.kappa = 1;
  p.batch_size = 1;
  p.max_occupancy = 3;
  p.relax_batch_size = true;
  const Instance inst = generate_synthetic(p, 5);
  const LpModel s = build_lp_sequential(inst);
  const LpModel b = build_lp_batch(inst);
  CHECK(s.matrix.start == b.matrix.start);
  CHECK(s.matrix.index == b.matrix.index);
  CHECK(s.matrix.value == b.matrix.value);
  CHECK(s.rhs == b.rhs);
  CHECK(s.objective == b.objective);
}

TEST_CASE("share with kappa 1 equals batch") {
  SyntheticParams p;
  p.resources = 2;
  p.types = 3;
  p.rounds = 5;
  p.kappa = 1;
  p.batch_size = 3;
  p.max_occupancy = 4;
  const Instance inst = generate_synthetic(p, 8);
  const LpModel s = build_lp_share(inst);
  const LpModel b = build_lp_batch(inst);
  CHECK(s.matrix.index == b.matrix.index);
  CHECK(s.matrix.value == b.matrix.value);
  CHECK(s.rhs == b.rhs);
  CHECK(solve_value(s) == doctest::Approx(solve_value(b)));
  CHECK(build_lp_auto(inst).kind == LpKind::kBatch);
}

TEST_CASE("share example: the pair wins") {
  Instance inst = make_instance(1, 1, 2, {3}, {{1.0}});
  inst.set_weight(0, group_index(inst, {0}), 1.0);
  inst.set_weight(0, group_index(inst, {0, 0}), 1.5);
  const LpSolution sol = solve_lp(build_lp_share(inst));
  CHECK(sol.objective == doctest::Approx(1.5));
  CHECK(sol.value(0, group_index(inst, {0, 0}), 0) == doctest::Approx(1.0));
}

TEST_CASE("zero supply gives zero") {
  // Only a null type ever arrives; it pays nothing.
  Instance inst = make_instance(2, 2, 2, {3, 3}, {{0.0, 1.0}, {0.0, 1.0}});
  for (int u = 0; u < 2; ++u) {
    for (int g = 0; g < inst.num_groups(); ++g) {
      const auto& m = inst.catalog()[g].members;
      if (std::find(m.begin(), m.end(), 1) == m.end()) inst.set_weight(u, g, 5.0);
    }
  }
  CHECK(solve_value(build_lp_share(inst)) == 0.0);
}

TEST_CASE("reuse rows weight history by survival") {
  Instance inst = make_instance(1, 1, 1, {2, 2, 2}, {{1.0}, {1.0}, {1.0}});
  inst.set_weight(0, 0, 1.0);
  inst.set_occupancy(0, 0, OccupancyDistribution::categorical({1, 3}, {0.5, 0.5}));
  const LpModel model = build_lp_share(inst);
  // Row (u, t=2): x1 Pr[c > 2] + x2 Pr[c > 1] + x3.
  const int row = model.reuse_row(0, 2);
  std::vector<double> coeff(3, 0.0);
  for (int j = 0; j < model.num_cols(); ++j) {
    for (int64_t k = model.matrix.start[j]; k < model.matrix.start[j + 1]; ++k) {
      if (model.matrix.index[k] == row) coeff[j] = model.matrix.value[k];
    }
  }
  CHECK(coeff[model.column(0, 0, 0)] == doctest::Approx(0.5));
  CHECK(coeff[model.column(0, 0, 1)] == doctest::Approx(0.5));
  CHECK(coeff[model.column(0, 0, 2)] == 1.0);
}

TEST_CASE("simplex matches exact vertex enumeration on random LPs") {
  RngStream rng(21, 0, StreamPurpose::kVerification);
  for (int trial = 0; trial < 60; ++trial) {
    const int m = 2 + static_cast<int>(rng.below(3));
    const int n = 2 + static_cast<int>(rng.below(3));
    std::vector<std::vector<Rational>> a(m, std::vector<Rational>(n));
    std::vector<Rational> b(m), c(n);
    SparseMatrixCsc mat;
    mat.rows = m;
    mat.cols = n;
    std::vector<double> bd(m), cd(n);
    for (int i = 0; i < m; ++i) {
      b[i] = Rational(static_cast<int>(rng.below(10)) + 1);
      bd[i] = static_cast<double>(b[i]);
    }
    for (int j = 0; j < n; ++j) {
      c[j] = Rational(static_cast<int>(rng.below(9)) + 1, 4);
      cd[j] = static_cast<double>(c[j]);
      for (int i = 0; i < m; ++i) {
        const int v = static_cast<int>(rng.below(5));
        // Every column gets a positive entry so the LP stays bounded.
        a[i][j] = Rational(i == j % m ? v + 1 : v, 2);
        if (a[i][j] != 0) {
          mat.index.push_back(i);
          mat.value.push_back(static_cast<double>(a[i][j]));
        }
      }
      mat.start.push_back(static_cast<int64_t>(mat.index.size()));
    }
    const double exact = static_cast<double>(vertex_oracle(a, b, c));
    const SimplexResult r = simplex_maximize(mat, cd, bd);
    CHECK(r.objective == doctest::Approx(exact).epsilon(1e-9));
  }
}

TEST_CASE("solutions are feasible and serialize") {
  SyntheticParams p;
  p.resources = 3;
  p.types = 3;
  p.rounds = 8;
  p.kappa = 2;
  p.batch_size = 4;
  p.max_occupancy = 5;
  const Instance inst = generate_synthetic(p, 2);
  const LpModel model = build_lp_share(inst);
  const LpSolution sol = solve_lp(model);
  CHECK(check_feasibility(model, sol.x).ok(1e-7));
  double obj = 0.0;
  for (int j = 0; j < model.num_cols(); ++j) obj += model.objective[j] * sol.x[j];
  CHECK(obj == doctest::Approx(sol.objective));
  // Weak duality: b'y >= c'x at the optimum.
  double dual = 0.0;
  for (int i = 0; i < model.num_rows(); ++i) {
    CHECK(sol.duals[i] >= -1e-9);
    dual += model.rhs[i] * sol.duals[i];
  }
  CHECK(dual == doctest::Approx(sol.objective).epsilon(1e-7));
  std::stringstream ss;
  write_solution_json(model, sol, ss);
  const LpSolution back = read_solution_json(ss);
  CHECK(back.objective == sol.objective);
  CHECK(back.x == sol.x);
  std::stringstream mps;
  write_mps(model, mps);
  CHECK(mps.str().find("ENDATA") != std::string::npos);
}

TEST_CASE("feasibility checker flags violations") {
  Instance inst = make_instance(1, 1, 1, {2}, {{1.0}});
  inst.set_weight(0, 0, 1.0);
  const LpModel model = build_lp_batch(inst);
  std::vector<double> x(model.num_cols(), 0.0);
  CHECK(check_feasibility(model, x).ok(1e-7));
  x[0] = 1.5;
  CHECK_FALSE(check_feasibility(model, x).ok(1e-7));
}
