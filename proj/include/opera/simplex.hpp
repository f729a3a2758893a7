#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace opera {

struct SparseMatrixCsc {
  int rows = 0;
  int cols = 0;
  std::vector<int64_t> start{0};  // size cols + 1
  std::vector<int32_t> index;     // row indices, ascending within a column
  std::vector<double> value;

  int64_t nonzeros() const { return start.back(); }
};

struct SimplexOptions {
  int64_t max_iterations = 50'000'000;
  double pivot_tolerance = 1e-10;
  double primal_tolerance = 1e-9;
  double dual_tolerance = 1e-9;
  int refactor_interval = 100;
  // Consecutive degenerate pivots before switching to Bland's rule.
  int degenerate_limit = 50;
};

struct SimplexResult {
  std::vector<double> x;      // structural values
  std::vector<double> duals;  // one per row, nonnegative at optimum
  std::vector<int> basis;     // basic variables; slack of row i is cols + i
  double objective = 0.0;
  int64_t iterations = 0;
  int64_t bland_iterations = 0;
  int refactorizations = 0;
};

// Maximizes c'x subject to Ax <= b, x >= 0, for b >= 0. Primal revised
// simplex from the slack basis with partial pricing scaled by column norms, a two-pass ratio
// test and Bland's rule after a run of degenerate pivots. Deterministic.
// Throws IterationLimit, or InconsistentState if the problem is unbounded.
SimplexResult simplex_maximize(const SparseMatrixCsc& a,
                               std::span<const double> c,
                               std::span<const double> b,
                               const SimplexOptions& options = {});

}  // namespace opera
