#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "opera/model.hpp"
#include "opera/simplex.hpp"

namespace opera {

enum class LpKind { kSequential, kBatch, kShare };

const char* lp_kind_name(LpKind kind);

// max sum w x subject to, for every round t:
//   supply   (v,t): sum_u sum_{g ni v} n_{v,g} x_{u,g,t} <= b^t p_v^t
//   reuse    (u,t): sum_{t'<t} sum_g Pr[c_{u,g}^{t'} > t-t'] x_{u,g,t'}
//                   + sum_g x_{u,g,t} <= 1
//   group    (g,t): sum_u x_{u,g,t} <= q_g^t     for |g| >= 2
//   x >= 0.
// Rows appear in that block order; columns are ordered by (t, u, g).
// Singleton group rows coincide with supply rows and are omitted, so the
// upper bound x <= 1 is implied by the reuse rows. A group row is also
// omitted when q_g^t >= min(|U|, min_v q_v^t / n_{v,g}), since the reuse and
// supply rows already imply it.
struct LpModel {
  LpKind kind = LpKind::kShare;
  int num_resources = 0;
  int num_types = 0;
  int num_groups = 0;
  int rounds = 0;
  std::vector<std::pair<int, int>> group_rows;  // (g, t) per group row
  std::vector<int> group_row_of;                // [t * G + g] -> row or -1
  SparseMatrixCsc matrix;
  std::vector<double> objective;
  std::vector<double> rhs;

  int num_rows() const { return matrix.rows; }
  int num_cols() const { return matrix.cols; }
  int column(int u, int g, int t) const {
    return (t * num_resources + u) * num_groups + g;
  }
  int supply_row(int v, int t) const { return t * num_types + v; }
  int reuse_row(int u, int t) const {
    return rounds * num_types + u * rounds + t;
  }
  int group_row(int g, int t) const { return group_row_of[t * num_groups + g]; }
  std::string row_name(int row) const;
  std::string col_name(int col) const;
};

struct LpBuildOptions {
  // Omit group rows implied by the supply and reuse rows.
  bool drop_implied_rows = true;
};

LpModel build_lp_sequential(const Instance& inst);
LpModel build_lp_batch(const Instance& inst);
LpModel build_lp_share(const Instance& inst, const LpBuildOptions& options = {});
// LPBatch for kappa = 1, LPShare otherwise.
LpModel build_lp_auto(const Instance& inst);

enum class LpStatus { kOptimal };

struct LpSolution {
  LpKind kind = LpKind::kShare;
  int num_resources = 0;
  int num_groups = 0;
  int rounds = 0;
  std::vector<double> x;  // by LpModel::column
  std::vector<double> duals;
  double objective = 0.0;
  LpStatus status = LpStatus::kOptimal;
  int64_t iterations = 0;
  std::vector<int> basis;
  double seconds = 0.0;

  double value(int u, int g, int t) const {
    return x[(static_cast<size_t>(t) * num_resources + u) * num_groups + g];
  }
  // Sum over resources of x_{u,g,t}.
  double group_total(int g, int t) const;
};

struct FeasibilityReport {
  double max_violation = 0.0;
  int worst_row = -1;
  double min_x = 0.0;
  double max_x = 0.0;
  bool ok(double tol) const {
    return max_violation <= tol && min_x >= -tol && max_x <= 1.0 + tol;
  }
};

inline constexpr double kFeasibilityTolerance = 1e-7;

// Independent row-by-row recomputation of A x against b.
FeasibilityReport check_feasibility(const LpModel& model,
                                    const std::vector<double>& x);

// Solves and re-checks feasibility. Throws InconsistentState when the
// returned point violates a row or the bounds by more than 1e-7.
LpSolution solve_lp(const LpModel& model, const SimplexOptions& options = {});

// Fixed-layout MPS export (see README).
void write_mps(const LpModel& model, std::ostream& out);

void write_solution_json(const LpModel& model, const LpSolution& sol,
                         std::ostream& out);
LpSolution read_solution_json(std::istream& in);

}  // namespace opera
