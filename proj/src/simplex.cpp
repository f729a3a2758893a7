#include "opera/simplex.hpp"

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <string>

#include "opera/errors.hpp"

namespace opera {
namespace {

constexpr double kDropTolerance = 1e-14;

class RevisedSimplex {
 public:
  RevisedSimplex(const SparseMatrixCsc& a, std::span<const double> c,
                 std::span<const double> b, const SimplexOptions& options)
      : a_(a), m_(a.rows), n_(a.cols), opt_(options) {
    if (static_cast<int>(c.size()) != n_ || static_cast<int>(b.size()) != m_) {
      throw InvalidArgument("simplex: dimension mismatch");
    }
    for (double v : b) {
      if (!(v >= 0.0) || !std::isfinite(v)) {
        throw InvalidArgument("simplex: right-hand sides must be finite, >= 0");
      }
    }
    cost_.assign(n_ + m_, 0.0);
    std::copy(c.begin(), c.end(), cost_.begin());
    rhs_.assign(b.begin(), b.end());
    scale_.resize(n_);
    for (int j = 0; j < n_; ++j) {
      double norm2 = 1.0;
      for (int64_t e = a.start[j]; e < a.start[j + 1]; ++e) {
        norm2 += a.value[e] * a.value[e];
      }
      scale_[j] = 1.0 / std::sqrt(norm2);
    }
    head_.resize(m_);
    where_.assign(n_ + m_, -1);
    for (int i = 0; i < m_; ++i) {
      head_[i] = n_ + i;
      where_[n_ + i] = i;
    }
    xb_.assign(m_, 0.0);
    y_.assign(m_, 0.0);
    work_.assign(m_, 0.0);
    alpha_.assign(m_, 0.0);
    rho_.assign(m_, 0.0);
    h_.assign(m_, 0.0);
  }

  SimplexResult run() {
    refactor();
    recompute();
    bool fresh = true;
    int degenerate_run = 0;
    bool bland = false;
    while (true) {
      if (result_.iterations >= opt_.max_iterations) {
        throw IterationLimit("simplex: iteration limit " +
                             std::to_string(opt_.max_iterations) + " reached");
      }
      if (static_cast<int>(etas_.size()) >= opt_.refactor_interval) {
        refactor();
        recompute();
        fresh = true;
      }
      double dq = 0.0;
      int q = bland ? entering_bland(dq) : entering_partial(dq);
      if (q < 0) {
        if (fresh) break;
        refactor();
        recompute();
        fresh = true;
        continue;
      }
      load_column(q);
      ftran(work_, alpha_);
      int r = bland ? leaving_bland() : leaving_harris();
      if (r < 0) throw InconsistentState("simplex: problem is unbounded");
      const double pivot = alpha_[r];
      std::fill(h_.begin(), h_.end(), 0.0);
      h_[r] = 1.0;
      btran(h_, rho_);
      const double row_pivot = column_dot(q, rho_);
      if (std::abs(row_pivot - pivot) > 1e-7 * (1.0 + std::abs(pivot))) {
        if (etas_.empty()) {
          throw InconsistentState("simplex: numerically unstable basis");
        }
        refactor();
        recompute();
        fresh = true;
        continue;
      }
      const double theta = std::max(0.0, xb_[r] / pivot);
      update(q, r, pivot, theta, dq);
      ++result_.iterations;
      if (bland) ++result_.bland_iterations;
      fresh = false;
      if (theta <= 1e-12) {
        if (++degenerate_run >= opt_.degenerate_limit) bland = true;
      } else {
        degenerate_run = 0;
        bland = false;
      }
    }
    return finish();
  }

 private:
  struct Eta {
    int pos;
    double pivot;
    std::vector<int> index;
    std::vector<double> value;
  };

  void refactor() {
    etas_.clear();
    core_cols_.clear();
    core_pos_.clear();
    core_rows_.clear();
    row_to_core_.assign(m_, -1);
    for (int p = 0; p < m_; ++p) {
      if (head_[p] < n_) {
        core_cols_.push_back(head_[p]);
        core_pos_.push_back(p);
      }
    }
    slack_pos_.assign(m_, -1);
    for (int i = 0; i < m_; ++i) {
      if (where_[n_ + i] < 0) {
        row_to_core_[i] = static_cast<int>(core_rows_.size());
        core_rows_.push_back(i);
      } else {
        slack_pos_[i] = where_[n_ + i];
      }
    }
    const int k = static_cast<int>(core_cols_.size());
    ++result_.refactorizations;
    if (k == 0) return;
    Eigen::SparseMatrix<double> core(k, k);
    int64_t nnz = 0;
    for (int j : core_cols_) nnz += a_.start[j + 1] - a_.start[j];
    core.reserve(nnz);
    for (int kk = 0; kk < k; ++kk) {
      core.startVec(kk);
      int j = core_cols_[kk];
      for (int64_t e = a_.start[j]; e < a_.start[j + 1]; ++e) {
        int cr = row_to_core_[a_.index[e]];
        if (cr >= 0) core.insertBack(cr, kk) = a_.value[e];
      }
    }
    core.finalize();
    lu_.compute(core);
    if (lu_.info() != Eigen::Success) {
      throw InconsistentState("simplex: singular basis after " +
                              std::to_string(result_.iterations) +
                              " iterations");
    }
  }

  // Solves B z = work. `work` is indexed by row and is overwritten.
  void ftran(std::vector<double>& work, std::vector<double>& z) {
    const int k = static_cast<int>(core_cols_.size());
    if (k > 0) {
      Eigen::VectorXd rhs(k);
      for (int kk = 0; kk < k; ++kk) rhs[kk] = work[core_rows_[kk]];
      Eigen::VectorXd sol = lu_.solve(rhs);
      for (int kk = 0; kk < k; ++kk) {
        const double s = sol[kk];
        z[core_pos_[kk]] = s;
        if (s == 0.0) continue;
        int j = core_cols_[kk];
        for (int64_t e = a_.start[j]; e < a_.start[j + 1]; ++e) {
          work[a_.index[e]] -= a_.value[e] * s;
        }
      }
    }
    for (int i = 0; i < m_; ++i) {
      int p = slack_pos_[i];
      if (p >= 0) z[p] = work[i];
    }
    for (const Eta& eta : etas_) {
      double zr = z[eta.pos];
      if (zr == 0.0) continue;
      zr /= eta.pivot;
      z[eta.pos] = zr;
      for (size_t e = 0; e < eta.index.size(); ++e) {
        z[eta.index[e]] -= eta.value[e] * zr;
      }
    }
  }

  // Solves B' y = h. `h` is indexed by basis position and is overwritten.
  void btran(std::vector<double>& h, std::vector<double>& y) {
    for (auto it = etas_.rbegin(); it != etas_.rend(); ++it) {
      double s = h[it->pos];
      for (size_t e = 0; e < it->index.size(); ++e) {
        s -= it->value[e] * h[it->index[e]];
      }
      h[it->pos] = s / it->pivot;
    }
    for (int i = 0; i < m_; ++i) {
      int p = slack_pos_[i];
      y[i] = p >= 0 ? h[p] : 0.0;
    }
    const int k = static_cast<int>(core_cols_.size());
    if (k == 0) return;
    Eigen::VectorXd rhs(k);
    for (int kk = 0; kk < k; ++kk) {
      double s = h[core_pos_[kk]];
      int j = core_cols_[kk];
      for (int64_t e = a_.start[j]; e < a_.start[j + 1]; ++e) {
        if (row_to_core_[a_.index[e]] < 0) s -= a_.value[e] * y[a_.index[e]];
      }
      rhs[kk] = s;
    }
    Eigen::VectorXd sol = lu_.transpose().solve(rhs);
    for (int kk = 0; kk < k; ++kk) y[core_rows_[kk]] = sol[kk];
  }

  void recompute() {
    std::copy(rhs_.begin(), rhs_.end(), work_.begin());
    ftran(work_, xb_);
    for (int p = 0; p < m_; ++p) h_[p] = cost_[head_[p]];
    btran(h_, y_);
  }

  // a_j' v for structural or slack j.
  double column_dot(int j, const std::vector<double>& v) const {
    if (j >= n_) return v[j - n_];
    double s = 0.0;
    for (int64_t e = a_.start[j]; e < a_.start[j + 1]; ++e) {
      s += a_.value[e] * v[a_.index[e]];
    }
    return s;
  }

  double reduced_cost(int j) const { return cost_[j] - column_dot(j, y_); }

  // Dantzig pricing scaled by column norms, over all slacks and a window of
  // structural columns that rotates through the matrix; the window grows
  // until it holds a candidate or covers every column.
  int entering_partial(double& dq) {
    const double tol = opt_.dual_tolerance;
    int best = -1;
    double best_d = 0.0;
    double best_score = 0.0;
    for (int i = 0; i < m_; ++i) {
      if (where_[n_ + i] < 0 && -y_[i] > tol && -y_[i] > best_score) {
        best_d = -y_[i];
        best_score = best_d;
        best = n_ + i;
      }
    }
    const int chunk = std::max(1024, n_ / 16);
    int scanned = 0;
    while (scanned < n_) {
      const int len = std::min(chunk, n_ - scanned);
      for (int k = 0; k < len; ++k) {
        const int j = cursor_;
        if (++cursor_ == n_) cursor_ = 0;
        if (where_[j] >= 0 || cost_[j] <= 0.0) continue;
        const double dj = reduced_cost(j);
        if (dj <= tol) continue;
        const double score = dj * scale_[j];
        if (score > best_score) {
          best_score = score;
          best_d = dj;
          best = j;
        }
      }
      scanned += len;
      if (best >= 0) break;
    }
    dq = best_d;
    return best;
  }

  int entering_bland(double& dq) {
    const double tol = opt_.dual_tolerance;
    for (int j = 0; j < n_ + m_; ++j) {
      if (where_[j] >= 0) continue;
      const double dj = reduced_cost(j);
      if (dj > tol) {
        dq = dj;
        return j;
      }
    }
    return -1;
  }

  void load_column(int q) {
    std::fill(work_.begin(), work_.end(), 0.0);
    if (q >= n_) {
      work_[q - n_] = 1.0;
      return;
    }
    for (int64_t e = a_.start[q]; e < a_.start[q + 1]; ++e) {
      work_[a_.index[e]] = a_.value[e];
    }
  }

  int leaving_harris() const {
    const double tol = opt_.pivot_tolerance;
    const double delta = opt_.primal_tolerance;
    double bound = std::numeric_limits<double>::infinity();
    for (int p = 0; p < m_; ++p) {
      if (alpha_[p] > tol) {
        bound = std::min(bound, (std::max(xb_[p], 0.0) + delta) / alpha_[p]);
      }
    }
    if (!std::isfinite(bound)) return -1;
    int r = -1;
    double best = 0.0;
    for (int p = 0; p < m_; ++p) {
      const double ap = alpha_[p];
      if (ap <= tol || std::max(xb_[p], 0.0) / ap > bound) continue;
      if (ap > best || (ap == best && head_[p] < head_[r])) {
        best = ap;
        r = p;
      }
    }
    return r;
  }

  int leaving_bland() const {
    const double tol = opt_.pivot_tolerance;
    int r = -1;
    double best = std::numeric_limits<double>::infinity();
    for (int p = 0; p < m_; ++p) {
      if (alpha_[p] <= tol) continue;
      const double ratio = std::max(xb_[p], 0.0) / alpha_[p];
      if (ratio < best - 1e-12 ||
          (std::abs(ratio - best) <= 1e-12 && head_[p] < head_[r])) {
        best = std::min(best, ratio);
        r = p;
      }
    }
    return r;
  }

  void update(int q, int r, double pivot, double theta, double dq) {
    const double theta_d = dq / pivot;
    for (int i = 0; i < m_; ++i) y_[i] += theta_d * rho_[i];
    const int leaving = head_[r];
    Eta eta{r, pivot, {}, {}};
    for (int p = 0; p < m_; ++p) {
      const double ap = alpha_[p];
      if (ap == 0.0) continue;
      if (p != r) {
        xb_[p] -= theta * ap;
        if (std::abs(ap) > kDropTolerance) {
          eta.index.push_back(p);
          eta.value.push_back(ap);
        }
      }
    }
    etas_.push_back(std::move(eta));
    xb_[r] = theta;
    head_[r] = q;
    where_[q] = r;
    where_[leaving] = -1;
  }

  SimplexResult finish() {
    refactor();
    recompute();
    result_.x.assign(n_, 0.0);
    for (int p = 0; p < m_; ++p) {
      if (head_[p] < n_) result_.x[head_[p]] = std::max(0.0, xb_[p]);
    }
    result_.duals = y_;
    result_.basis = head_;
    std::sort(result_.basis.begin(), result_.basis.end());
    // Compensated sum keeps the objective independent of magnitude mixing.
    double sum = 0.0, comp = 0.0;
    for (int j = 0; j < n_; ++j) {
      double term = cost_[j] * result_.x[j] - comp;
      double t = sum + term;
      comp = (t - sum) - term;
      sum = t;
    }
    result_.objective = sum;
    return std::move(result_);
  }

  const SparseMatrixCsc& a_;
  const int m_;
  const int n_;
  const SimplexOptions opt_;
  std::vector<double> cost_;
  std::vector<double> scale_;  // 1 / sqrt(1 + |a_j|^2)
  std::vector<double> rhs_;

  std::vector<int> head_;
  std::vector<int> where_;
  std::vector<double> xb_;
  std::vector<double> y_;
  int cursor_ = 0;

  std::vector<double> work_;
  std::vector<double> alpha_;
  std::vector<double> rho_;
  std::vector<double> h_;

  std::vector<int> core_cols_;
  std::vector<int> core_pos_;
  std::vector<int> core_rows_;
  std::vector<int> row_to_core_;
  std::vector<int> slack_pos_;  // position of each row's slack in the factored basis
  Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu_;
  std::vector<Eta> etas_;

  SimplexResult result_;
};

}  // namespace

SimplexResult simplex_maximize(const SparseMatrixCsc& a,
                               std::span<const double> c,
                               std::span<const double> b,
                               const SimplexOptions& options) {
  return RevisedSimplex(a, c, b, options).run();
}

}  // namespace opera
