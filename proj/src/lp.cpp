#include "sdmpc/lp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace sdmpc::lp {
namespace {

constexpr double kPivotTol = 1e-11;
constexpr double kCostTol = 1e-10;

enum class SimplexStatus { kOptimal, kInfeasible, kUnbounded };

struct SimplexResult {
  SimplexStatus status = SimplexStatus::kInfeasible;
  Eigen::VectorXd y;   // primal variables of the standard-form problem
  Eigen::VectorXd pi;  // equality multipliers
  double value = 0.0;
};

// Dense two-phase tableau simplex for  min costᵀy  s.t.  E y = f, y ≥ 0.
// Dantzig pricing, falling back to Bland's rule after a run of degenerate
// pivots so the method cannot cycle.
class Tableau {
 public:
  Tableau(const Eigen::MatrixXd& E, const Eigen::VectorXd& f)
      : rows_(static_cast<int>(E.rows())),
        vars_(static_cast<int>(E.cols())),
        sign_(rows_),
        t_(rows_, vars_ + rows_ + 1),
        obj_(vars_ + rows_ + 1),
        basis_(rows_) {
    t_.setZero();
    for (int i = 0; i < rows_; ++i) {
      sign_[i] = f[i] < 0.0 ? -1.0 : 1.0;
      t_.row(i).head(vars_) = sign_[i] * E.row(i);
      t_(i, vars_ + i) = 1.0;
      t_(i, rhs()) = sign_[i] * f[i];
      basis_[i] = vars_ + i;
    }
  }

  int rhs() const { return vars_ + rows_; }

  // Phase 1: drive the artificial sum to zero. Returns false when the
  // equality system has no nonnegative solution.
  bool PhaseOne(double tol) {
    obj_.setZero();
    for (int i = 0; i < rows_; ++i) {
      obj_.head(vars_) -= t_.row(i).head(vars_).transpose();
      obj_[rhs()] -= t_(i, rhs());
    }
    if (!Iterate()) {
      throw std::logic_error("lp: phase one cannot be unbounded");
    }
    if (-obj_[rhs()] > tol) return false;
    // Pivot remaining artificials out where a structural column allows it.
    for (int i = 0; i < rows_; ++i) {
      if (basis_[i] < vars_) continue;
      int best = -1;
      double best_abs = 1e-9;
      for (int j = 0; j < vars_; ++j) {
        if (std::abs(t_(i, j)) > best_abs) {
          best_abs = std::abs(t_(i, j));
          best = j;
        }
      }
      if (best >= 0) Pivot(i, best);
    }
    return true;
  }

  // Phase 2 on the real cost. Returns false when unbounded below.
  bool PhaseTwo(const Eigen::VectorXd& cost) {
    obj_.setZero();
    obj_.head(vars_) = cost;
    for (int i = 0; i < rows_; ++i) {
      const double cb = basis_[i] < vars_ ? cost[basis_[i]] : 0.0;
      if (cb != 0.0) obj_ -= cb * t_.row(i).transpose();
    }
    return Iterate();
  }

  SimplexResult Extract(const Eigen::VectorXd& cost) const {
    SimplexResult out;
    out.status = SimplexStatus::kOptimal;
    out.y = Eigen::VectorXd::Zero(vars_);
    for (int i = 0; i < rows_; ++i) {
      if (basis_[i] < vars_) out.y[basis_[i]] = std::max(0.0, t_(i, rhs()));
    }
    // The artificial block of the tableau holds B⁻¹ of the sign-flipped
    // system, so π = D · c_Bᵀ B⁻¹.
    out.pi = Eigen::VectorXd::Zero(rows_);
    for (int i = 0; i < rows_; ++i) {
      const double cb = basis_[i] < vars_ ? cost[basis_[i]] : 0.0;
      if (cb != 0.0) out.pi += cb * t_.row(i).segment(vars_, rows_).transpose();
    }
    for (int k = 0; k < rows_; ++k) out.pi[k] *= sign_[k];
    out.value = cost.dot(out.y);
    return out;
  }

 private:
  bool Iterate() {
    const int max_iter = 50 * (vars_ + rows_) + 1000;
    int degenerate_run = 0;
    for (int iter = 0; iter < max_iter; ++iter) {
      const bool bland = degenerate_run > rows_ + 5;
      int enter = -1;
      double most_negative = -kCostTol;
      for (int j = 0; j < vars_; ++j) {
        if (obj_[j] < most_negative) {
          enter = j;
          if (bland) break;
          most_negative = obj_[j];
        }
      }
      if (enter < 0) return true;

      int leave = -1;
      double best_ratio = std::numeric_limits<double>::infinity();
      for (int i = 0; i < rows_; ++i) {
        const double a = t_(i, enter);
        if (a <= kPivotTol) continue;
        const double ratio = t_(i, rhs()) / a;
        if (ratio < best_ratio - 1e-12 ||
            (ratio <= best_ratio + 1e-12 && leave >= 0 &&
             basis_[i] < basis_[leave])) {
          best_ratio = ratio;
          leave = i;
        }
      }
      if (leave < 0) return false;
      degenerate_run = best_ratio <= 1e-12 ? degenerate_run + 1 : 0;
      Pivot(leave, enter);
    }
    throw std::runtime_error("lp: simplex iteration limit reached");
  }

  void Pivot(int r, int c) {
    t_.row(r) /= t_(r, c);
    for (int i = 0; i < rows_; ++i) {
      if (i == r) continue;
      const double factor = t_(i, c);
      if (factor != 0.0) t_.row(i) -= factor * t_.row(r);
    }
    const double factor = obj_[c];
    if (factor != 0.0) obj_ -= factor * t_.row(r).transpose();
    basis_[r] = c;
  }

  int rows_;
  int vars_;
  Eigen::VectorXd sign_;
  Eigen::MatrixXd t_;
  Eigen::VectorXd obj_;
  std::vector<int> basis_;
};

SimplexResult SolveStandardForm(const Eigen::MatrixXd& E,
                                const Eigen::VectorXd& f,
                                const Eigen::VectorXd& cost) {
  Tableau tableau(E, f);
  const double tol = 1e-9 * (1.0 + f.lpNorm<Eigen::Infinity>());
  if (!tableau.PhaseOne(tol)) return {SimplexStatus::kInfeasible, {}, {}, 0.0};
  if (!tableau.PhaseTwo(cost)) return {SimplexStatus::kUnbounded, {}, {}, 0.0};
  return tableau.Extract(cost);
}

}  // namespace

const char* ToString(LpStatus status) {
  switch (status) {
    case LpStatus::kOptimal:
      return "optimal";
    case LpStatus::kInfeasible:
      return "infeasible";
    case LpStatus::kUnbounded:
      return "unbounded";
  }
  return "unknown";
}

LpResult Maximize(const Eigen::VectorXd& c, const Eigen::MatrixXd& A,
                  const Eigen::VectorXd& b) {
  if (A.cols() != c.size() || A.rows() != b.size()) {
    throw std::invalid_argument("lp::Maximize: dimension mismatch");
  }
  LpResult out;
  if (A.rows() == 0) {
    out.x = Eigen::VectorXd::Zero(c.size());
    out.status = c.isZero(0.0) ? LpStatus::kOptimal : LpStatus::kUnbounded;
    return out;
  }
  // Dual: min bᵀy  s.t.  Aᵀy = c, y ≥ 0.
  const SimplexResult dual = SolveStandardForm(A.transpose(), c, b);
  switch (dual.status) {
    case SimplexStatus::kOptimal:
      out.status = LpStatus::kOptimal;
      out.x = dual.pi;
      out.value = dual.value;
      return out;
    case SimplexStatus::kUnbounded:
      out.status = LpStatus::kInfeasible;
      return out;
    case SimplexStatus::kInfeasible: {
      // Dual infeasible: primal is unbounded or itself infeasible.
      const MarginResult margin = FeasibilityMargin(A, b);
      out.status = margin.margin >= -1e-9 ? LpStatus::kUnbounded
                                          : LpStatus::kInfeasible;
      return out;
    }
  }
  return out;
}

MarginResult FeasibilityMargin(const Eigen::MatrixXd& A,
                               const Eigen::VectorXd& b, double cap) {
  const Eigen::Index d = A.cols();
  MarginResult out;
  if (A.rows() == 0) {
    out.margin = cap;
    out.x = Eigen::VectorXd::Zero(d);
    return out;
  }
  // Zero rows do not involve x; a negative offset there makes the system
  // infeasible by that amount.
  const Eigen::VectorXd norms = A.rowwise().norm();
  std::vector<Eigen::Index> rows;
  double zero_row_margin = cap;
  for (Eigen::Index i = 0; i < A.rows(); ++i) {
    if (norms[i] > 1e-14) {
      rows.push_back(i);
    } else {
      zero_row_margin = std::min(zero_row_margin, b[i]);
    }
  }
  if (zero_row_margin < 0.0 || rows.empty()) {
    out.margin = zero_row_margin;
    out.x = Eigen::VectorXd::Zero(d);
    return out;
  }
  const Eigen::Index r = static_cast<Eigen::Index>(rows.size());
  Eigen::MatrixXd lifted = Eigen::MatrixXd::Zero(r + 1, d + 1);
  lifted.topLeftCorner(r, d) = A(rows, Eigen::all);
  lifted.col(d).head(r) = norms(rows);
  lifted(r, d) = 1.0;
  Eigen::VectorXd rhs(r + 1);
  rhs << b(rows), cap;
  Eigen::VectorXd objective = Eigen::VectorXd::Zero(d + 1);
  objective[d] = 1.0;
  const SimplexResult dual =
      SolveStandardForm(lifted.transpose(), objective, rhs);
  if (dual.status != SimplexStatus::kOptimal) {
    throw std::logic_error("lp::FeasibilityMargin: auxiliary LP not solved");
  }
  out.margin = dual.value;
  out.x = dual.pi.head(d);
  return out;
}

}  // namespace sdmpc::lp
