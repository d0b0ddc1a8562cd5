#pragma once

#include <Eigen/Dense>

namespace sdmpc::lp {

enum class LpStatus { kOptimal, kInfeasible, kUnbounded };

const char* ToString(LpStatus status);

struct LpResult {
  LpStatus status = LpStatus::kInfeasible;
  double value = 0.0;
  Eigen::VectorXd x;
};

/// Solves  max cᵀx  s.t.  A x ≤ b  with x free.
///
/// The problem is handed to a two-phase tableau simplex in its dual standard
/// form (min bᵀy s.t. Aᵀy = c, y ≥ 0), which keeps the tableau height equal
/// to the ambient dimension. The primal maximizer is read back from the
/// simplex multipliers. Polytope-sized problems (dimension ≲ 10, a few
/// thousand rows) solve in microseconds.
LpResult Maximize(const Eigen::VectorXd& c, const Eigen::MatrixXd& A,
                  const Eigen::VectorXd& b);

/// Largest t ≤ cap such that A x + t·‖aᵢ‖ ≤ b has a solution x.
/// Positive means the set has an interior, negative means it is empty.
struct MarginResult {
  double margin = 0.0;
  Eigen::VectorXd x;
};
MarginResult FeasibilityMargin(const Eigen::MatrixXd& A,
                               const Eigen::VectorXd& b, double cap = 1.0);

}  // namespace sdmpc::lp
