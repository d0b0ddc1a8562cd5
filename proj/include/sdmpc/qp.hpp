#pragma once

#include <Eigen/Dense>

namespace sdmpc {

/// min ½ zᵀHz + fᵀz  s.t.  G_ineq z ≤ h,  G_eq z = b.
struct QpProblem {
  Eigen::MatrixXd H;
  Eigen::VectorXd f;
  Eigen::MatrixXd G_ineq;
  Eigen::VectorXd h;
  Eigen::MatrixXd G_eq;
  Eigen::VectorXd b;

  QpProblem() = default;
  /// Validates shapes and H = Hᵀ with λ_min(H) > 1e-10; throws
  /// std::invalid_argument otherwise. Empty constraint blocks may be passed
  /// as 0×s matrices.
  QpProblem(Eigen::MatrixXd H, Eigen::VectorXd f, Eigen::MatrixXd G_ineq,
            Eigen::VectorXd h, Eigen::MatrixXd G_eq, Eigen::VectorXd b);

  int size() const { return static_cast<int>(H.rows()); }
  int num_ineq() const { return static_cast<int>(G_ineq.rows()); }
  int num_eq() const { return static_cast<int>(G_eq.rows()); }
  double Objective(const Eigen::VectorXd& z) const {
    return 0.5 * z.dot(H * z) + f.dot(z);
  }
  void Validate() const;
};

enum class QpStatus { kOptimal, kInfeasible, kMaxIter };

const char* ToString(QpStatus status);

struct QpSolution {
  Eigen::VectorXd z_star;
  double objective = 0.0;
  QpStatus status = QpStatus::kMaxIter;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  /// Multipliers with H z + f + G_ineqᵀ λ + G_eqᵀ ν = 0 at the optimum.
  Eigen::VectorXd ineq_multipliers;
  Eigen::VectorXd eq_multipliers;
  int iterations = 0;
};

struct QpSettings {
  double eps_abs = 1e-8;
  int max_iter = 1000;
};

/// Dual active-set method of Goldfarb and Idnani, followed by a KKT polish
/// on the final working set. Deterministic: the constraint selection order
/// depends only on the data.
QpSolution Solve(const QpProblem& problem, const QpSettings& settings = {});

struct KktReport {
  bool ok = false;
  double stationarity = 0.0;
  double primal_violation = 0.0;
  double min_multiplier = 0.0;
  double complementarity = 0.0;
  int num_active = 0;
};

/// Independent optimality oracle. Constraints with slack within the
/// activity threshold are treated as active; their multipliers come from a
/// least-squares fit of the stationarity condition. z is accepted when
/// stationarity, primal feasibility, dual sign, and complementary slackness
/// all hold to tol.
KktReport EvaluateKkt(const QpProblem& problem, const Eigen::VectorXd& z, double tol);

inline bool CheckKkt(const QpProblem& problem, const Eigen::VectorXd& z, double tol) {
  return EvaluateKkt(problem, z, tol).ok;
}

}  // namespace sdmpc
