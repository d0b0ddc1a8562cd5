#pragma once

#include <Eigen/Dense>

namespace sdmpc {

/// Discrete-time linear system x⁺ = A x + B u shared by every agent.
class LtiSystem {
 public:
  LtiSystem() = default;

  /// Throws std::invalid_argument on inconsistent shapes, an uncontrollable
  /// pair, or a rank-deficient B.
  LtiSystem(Eigen::MatrixXd A, Eigen::MatrixXd B, double dt);

  const Eigen::MatrixXd& A() const { return A_; }
  const Eigen::MatrixXd& B() const { return B_; }
  int n() const { return static_cast<int>(A_.rows()); }
  int m() const { return static_cast<int>(B_.cols()); }
  double dt() const { return dt_; }

  Eigen::VectorXd Step(const Eigen::VectorXd& x, const Eigen::VectorXd& u) const {
    return A_ * x + B_ * u;
  }

 private:
  Eigen::MatrixXd A_;
  Eigen::MatrixXd B_;
  double dt_ = 1.0;
};

/// Numerical rank of [B, AB, ..., Aⁿ⁻¹B] equals n (singular value tolerance
/// relative to the largest singular value).
bool IsControllable(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                    double tol = 1e-8);

double SpectralRadius(const Eigen::MatrixXd& M);

inline bool IsSchurStable(const Eigen::MatrixXd& M, double tol = 1e-8) {
  return SpectralRadius(M) < 1.0 - tol;
}

}  // namespace sdmpc
