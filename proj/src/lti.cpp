#include "sdmpc/lti.hpp"

#include <stdexcept>

namespace sdmpc {

LtiSystem::LtiSystem(Eigen::MatrixXd A, Eigen::MatrixXd B, double dt)
    : A_(std::move(A)), B_(std::move(B)), dt_(dt) {
  if (A_.rows() == 0 || A_.rows() != A_.cols()) {
    throw std::invalid_argument("LtiSystem: A must be square and nonempty");
  }
  if (B_.rows() != A_.rows() || B_.cols() == 0) {
    throw std::invalid_argument("LtiSystem: B must have n rows and m > 0 columns");
  }
  if (!(dt_ > 0.0)) throw std::invalid_argument("LtiSystem: dt must be positive");
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(B_);
  const Eigen::VectorXd s = svd.singularValues();
  if (s[s.size() - 1] <= 1e-8 * std::max(1.0, s[0])) {
    throw std::invalid_argument("LtiSystem: B must have full column rank");
  }
  if (!IsControllable(A_, B_)) {
    throw std::invalid_argument("LtiSystem: (A, B) is not controllable");
  }
}

bool IsControllable(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                    double tol) {
  const Eigen::Index n = A.rows();
  const Eigen::Index m = B.cols();
  Eigen::MatrixXd ctrb(n, n * m);
  Eigen::MatrixXd block = B;
  for (Eigen::Index k = 0; k < n; ++k) {
    ctrb.middleCols(k * m, m) = block;
    block = A * block;
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(ctrb);
  const Eigen::VectorXd s = svd.singularValues();
  if (s.size() < n || s[0] == 0.0) return false;
  return s[n - 1] > tol * s[0];
}

double SpectralRadius(const Eigen::MatrixXd& M) {
  if (M.size() == 0) return 0.0;
  Eigen::EigenSolver<Eigen::MatrixXd> es(M, false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

}  // namespace sdmpc
