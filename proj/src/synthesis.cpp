#include "sdmpc/synthesis.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace sdmpc {
namespace {

void RequireSymmetricPositiveDefinite(const Eigen::MatrixXd& M, const char* what) {
  if (M.rows() != M.cols() || M.rows() == 0) {
    throw std::invalid_argument(std::string(what) + " must be square");
  }
  if (!M.isApprox(M.transpose(), 1e-10)) {
    throw std::invalid_argument(std::string(what) + " must be symmetric");
  }
  Eigen::LLT<Eigen::MatrixXd> llt(M);
  if (llt.info() != Eigen::Success) {
    throw std::invalid_argument(std::string(what) + " must be positive definite");
  }
}

Eigen::MatrixXd RiccatiMap(const LtiSystem& sys, const Eigen::MatrixXd& Q,
                           const Eigen::MatrixXd& R, const Eigen::MatrixXd& P) {
  const Eigen::MatrixXd& A = sys.A();
  const Eigen::MatrixXd& B = sys.B();
  const Eigen::MatrixXd BtPA = B.transpose() * P * A;
  const Eigen::MatrixXd S = R + B.transpose() * P * B;
  return A.transpose() * P * A - BtPA.transpose() * S.ldlt().solve(BtPA) + Q;
}

}  // namespace

int SwitchSetSteps(int horizon, double xbar_scale) {
  const int j = static_cast<int>(std::lround(xbar_scale * horizon));
  return std::clamp(j, 0, horizon);
}

DareSolution SolveDare(const LtiSystem& sys, const Eigen::MatrixXd& Q,
                       const Eigen::MatrixXd& R, int max_iter) {
  RequireSymmetricPositiveDefinite(Q, "Q");
  RequireSymmetricPositiveDefinite(R, "R");
  if (Q.rows() != sys.n() || R.rows() != sys.m()) {
    throw std::invalid_argument("SolveDare: weight dimensions do not match the system");
  }
  DareSolution out;
  Eigen::MatrixXd P = Q;
  for (int iter = 1; iter <= max_iter; ++iter) {
    Eigen::MatrixXd next = RiccatiMap(sys, Q, R, P);
    next = 0.5 * (next + next.transpose()).eval();
    const double step = (next - P).norm();
    P = std::move(next);
    if (step <= 1e-12 * P.norm()) {
      out.iterations = iter;
      out.P = P;
      const Eigen::MatrixXd S = R + sys.B().transpose() * P * sys.B();
      out.K = -S.ldlt().solve(sys.B().transpose() * P * sys.A());
      return out;
    }
  }
  throw std::runtime_error("SolveDare: Riccati iteration did not converge");
}

double DareResidual(const LtiSystem& sys, const Eigen::MatrixXd& Q,
                    const Eigen::MatrixXd& R, const Eigen::MatrixXd& P) {
  return (RiccatiMap(sys, Q, R, P) - P).norm();
}

Eigen::MatrixXd SolvePe(const Eigen::MatrixXd& A_cl, double q_e, double eps_pe) {
  if (A_cl.rows() != A_cl.cols()) throw std::invalid_argument("SolvePe: A_cl must be square");
  if (!(q_e > 0.0) || eps_pe < 0.0) {
    throw std::invalid_argument("SolvePe: need q_e > 0 and eps_pe >= 0");
  }
  if (!IsSchurStable(A_cl)) {
    throw std::invalid_argument("SolvePe: closed-loop matrix is not Schur stable");
  }
  const Eigen::Index n = A_cl.rows();
  const Eigen::MatrixXd At = A_cl.transpose();
  // vec(Aᵀ P A) = (Aᵀ ⊗ Aᵀ) vec(P) in column-major order.
  Eigen::MatrixXd kron(n * n, n * n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      kron.block(i * n, j * n, n, n) = At(i, j) * At;
    }
  }
  kron -= Eigen::MatrixXd::Identity(n * n, n * n);
  const Eigen::MatrixXd W = (q_e + eps_pe) * Eigen::MatrixXd::Identity(n, n);
  const Eigen::VectorXd rhs = -Eigen::Map<const Eigen::VectorXd>(W.data(), n * n);
  const Eigen::VectorXd vec = kron.partialPivLu().solve(rhs);
  Eigen::MatrixXd P_e = Eigen::Map<const Eigen::MatrixXd>(vec.data(), n, n);
  return 0.5 * (P_e + P_e.transpose());
}

SynthesisResult Synthesize(const LtiSystem& sys, const Polytope& X, const Polytope& U,
                           const Eigen::MatrixXd& Q, const Eigen::MatrixXd& R,
                           double q_e, const SynthesisOptions& options) {
  if (X.dim() != sys.n() || U.dim() != sys.m()) {
    throw std::invalid_argument("Synthesize: constraint set dimensions do not match the system");
  }
  if (options.horizon < 1) throw std::invalid_argument("Synthesize: horizon must be >= 1");
  if (!(options.xbar_scale >= 0.0 && options.xbar_scale <= 1.0)) {
    throw std::invalid_argument("Synthesize: xbar_scale must lie in [0, 1]");
  }
  for (const auto* set : {&X, &U}) {
    if (!set->ContainsOriginInInterior() || !set->IsBounded()) {
      throw std::invalid_argument(
          "Synthesize: X and U must be bounded with the origin in their interior");
    }
  }

  SynthesisResult out;
  out.horizon = options.horizon;
  out.xbar_scale = options.xbar_scale;
  out.X = X.Reduced();
  out.U = U.Reduced();

  CostWeights& w = out.weights;
  w.Q = Q;
  w.R = R;
  w.q_e = q_e;
  w.eps_pe = options.eps_pe;
  const DareSolution dare = SolveDare(sys, Q, R);
  w.K = dare.K;
  w.P = dare.P;
  const Eigen::MatrixXd A_cl = ClosedLoop(sys, w);
  w.P_e = SolvePe(A_cl, q_e, options.eps_pe);

  const Polytope admissible = out.X.Intersect(out.U.Preimage(w.K)).Reduced();
  out.X_f = MaxInvariantSet(A_cl, admissible);
  if (out.X_f.IsEmptyLp() || !out.X_f.ContainsOriginInInterior()) {
    throw std::runtime_error("Synthesize: terminal set X_f is empty or has the origin on its boundary");
  }
  out.X_0 = PreN(sys, out.X_f, out.X, out.U, options.horizon);
  if (out.X_0.is_empty()) throw std::runtime_error("Synthesize: feasible set X_0 is empty");

  out.switch_steps = SwitchSetSteps(options.horizon, options.xbar_scale);
  out.X_bar_0 = out.switch_steps == 0
                    ? out.X_f
                    : PreN(sys, out.X_f, out.X, out.U, out.switch_steps);
  if (out.X_bar_0.is_empty()) throw std::runtime_error("Synthesize: switch set X_bar_0 is empty");

  if (!out.X_f.IsSubsetOf(out.X_bar_0)) {
    throw std::runtime_error("Synthesize: nesting violated, X_f is not a subset of X_bar_0");
  }
  if (!out.X_bar_0.IsSubsetOf(out.X_0)) {
    throw std::runtime_error("Synthesize: nesting violated, X_bar_0 is not a subset of X_0");
  }
  if (!out.X_0.IsSubsetOf(out.X)) {
    throw std::runtime_error("Synthesize: nesting violated, X_0 is not a subset of X");
  }
  out.rho_max = NormBound(out.X);
  return out;
}

}  // namespace sdmpc
