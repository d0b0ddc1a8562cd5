#pragma once

#include <Eigen/Dense>

#include "sdmpc/lti.hpp"
#include "sdmpc/polytope.hpp"

namespace sdmpc {

/// Stage, coupling and terminal weights. Q, R, q_e, eps_pe are inputs;
/// K, P, P_e are filled in by Synthesize().
struct CostWeights {
  Eigen::MatrixXd Q;
  Eigen::MatrixXd R;
  double q_e = 1.0;
  double eps_pe = 1e-6;
  Eigen::MatrixXd K;
  Eigen::MatrixXd P;
  Eigen::MatrixXd P_e;
};

struct SynthesisResult {
  CostWeights weights;
  Polytope X;
  Polytope U;
  Polytope X_f;
  Polytope X_0;
  Polytope X_bar_0;
  double rho_max = 0.0;
  int horizon = 0;
  double xbar_scale = 0.5;
  /// X̄_0 is the switch_steps-step backward reachable set of X_f.
  int switch_steps = 0;
};

struct DareSolution {
  Eigen::MatrixXd K;
  Eigen::MatrixXd P;
  int iterations = 0;
};

/// Fixed-point Riccati iteration from P₀ = Q until the relative step drops
/// below 1e-12. K = -(R + BᵀPB)⁻¹BᵀPA, so u = Kx is the LQR law.
DareSolution SolveDare(const LtiSystem& sys, const Eigen::MatrixXd& Q,
                       const Eigen::MatrixXd& R, int max_iter = 10000);

/// ‖AᵀPA − P − AᵀPB(R+BᵀPB)⁻¹BᵀPA + Q‖ (Frobenius).
double DareResidual(const LtiSystem& sys, const Eigen::MatrixXd& Q,
                    const Eigen::MatrixXd& R, const Eigen::MatrixXd& P);

/// Coupling terminal weight: solves A_clᵀ P_e A_cl − P_e = −(q_e + eps_pe)·I
/// through its Kronecker-product form.
Eigen::MatrixXd SolvePe(const Eigen::MatrixXd& A_cl, double q_e, double eps_pe);

struct SynthesisOptions {
  int horizon = 10;
  double xbar_scale = 0.5;
  double eps_pe = 1e-6;
};

/// round(xbar_scale·N) clamped to [0, N].
int SwitchSetSteps(int horizon, double xbar_scale);

/// Full offline pipeline: LQR terminal law, P_e, X_f (maximal invariant set
/// of {x ∈ X : Kx ∈ U}), X_0 = Pre_N(X_f) and the switch set
/// X̄_0 = Pre_j(X_f) with j = SwitchSetSteps(N, xbar_scale). Every Pre_j(X_f)
/// is control invariant and Pre_j ⊆ Pre_N, so X_f ⊆ X̄_0 ⊆ X_0 by
/// construction; xbar_scale = 1 gives X̄_0 = X_0 and 0 gives X_f.
/// Throws std::runtime_error naming the failed certificate when a set is
/// empty or the nesting X_f ⊆ X̄_0 ⊆ X_0 ⊆ X does not hold.
SynthesisResult Synthesize(const LtiSystem& sys, const Polytope& X,
                           const Polytope& U, const Eigen::MatrixXd& Q,
                           const Eigen::MatrixXd& R, double q_e,
                           const SynthesisOptions& options = {});

/// Closed-loop matrix A + BK.
inline Eigen::MatrixXd ClosedLoop(const LtiSystem& sys, const CostWeights& w) {
  return sys.A() + sys.B() * w.K;
}

}  // namespace sdmpc
