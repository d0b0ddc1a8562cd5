#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sdmpc/lti.hpp"
#include "sdmpc/polytope.hpp"
#include "sdmpc/qp.hpp"
#include "sdmpc/synthesis.hpp"

namespace sdmpc {

/// Stacked prediction x_{0:N} = Sx·x₀ + Su·u_{0:N-1}.
struct PredictionModel {
  Eigen::MatrixXd Sx;  // (N+1)n × n, block k = A^k
  Eigen::MatrixXd Su;  // (N+1)n × Nm, block (k, j) = A^{k-1-j}B for j < k
  int N = 0;
  int n = 0;
  int m = 0;

  static PredictionModel Build(const LtiSystem& sys, int N);
  Eigen::VectorXd States(const Eigen::VectorXd& x0, const Eigen::VectorXd& u) const;
};

/// State sequence x_{0:N} with the inputs u_{0:N-1} that generate it.
struct Trajectory {
  std::vector<Eigen::VectorXd> states;
  std::vector<Eigen::VectorXd> inputs;

  int horizon() const { return static_cast<int>(inputs.size()); }
  /// max_k ‖x_{k+1} − (A x_k + B u_k)‖_∞; throws on length mismatch.
  double DynamicsResidual(const LtiSystem& sys) const;
  Eigen::VectorXd InputStack() const;
  Eigen::VectorXd StateStack() const;

  static Trajectory Zero(int n, int m, int N);
  /// Step-by-step recursion, so a plant advanced with sys.Step() reproduces
  /// states[1] bitwise.
  static Trajectory Rollout(const LtiSystem& sys, const Eigen::VectorXd& x0,
                            const Eigen::VectorXd& input_stack);
};

/// A neighbour's (or the agent's own) announced plan.
using PresumedTrajectory = Trajectory;

/// Drops x₀, appends (A+BK)x_N and the input K x_N.
/// Throws std::invalid_argument if prev is not dynamically consistent.
PresumedTrajectory ShiftPresumed(const LtiSystem& sys, const Trajectory& prev,
                                 const Eigen::MatrixXd& K, double tol = 1e-9);

enum class ConstraintGroup { kState, kInput, kTerminalSet, kCompatibility, kTerminalEquality };

const char* ToString(ConstraintGroup group);

/// Dense QP over the input stack, together with its parameter-affine form
///   f = F θ,   h = w + E θ,   b = Y θ
/// where θ = [x₀; x̂_self (if any); x̂_j for each neighbour], each presumed
/// trajectory stacked over k = 0..N.
struct CondensedQp {
  QpProblem qp;
  /// J(u) = qp.Objective(u) + constant.
  double constant = 0.0;
  std::vector<ConstraintGroup> ineq_groups;
  std::vector<int> ineq_steps;
  std::vector<ConstraintGroup> eq_groups;
  std::vector<int> eq_steps;

  Eigen::VectorXd theta;
  Eigen::MatrixXd F;
  Eigen::MatrixXd E;
  Eigen::VectorXd w;
  Eigen::MatrixXd Y;

  int N = 0;
  int n = 0;
  int m = 0;
  Eigen::VectorXd x0;
  /// +inf when the problem has no compatibility rows.
  double compatibility_bound = 0.0;
  /// ‖x₀ − x̂₀^self‖_∞, the k = 0 compatibility row that the decision
  /// variables cannot influence. Zero when there is no self presumption.
  double initial_drift = 0.0;

  /// (step k, input index) of decision variable i.
  std::pair<int, int> DecisionBlock(int index) const { return {index / m, index % m}; }
  double Cost(const Eigen::VectorXd& u) const { return qp.Objective(u) + constant; }
  /// Largest violation among rows of one group (0 when satisfied).
  double GroupViolation(const Eigen::VectorXd& u, ConstraintGroup group) const;
  double MaxViolation(const Eigen::VectorXd& u) const;
};

/// Sets used by a plain regulator: path constraint for k = 1..N−1, terminal
/// constraint at k = N, input constraint for every k.
struct RegulatorSets {
  Polytope path;
  Polytope terminal;
  Polytope input;
};

/// min Σ_{k<N}(‖x_k‖²_Q + ‖u_k‖²_R) + ‖x_N‖²_P under RegulatorSets.
CondensedQp BuildRegulator(const LtiSystem& sys, const CostWeights& weights,
                           const RegulatorSets& sets, int N, const Eigen::VectorXd& x0);

/// Decoupled terminal MPC: path set X̄_0, terminal set X_f.
CondensedQp BuildDecoupled(const LtiSystem& sys, const SynthesisResult& syn,
                           const Eigen::VectorXd& x0);

/// Start-up problem: q_e = 0, P_e = 0, path set X, no compatibility and no
/// terminal equality.
CondensedQp BuildInitialization(const LtiSystem& sys, const SynthesisResult& syn,
                                const Eigen::VectorXd& x0);

struct CouplingOptions {
  bool compatibility = true;
  bool terminal_equality = true;
};

/// c_t = min_j ‖x_prev_self − x_prev_j‖² / (4√n (N−1) ρ_max), floored at
/// 1e-12. +inf without neighbours. Throws for N < 2.
double CompatibilityBound(const Eigen::VectorXd& x_prev_self,
                          const std::vector<Eigen::VectorXd>& neighbor_prev_states,
                          int N, double rho_max);

/// Coupled DMPC problem. presumed_self may be null only when both coupling
/// options are off.
CondensedQp BuildCoupled(const LtiSystem& sys, const SynthesisResult& syn,
                         const Eigen::VectorXd& x0, const PresumedTrajectory* presumed_self,
                         const std::vector<PresumedTrajectory>& presumed_neighbors,
                         const Eigen::VectorXd& x_prev_self,
                         const std::vector<Eigen::VectorXd>& neighbor_prev_states,
                         const CouplingOptions& options = {});

/// Direct summation of the coupled cost over a trajectory.
double CoupledCost(const CostWeights& w, const Trajectory& traj,
                   const std::vector<PresumedTrajectory>& presumed_neighbors);

/// Direct summation of Σ(‖x_k‖²_Q + ‖u_k‖²_R) + ‖x_N‖²_P.
double DecoupledCost(const CostWeights& w, const Trajectory& traj);

}  // namespace sdmpc
