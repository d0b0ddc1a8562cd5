#include "sdmpc/cocp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace sdmpc {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Eigen::VectorXd Stack(const std::vector<Eigen::VectorXd>& parts) {
  Eigen::Index total = 0;
  for (const auto& p : parts) total += p.size();
  Eigen::VectorXd out(total);
  Eigen::Index at = 0;
  for (const auto& p : parts) {
    out.segment(at, p.size()) = p;
    at += p.size();
  }
  return out;
}

void RequireShape(const Trajectory& t, int n, int m, int N, const char* what) {
  if (static_cast<int>(t.states.size()) != N + 1 || t.horizon() != N) {
    throw std::invalid_argument(std::string(what) + ": trajectory length does not match horizon");
  }
  for (const auto& x : t.states) {
    if (x.size() != n) throw std::invalid_argument(std::string(what) + ": state dimension mismatch");
  }
  for (const auto& u : t.inputs) {
    if (u.size() != m) throw std::invalid_argument(std::string(what) + ": input dimension mismatch");
  }
}

struct CostTerms {
  Eigen::MatrixXd Q;
  Eigen::MatrixXd R;
  Eigen::MatrixXd P;
  double q_e = 0.0;
  Eigen::MatrixXd P_e;
};

// Shared assembly for every problem variant.
class Assembler {
 public:
  Assembler(const LtiSystem& sys, int N, const Eigen::VectorXd& x0, int num_presumed)
      : model_(PredictionModel::Build(sys, N)),
        N_(N),
        n_(sys.n()),
        m_(sys.m()),
        num_theta_(sys.n() + num_presumed * (N + 1) * sys.n()) {
    if (x0.size() != n_) throw std::invalid_argument("cocp: x0 dimension mismatch");
    out_.N = N;
    out_.n = n_;
    out_.m = m_;
    out_.x0 = x0;
    out_.compatibility_bound = kInf;
  }

  int PresumedColumn(int p, int k) const { return n_ + p * (N_ + 1) * n_ + k * n_; }

  void SetTheta(const Eigen::VectorXd& theta) { out_.theta = theta; }

  // Σ_k x_kᵀW_k x_k + uᵀR̄u − 2 Σ_j x_kᵀ Wc_k x̂_k^j + const, where W_k
  // absorbs the neighbour weights.
  void SetCost(const CostTerms& c, const std::vector<int>& neighbor_blocks,
               const std::vector<const Trajectory*>& neighbor_trajs) {
    const int nn = (N_ + 1) * n_;
    const double count = static_cast<double>(neighbor_blocks.size());
    Eigen::MatrixXd W = Eigen::MatrixXd::Zero(nn, nn);
    Eigen::MatrixXd Wc = Eigen::MatrixXd::Zero(nn, nn);
    const Eigen::MatrixXd Qe = c.q_e * Eigen::MatrixXd::Identity(n_, n_);
    for (int k = 0; k < N_; ++k) {
      W.block(k * n_, k * n_, n_, n_) = c.Q + count * Qe;
      Wc.block(k * n_, k * n_, n_, n_) = Qe;
    }
    W.block(N_ * n_, N_ * n_, n_, n_) = c.P + count * c.P_e;
    Wc.block(N_ * n_, N_ * n_, n_, n_) = c.P_e;
    Eigen::MatrixXd Rbar = Eigen::MatrixXd::Zero(N_ * m_, N_ * m_);
    for (int k = 0; k < N_; ++k) Rbar.block(k * m_, k * m_, m_, m_) = c.R;

    const Eigen::MatrixXd& Sx = model_.Sx;
    const Eigen::MatrixXd& Su = model_.Su;
    Eigen::MatrixXd H = 2.0 * (Su.transpose() * W * Su + Rbar);
    H = 0.5 * (H + H.transpose()).eval();
    H_ = H;

    out_.F = Eigen::MatrixXd::Zero(N_ * m_, num_theta_);
    out_.F.leftCols(n_) = 2.0 * Su.transpose() * W * Sx;
    const Eigen::MatrixXd cross = -2.0 * Su.transpose() * Wc;
    for (int block : neighbor_blocks) out_.F.middleCols(PresumedColumn(block, 0), nn) = cross;

    const Eigen::VectorXd& x0 = out_.x0;
    const Eigen::VectorXd free = Sx * x0;
    double constant = free.dot(W * free);
    for (const Trajectory* t : neighbor_trajs) {
      const Eigen::VectorXd xhat = t->StateStack();
      constant += -2.0 * free.dot(Wc * xhat) + xhat.dot(Wc * xhat);
    }
    out_.constant = constant;
  }

  void AddStateRows(const Polytope& set, int k, ConstraintGroup group, int offset_block = -1) {
    const Eigen::MatrixXd& Hs = set.normals();
    const int r = static_cast<int>(Hs.rows());
    Eigen::MatrixXd G = Hs * model_.Su.middleRows(k * n_, n_);
    Eigen::MatrixXd E = Eigen::MatrixXd::Zero(r, num_theta_);
    E.leftCols(n_) = -Hs * model_.Sx.middleRows(k * n_, n_);
    if (offset_block >= 0) E.middleCols(PresumedColumn(offset_block, k), n_) = Hs;
    Append(G, E, set.offsets(), group, k);
  }

  void AddInputRows(const Polytope& set, int k) {
    const int r = set.num_facets();
    Eigen::MatrixXd G = Eigen::MatrixXd::Zero(r, N_ * m_);
    G.middleCols(k * m_, m_) = set.normals();
    Append(G, Eigen::MatrixXd::Zero(r, num_theta_), set.offsets(), ConstraintGroup::kInput, k);
  }

  void AddCompatibilityRows(int k, double bound, int self_block) {
    Eigen::MatrixXd Hs(2 * n_, n_);
    Hs << Eigen::MatrixXd::Identity(n_, n_), -Eigen::MatrixXd::Identity(n_, n_);
    const Eigen::MatrixXd G = Hs * model_.Su.middleRows(k * n_, n_);
    Eigen::MatrixXd E = Eigen::MatrixXd::Zero(2 * n_, num_theta_);
    E.leftCols(n_) = -Hs * model_.Sx.middleRows(k * n_, n_);
    E.middleCols(PresumedColumn(self_block, k), n_) = Hs;
    Append(G, E, Eigen::VectorXd::Constant(2 * n_, bound), ConstraintGroup::kCompatibility, k);
  }

  void AddTerminalEquality(int self_block) {
    eq_G_ = model_.Su.bottomRows(n_);
    out_.Y = Eigen::MatrixXd::Zero(n_, num_theta_);
    out_.Y.leftCols(n_) = -model_.Sx.bottomRows(n_);
    out_.Y.middleCols(PresumedColumn(self_block, N_), n_) = Eigen::MatrixXd::Identity(n_, n_);
    out_.eq_groups.assign(n_, ConstraintGroup::kTerminalEquality);
    out_.eq_steps.assign(n_, N_);
  }

  CondensedQp& out() { return out_; }

  CondensedQp Finish() {
    const int s = N_ * m_;
    Eigen::MatrixXd G(rows_, s);
    out_.E.resize(rows_, num_theta_);
    out_.w.resize(rows_);
    int at = 0;
    for (size_t i = 0; i < g_blocks_.size(); ++i) {
      const auto r = g_blocks_[i].rows();
      G.middleRows(at, r) = g_blocks_[i];
      out_.E.middleRows(at, r) = e_blocks_[i];
      out_.w.segment(at, r) = w_blocks_[i];
      at += static_cast<int>(r);
    }
    if (out_.Y.size() == 0) {
      out_.Y.resize(0, num_theta_);
      eq_G_.resize(0, s);
    }
    const Eigen::VectorXd f = out_.F * out_.theta;
    const Eigen::VectorXd h = out_.w + out_.E * out_.theta;
    const Eigen::VectorXd b = out_.Y * out_.theta;
    out_.qp = QpProblem(H_, f, G, h, eq_G_, b);
    return out_;
  }

 private:
  void Append(const Eigen::MatrixXd& G, const Eigen::MatrixXd& E, const Eigen::VectorXd& w,
              ConstraintGroup group, int k) {
    g_blocks_.push_back(G);
    e_blocks_.push_back(E);
    w_blocks_.push_back(w);
    rows_ += static_cast<int>(G.rows());
    out_.ineq_groups.insert(out_.ineq_groups.end(), G.rows(), group);
    out_.ineq_steps.insert(out_.ineq_steps.end(), G.rows(), k);
  }

  PredictionModel model_;
  int N_;
  int n_;
  int m_;
  int num_theta_;
  int rows_ = 0;
  CondensedQp out_;
  Eigen::MatrixXd H_;
  Eigen::MatrixXd eq_G_;
  std::vector<Eigen::MatrixXd> g_blocks_;
  std::vector<Eigen::MatrixXd> e_blocks_;
  std::vector<Eigen::VectorXd> w_blocks_;
};

void AddRegulatorConstraints(Assembler& a, const RegulatorSets& sets, int N) {
  for (int k = 1; k < N; ++k) a.AddStateRows(sets.path, k, ConstraintGroup::kState);
  a.AddStateRows(sets.terminal, N, ConstraintGroup::kTerminalSet);
  for (int k = 0; k < N; ++k) a.AddInputRows(sets.input, k);
}

}  // namespace

PredictionModel PredictionModel::Build(const LtiSystem& sys, int N) {
  if (N < 1) throw std::invalid_argument("PredictionModel: horizon must be >= 1");
  PredictionModel p;
  p.N = N;
  p.n = sys.n();
  p.m = sys.m();
  const int n = p.n;
  const int m = p.m;
  p.Sx = Eigen::MatrixXd::Zero((N + 1) * n, n);
  p.Su = Eigen::MatrixXd::Zero((N + 1) * n, N * m);
  p.Sx.topRows(n) = Eigen::MatrixXd::Identity(n, n);
  for (int k = 1; k <= N; ++k) {
    p.Sx.middleRows(k * n, n) = sys.A() * p.Sx.middleRows((k - 1) * n, n);
    p.Su.block(k * n, 0, n, (k - 1) * m) = sys.A() * p.Su.block((k - 1) * n, 0, n, (k - 1) * m);
    p.Su.block(k * n, (k - 1) * m, n, m) = sys.B();
  }
  return p;
}

Eigen::VectorXd PredictionModel::States(const Eigen::VectorXd& x0, const Eigen::VectorXd& u) const {
  return Sx * x0 + Su * u;
}

double Trajectory::DynamicsResidual(const LtiSystem& sys) const {
  if (states.size() != inputs.size() + 1) {
    throw std::invalid_argument("Trajectory: need exactly one more state than inputs");
  }
  double worst = 0.0;
  for (size_t k = 0; k < inputs.size(); ++k) {
    worst = std::max(worst, (states[k + 1] - sys.Step(states[k], inputs[k])).lpNorm<Eigen::Infinity>());
  }
  return worst;
}

Eigen::VectorXd Trajectory::InputStack() const { return Stack(inputs); }

Eigen::VectorXd Trajectory::StateStack() const { return Stack(states); }

Trajectory Trajectory::Zero(int n, int m, int N) {
  Trajectory t;
  t.states.assign(N + 1, Eigen::VectorXd::Zero(n));
  t.inputs.assign(N, Eigen::VectorXd::Zero(m));
  return t;
}

Trajectory Trajectory::Rollout(const LtiSystem& sys, const Eigen::VectorXd& x0,
                               const Eigen::VectorXd& input_stack) {
  const int m = sys.m();
  if (x0.size() != sys.n() || input_stack.size() % m != 0) {
    throw std::invalid_argument("Trajectory::Rollout: dimension mismatch");
  }
  const int N = static_cast<int>(input_stack.size() / m);
  Trajectory t;
  t.states.reserve(N + 1);
  t.inputs.reserve(N);
  t.states.push_back(x0);
  for (int k = 0; k < N; ++k) {
    t.inputs.push_back(input_stack.segment(k * m, m));
    t.states.push_back(sys.Step(t.states.back(), t.inputs.back()));
  }
  return t;
}

PresumedTrajectory ShiftPresumed(const LtiSystem& sys, const Trajectory& prev,
                                 const Eigen::MatrixXd& K, double tol) {
  if (prev.horizon() < 1) throw std::invalid_argument("ShiftPresumed: empty trajectory");
  const double scale = 1.0 + prev.StateStack().lpNorm<Eigen::Infinity>();
  if (prev.DynamicsResidual(sys) > tol * scale) {
    throw std::invalid_argument("ShiftPresumed: previous trajectory is not dynamically consistent");
  }
  PresumedTrajectory out;
  out.states.assign(prev.states.begin() + 1, prev.states.end());
  out.inputs.assign(prev.inputs.begin() + 1, prev.inputs.end());
  const Eigen::VectorXd& xN = prev.states.back();
  const Eigen::VectorXd uN = K * xN;
  out.inputs.push_back(uN);
  out.states.push_back(sys.Step(xN, uN));
  return out;
}

const char* ToString(ConstraintGroup group) {
  switch (group) {
    case ConstraintGroup::kState:
      return "state";
    case ConstraintGroup::kInput:
      return "input";
    case ConstraintGroup::kTerminalSet:
      return "terminal_set";
    case ConstraintGroup::kCompatibility:
      return "compatibility";
    case ConstraintGroup::kTerminalEquality:
      return "terminal_equality";
  }
  return "unknown";
}

double CondensedQp::GroupViolation(const Eigen::VectorXd& u, ConstraintGroup group) const {
  double worst = 0.0;
  if (group == ConstraintGroup::kTerminalEquality) {
    if (qp.num_eq() > 0) worst = (qp.G_eq * u - qp.b).lpNorm<Eigen::Infinity>();
    return worst;
  }
  const Eigen::VectorXd slack = qp.G_ineq * u - qp.h;
  for (int i = 0; i < qp.num_ineq(); ++i) {
    if (ineq_groups[i] == group) worst = std::max(worst, slack[i]);
  }
  return worst;
}

double CondensedQp::MaxViolation(const Eigen::VectorXd& u) const {
  double worst = 0.0;
  for (auto g : {ConstraintGroup::kState, ConstraintGroup::kInput, ConstraintGroup::kTerminalSet,
                 ConstraintGroup::kCompatibility, ConstraintGroup::kTerminalEquality}) {
    worst = std::max(worst, GroupViolation(u, g));
  }
  return worst;
}

CondensedQp BuildRegulator(const LtiSystem& sys, const CostWeights& weights,
                           const RegulatorSets& sets, int N, const Eigen::VectorXd& x0) {
  if (sets.path.dim() != sys.n() || sets.terminal.dim() != sys.n() || sets.input.dim() != sys.m()) {
    throw std::invalid_argument("BuildRegulator: set dimensions do not match the system");
  }
  Assembler a(sys, N, x0, 0);
  a.SetTheta(x0);
  CostTerms c{weights.Q, weights.R, weights.P, 0.0, Eigen::MatrixXd::Zero(sys.n(), sys.n())};
  a.SetCost(c, {}, {});
  AddRegulatorConstraints(a, sets, N);
  return a.Finish();
}

CondensedQp BuildDecoupled(const LtiSystem& sys, const SynthesisResult& syn,
                           const Eigen::VectorXd& x0) {
  return BuildRegulator(sys, syn.weights, {syn.X_bar_0, syn.X_f, syn.U}, syn.horizon, x0);
}

CondensedQp BuildInitialization(const LtiSystem& sys, const SynthesisResult& syn,
                                const Eigen::VectorXd& x0) {
  return BuildRegulator(sys, syn.weights, {syn.X, syn.X_f, syn.U}, syn.horizon, x0);
}

double CompatibilityBound(const Eigen::VectorXd& x_prev_self,
                          const std::vector<Eigen::VectorXd>& neighbor_prev_states,
                          int N, double rho_max) {
  if (N < 2) {
    throw std::invalid_argument(
        "CompatibilityBound: the coupled stage needs horizon N >= 2 (the bound divides by N-1)");
  }
  if (!(rho_max > 0.0)) throw std::invalid_argument("CompatibilityBound: rho_max must be positive");
  if (neighbor_prev_states.empty()) return kInf;
  double min_sq = kInf;
  for (const auto& xj : neighbor_prev_states) {
    if (xj.size() != x_prev_self.size()) {
      throw std::invalid_argument("CompatibilityBound: state dimension mismatch");
    }
    min_sq = std::min(min_sq, (x_prev_self - xj).squaredNorm());
  }
  const double n = static_cast<double>(x_prev_self.size());
  const double c = min_sq / (4.0 * std::sqrt(n) * (N - 1) * rho_max);
  return std::max(c, 1e-12);
}

CondensedQp BuildCoupled(const LtiSystem& sys, const SynthesisResult& syn,
                         const Eigen::VectorXd& x0, const PresumedTrajectory* presumed_self,
                         const std::vector<PresumedTrajectory>& presumed_neighbors,
                         const Eigen::VectorXd& x_prev_self,
                         const std::vector<Eigen::VectorXd>& neighbor_prev_states,
                         const CouplingOptions& options) {
  const int N = syn.horizon;
  const int n = sys.n();
  const int m = sys.m();
  const bool need_self = options.compatibility || options.terminal_equality;
  if (need_self && presumed_self == nullptr) {
    throw std::invalid_argument("BuildCoupled: coupling constraints need the agent's own presumed trajectory");
  }
  if (presumed_self != nullptr) RequireShape(*presumed_self, n, m, N, "BuildCoupled");
  for (const auto& t : presumed_neighbors) RequireShape(t, n, m, N, "BuildCoupled");

  double bound = kInf;
  if (options.compatibility) {
    if (neighbor_prev_states.size() != presumed_neighbors.size()) {
      throw std::invalid_argument("BuildCoupled: one previous state per neighbour is required");
    }
    bound = CompatibilityBound(x_prev_self, neighbor_prev_states, N, syn.rho_max);
  }

  const int self_block = presumed_self != nullptr ? 0 : -1;
  const int first_neighbor = presumed_self != nullptr ? 1 : 0;
  const int num_presumed = first_neighbor + static_cast<int>(presumed_neighbors.size());
  Assembler a(sys, N, x0, num_presumed);

  std::vector<Eigen::VectorXd> theta_parts{x0};
  if (presumed_self != nullptr) theta_parts.push_back(presumed_self->StateStack());
  std::vector<int> neighbor_blocks;
  std::vector<const Trajectory*> neighbor_trajs;
  for (size_t j = 0; j < presumed_neighbors.size(); ++j) {
    theta_parts.push_back(presumed_neighbors[j].StateStack());
    neighbor_blocks.push_back(first_neighbor + static_cast<int>(j));
    neighbor_trajs.push_back(&presumed_neighbors[j]);
  }
  a.SetTheta(Stack(theta_parts));

  const CostWeights& w = syn.weights;
  a.SetCost(CostTerms{w.Q, w.R, w.P, w.q_e, w.P_e}, neighbor_blocks, neighbor_trajs);

  for (int k = 1; k < N; ++k) a.AddStateRows(syn.X, k, ConstraintGroup::kState);
  a.AddStateRows(syn.X_f, N, ConstraintGroup::kTerminalSet);
  for (int k = 0; k < N; ++k) a.AddInputRows(syn.U, k);
  if (options.compatibility && std::isfinite(bound)) {
    // k = N is implied by the terminal equality; k = 0 is fixed by measurement.
    for (int k = 1; k < N; ++k) a.AddCompatibilityRows(k, bound, self_block);
  }
  if (options.terminal_equality) a.AddTerminalEquality(self_block);

  a.out().compatibility_bound = bound;
  if (presumed_self != nullptr) {
    a.out().initial_drift = (x0 - presumed_self->states.front()).lpNorm<Eigen::Infinity>();
  }
  return a.Finish();
}

double CoupledCost(const CostWeights& w, const Trajectory& traj,
                   const std::vector<PresumedTrajectory>& presumed_neighbors) {
  const int N = traj.horizon();
  double J = DecoupledCost(w, traj);
  for (const auto& p : presumed_neighbors) {
    if (p.horizon() != N) throw std::invalid_argument("CoupledCost: horizon mismatch");
    for (int k = 0; k < N; ++k) J += w.q_e * (traj.states[k] - p.states[k]).squaredNorm();
    const Eigen::VectorXd e = traj.states[N] - p.states[N];
    J += e.dot(w.P_e * e);
  }
  return J;
}

double DecoupledCost(const CostWeights& w, const Trajectory& traj) {
  const int N = traj.horizon();
  double J = 0.0;
  for (int k = 0; k < N; ++k) {
    J += traj.states[k].dot(w.Q * traj.states[k]) + traj.inputs[k].dot(w.R * traj.inputs[k]);
  }
  J += traj.states[N].dot(w.P * traj.states[N]);
  return J;
}

}  // namespace sdmpc
