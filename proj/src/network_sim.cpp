#include "sdmpc/network_sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace sdmpc {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

bool LexLess(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return std::lexicographical_compare(a.data(), a.data() + a.size(), b.data(), b.data() + b.size());
}

std::string Diagnose(const CondensedQp& qp, const QpSolution& sol, int step, int agent) {
  std::ostringstream msg;
  msg << "QP for agent " << agent << " at step " << step << " returned " << ToString(sol.status)
      << "; worst violation by group of the returned iterate:";
  for (auto g : {ConstraintGroup::kState, ConstraintGroup::kInput, ConstraintGroup::kTerminalSet,
                 ConstraintGroup::kCompatibility, ConstraintGroup::kTerminalEquality}) {
    msg << ' ' << ToString(g) << '=' << qp.GroupViolation(sol.z_star, g);
  }
  msg << " (recursive feasibility should rule this out; check the configuration)";
  return msg.str();
}

std::vector<int> Keys(const std::map<int, int>& m) {
  std::vector<int> out;
  for (auto [k, v] : m) out.push_back(k);
  return out;
}

}  // namespace

const char* ToString(AgentMode mode) {
  return mode == AgentMode::kCoupled ? "coupled" : "decoupled";
}

const char* ToString(SwitchPredicate predicate) {
  return predicate == SwitchPredicate::kGeometric ? "geometric" : "cost";
}

const char* ToString(MessageKind kind) {
  switch (kind) {
    case MessageKind::kStateAndTrajectory:
      return "state_and_trajectory";
    case MessageKind::kSwitchReady:
      return "switch_ready";
    case MessageKind::kListComplete:
      return "list_complete";
  }
  return "unknown";
}

SwitchPredicate ParseSwitchPredicate(const std::string& text) {
  if (text == "geometric") return SwitchPredicate::kGeometric;
  if (text == "cost") return SwitchPredicate::kCost;
  throw std::invalid_argument("unknown switch predicate '" + text + "' (expected geometric or cost)");
}

CondensedQp BuildAgentCoupled(const LtiSystem& sys, const SynthesisResult& syn,
                              const Eigen::VectorXd& x, const Eigen::VectorXd& x_prev,
                              const Trajectory& presumed_self,
                              std::vector<NeighborInfo> neighbors) {
  std::sort(neighbors.begin(), neighbors.end(), [](const NeighborInfo& a, const NeighborInfo& b) {
    if (LexLess(a.prev_state, b.prev_state)) return true;
    if (LexLess(b.prev_state, a.prev_state)) return false;
    return LexLess(a.presumed.StateStack(), b.presumed.StateStack());
  });
  std::vector<PresumedTrajectory> presumed;
  std::vector<Eigen::VectorXd> prev;
  for (auto& nb : neighbors) {
    presumed.push_back(std::move(nb.presumed));
    prev.push_back(std::move(nb.prev_state));
  }
  return BuildCoupled(sys, syn, x, &presumed_self, presumed, x_prev, prev);
}

double CostSwitchThreshold(const SynthesisResult& syn) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(syn.weights.Q, Eigen::EigenvaluesOnly);
  const double d = syn.X_bar_0.InscribedRadiusAtOrigin();
  return es.eigenvalues()[0] * d * d;
}

SimulationTrace Run(const LtiSystem& sys, const SynthesisResult& syn, const Graph& graph,
                    const std::vector<Eigen::VectorXd>& initial_states, int steps,
                    const SimulationConfig& config) {
  const int M = graph.num_agents();
  const int N = syn.horizon;
  if (static_cast<int>(initial_states.size()) != M) {
    throw std::invalid_argument("Run: one initial state per agent is required");
  }
  if (steps < 0) throw std::invalid_argument("Run: steps must be non-negative");
  for (int i = 0; i < M; ++i) {
    if (initial_states[i].size() != sys.n()) throw std::invalid_argument("Run: state dimension mismatch");
    if (!syn.X_0.Contains(initial_states[i])) {
      std::ostringstream msg;
      msg << "Run: initial state of agent " << i << " lies outside the feasible set X_0";
      throw std::invalid_argument(msg.str());
    }
  }
  if (config.shift) {
    const ShiftCommand& c = *config.shift;
    if (c.agent < 0 || c.agent >= M || c.target.size() != sys.n() ||
        c.input_offset.size() != sys.m() || c.terminal.dim() != sys.n()) {
      throw std::invalid_argument("Run: malformed shift command");
    }
  }

  SimulationTrace trace;
  trace.num_agents = M;
  trace.n = sys.n();
  trace.m = sys.m();
  trace.horizon = N;
  trace.dt = sys.dt();

  std::vector<Trajectory> plan(M);
  for (int i = 0; i < M; ++i) {
    const CondensedQp qp = BuildInitialization(sys, syn, initial_states[i]);
    const QpSolution sol = Solve(qp.qp, config.qp);
    if (sol.status != QpStatus::kOptimal) throw InfeasibleStepError(-1, i, Diagnose(qp, sol, -1, i));
    plan[i] = Trajectory::Rollout(sys, initial_states[i], sol.z_star);
  }
  trace.initialization = plan;

  std::vector<Eigen::VectorXd> x = initial_states;
  std::vector<Eigen::VectorXd> x_prev = initial_states;
  std::vector<ConsensusAgent> consensus(M);
  const double threshold = CostSwitchThreshold(syn);
  const Eigen::MatrixXd& K = syn.weights.K;

  for (int t = 0; t <= steps; ++t) {
    std::vector<Trajectory> presumed(M);
    for (int i = 0; i < M; ++i) presumed[i] = t == 0 ? plan[i] : ShiftPresumed(sys, plan[i], K);

    if (config.record_messages) {
      for (int i = 0; i < M; ++i) {
        for (int j : graph.Neighbors(i)) {
          Message msg;
          msg.round = t;
          msg.kind = MessageKind::kStateAndTrajectory;
          msg.sender = j;
          msg.receiver = i;
          msg.state = x_prev[j];
          msg.trajectory = plan[j];
          trace.messages.push_back(std::move(msg));
          if (config.consensus == ConsensusMode::kMultiRound) {
            if (!consensus[j].ready_known.empty()) {
              trace.messages.push_back(
                  {t, MessageKind::kSwitchReady, j, i, {}, {}, Keys(consensus[j].ready_known)});
            }
            if (!consensus[j].complete_known.empty()) {
              trace.messages.push_back(
                  {t, MessageKind::kListComplete, j, i, {}, {}, Keys(consensus[j].complete_known)});
            }
          }
        }
      }
    }

    std::vector<bool> geometric(M), cost_ok(M), ready_now(M);
    for (int i = 0; i < M; ++i) {
      geometric[i] = syn.X_bar_0.Contains(x[i]);
      cost_ok[i] = DecoupledCost(syn.weights, presumed[i]) <= threshold;
      ready_now[i] = config.predicate == SwitchPredicate::kGeometric ? geometric[i] : cost_ok[i];
    }
    SwitchConsensusStep(consensus, ready_now, graph, config.consensus, t);
    if (consensus.front().switched && trace.switch_step < 0) trace.switch_step = t;

    StepRecord record;
    record.t = t;
    record.agents.resize(M);
    std::vector<Trajectory> next_plan(M);
    for (int i = 0; i < M; ++i) {
      AgentStep& s = record.agents[i];
      s.x = x[i];
      s.mode = consensus[i].switched ? AgentMode::kDecoupled : AgentMode::kCoupled;
      s.ready = consensus[i].ready;
      s.predicate_geometric = geometric[i];
      s.predicate_cost = cost_ok[i];
      s.presumed = presumed[i];
      s.compatibility_residual = kNaN;
      s.terminal_residual = kNaN;
      s.compatibility_bound = kNaN;

      const bool shifting = config.shift && config.shift->agent == i && t >= config.shift->start_step &&
                            t < config.shift->end_step;
      CondensedQp qp;
      Eigen::VectorXd u_offset = Eigen::VectorXd::Zero(sys.m());
      Eigen::VectorXd candidate = presumed[i].InputStack();
      if (s.mode == AgentMode::kCoupled) {
        if (shifting) throw std::runtime_error("Run: state shift requested before the network switched");
        std::vector<NeighborInfo> nbrs;
        for (int j : graph.Neighbors(i)) nbrs.push_back({x_prev[j], presumed[j]});
        qp = BuildAgentCoupled(sys, syn, x[i], x_prev[i], presumed[i], std::move(nbrs));
        s.compatibility_bound = qp.compatibility_bound;
      } else if (shifting) {
        const ShiftCommand& c = *config.shift;
        const Eigen::VectorXd z0 = x[i] - c.target;
        if (t == c.start_step && !c.terminal.Contains(z0, 1e-9)) {
          throw std::runtime_error("Run: shifting agent is not inside the shifted terminal set at the start step");
        }
        const RegulatorSets sets{syn.X_bar_0.Translated(-c.target), c.terminal, syn.U.Translated(-c.input_offset)};
        qp = BuildRegulator(sys, syn.weights, sets, N, z0);
        u_offset = c.input_offset;
        for (int k = 0; k < N; ++k) candidate.segment(k * sys.m(), sys.m()) -= u_offset;
        s.shifted = true;
      } else {
        qp = BuildDecoupled(sys, syn, x[i]);
      }
      s.candidate_violation = qp.MaxViolation(candidate);

      const QpSolution sol = Solve(qp.qp, config.qp);
      s.status = sol.status;
      s.qp_iterations = sol.iterations;
      if (sol.status != QpStatus::kOptimal) throw InfeasibleStepError(t, i, Diagnose(qp, sol, t, i));
      Eigen::VectorXd u_stack = sol.z_star;
      for (int k = 0; k < N; ++k) u_stack.segment(k * sys.m(), sys.m()) += u_offset;
      Trajectory traj = Trajectory::Rollout(sys, x[i], u_stack);

      s.cost = qp.Cost(sol.z_star);
      s.decoupled_cost = DecoupledCost(syn.weights, traj);
      if (s.mode == AgentMode::kCoupled) {
        double worst = 0.0;
        for (int k = 0; k <= N; ++k) {
          worst = std::max(worst, (traj.states[k] - presumed[i].states[k]).lpNorm<Eigen::Infinity>());
        }
        s.compatibility_residual = worst;
        s.terminal_residual = (traj.states[N] - presumed[i].states[N]).lpNorm<Eigen::Infinity>();
      }
      s.u = traj.inputs.front();
      s.optimal = traj;
      next_plan[i] = std::move(traj);
    }

    for (int i = 0; i < M; ++i) {
      x_prev[i] = x[i];
      x[i] = next_plan[i].states[1];
    }
    plan = std::move(next_plan);
    trace.steps.push_back(std::move(record));
  }
  return trace;
}

}  // namespace sdmpc
