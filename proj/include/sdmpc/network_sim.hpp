#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sdmpc/cocp.hpp"
#include "sdmpc/consensus.hpp"
#include "sdmpc/graph.hpp"
#include "sdmpc/lti.hpp"
#include "sdmpc/qp.hpp"
#include "sdmpc/synthesis.hpp"

namespace sdmpc {

enum class AgentMode { kCoupled, kDecoupled };
enum class SwitchPredicate { kGeometric, kCost };
enum class MessageKind { kStateAndTrajectory, kSwitchReady, kListComplete };

const char* ToString(AgentMode mode);
const char* ToString(SwitchPredicate predicate);
const char* ToString(MessageKind kind);
SwitchPredicate ParseSwitchPredicate(const std::string& text);

/// Temporary re-targeting of one decoupled agent to the equilibrium
/// `target` (the state shift used for obstacle avoidance).
struct ShiftCommand {
  int agent = 0;
  int start_step = 0;
  int end_step = 0;
  Eigen::VectorXd target;
  /// Equilibrium input for `target`.
  Eigen::VectorXd input_offset;
  /// Terminal set of the shifted problem, in shifted coordinates.
  Polytope terminal;
};

struct SimulationConfig {
  ConsensusMode consensus = ConsensusMode::kMultiRound;
  SwitchPredicate predicate = SwitchPredicate::kGeometric;
  QpSettings qp;
  std::optional<ShiftCommand> shift;
  bool record_messages = true;
};

struct Message {
  int round = 0;
  MessageKind kind = MessageKind::kStateAndTrajectory;
  int sender = 0;
  int receiver = 0;
  /// kStateAndTrajectory: the sender's measured state of the previous round
  /// and its optimized trajectory.
  Eigen::VectorXd state;
  Trajectory trajectory;
  /// kSwitchReady / kListComplete: agent ids known to the sender.
  std::vector<int> agents;
};

struct AgentStep {
  Eigen::VectorXd x;
  Eigen::VectorXd u;
  /// Optimal value of the problem actually solved.
  double cost = 0.0;
  /// Decoupled cost of the optimal trajectory.
  double decoupled_cost = 0.0;
  AgentMode mode = AgentMode::kCoupled;
  bool ready = false;
  bool predicate_geometric = false;
  bool predicate_cost = false;
  double compatibility_bound = 0.0;
  /// max_k ‖x_k* − x̂_k^self‖_∞ over k = 0..N; NaN when not coupled.
  double compatibility_residual = 0.0;
  /// ‖x_N* − x̂_N^self‖_∞; NaN without a terminal equality.
  double terminal_residual = 0.0;
  /// Largest constraint violation of the shifted previous plan in the new
  /// problem; NaN when no candidate exists.
  double candidate_violation = 0.0;
  QpStatus status = QpStatus::kOptimal;
  int qp_iterations = 0;
  bool shifted = false;
  Trajectory optimal;
  Trajectory presumed;
};

struct StepRecord {
  int t = 0;
  std::vector<AgentStep> agents;
};

struct SimulationTrace {
  int num_agents = 0;
  int n = 0;
  int m = 0;
  int horizon = 0;
  double dt = 0.0;
  /// First step solved in decoupled mode, -1 if never.
  int switch_step = -1;
  std::vector<StepRecord> steps;
  std::vector<Trajectory> initialization;
  std::vector<Message> messages;
};

/// Error thrown when a per-agent QP is not solved to optimality.
class InfeasibleStepError : public std::runtime_error {
 public:
  InfeasibleStepError(int step, int agent, const std::string& what)
      : std::runtime_error(what), step_(step), agent_(agent) {}
  int step() const { return step_; }
  int agent() const { return agent_; }

 private:
  int step_;
  int agent_;
};

/// Neighbour data an agent holds at the start of a coupled round.
struct NeighborInfo {
  Eigen::VectorXd prev_state;
  Trajectory presumed;
};

/// Builds one agent's coupled problem. Neighbour contributions are summed in
/// an order that depends only on their values, so relabelling agents leaves
/// the QP data bitwise unchanged.
CondensedQp BuildAgentCoupled(const LtiSystem& sys, const SynthesisResult& syn,
                              const Eigen::VectorXd& x, const Eigen::VectorXd& x_prev,
                              const Trajectory& presumed_self,
                              std::vector<NeighborInfo> neighbors);

/// Cost-predicate threshold λ_min(Q)·d_min², d_min the inscribed radius of X̄_0.
double CostSwitchThreshold(const SynthesisResult& syn);

/// Synchronous simulation of the switched DMPC scheme. Throws
/// std::invalid_argument for initial states outside X_0 and
/// InfeasibleStepError if a QP fails.
SimulationTrace Run(const LtiSystem& sys, const SynthesisResult& syn, const Graph& graph,
                    const std::vector<Eigen::VectorXd>& initial_states, int steps,
                    const SimulationConfig& config = {});

}  // namespace sdmpc
