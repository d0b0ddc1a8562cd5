#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "sdmpc/consensus.hpp"
#include "sdmpc/network_sim.hpp"

namespace sdmpc {

/// Moving formation reference. The reference state of agent i at step t is
/// e₀·(s0 + cruise_speed·t·dt) + offsets[i].
struct ReferenceSpec {
  double cruise_speed = 0.0;
  double s0 = 0.0;
  std::vector<Eigen::VectorXd> offsets;
};

struct ObstacleShiftSpec {
  int agent = 0;
  /// Equilibrium to shift to, in the agent's error frame.
  Eigen::VectorXd target;
  int start_step = 0;
  int duration = 0;
  /// Spatial (s, y) position of the obstacle in the absolute frame.
  Eigen::VectorXd obstacle_center;
};

struct ScenarioConfig {
  std::string name = "scenario";
  Eigen::MatrixXd A;
  Eigen::MatrixXd B;
  double dt = 0.1;
  /// Symmetric box half-widths of X and U.
  Eigen::VectorXd state_bounds;
  Eigen::VectorXd input_bounds;
  Eigen::MatrixXd Q;
  Eigen::MatrixXd R;
  double q_e = 1.0;
  double eps_pe = 1e-6;
  int horizon = 10;
  double xbar_scale = 0.5;
  int num_agents = 1;
  std::vector<std::pair<int, int>> edges;
  ReferenceSpec reference;
  /// Absolute initial states ζ^i(0).
  std::vector<Eigen::VectorXd> initial_states;
  int steps = 30;
  ConsensusMode consensus = ConsensusMode::kMultiRound;
  SwitchPredicate predicate = SwitchPredicate::kGeometric;
  std::string output_dir = "out";
  unsigned seed = 0;
  std::optional<ObstacleShiftSpec> obstacle_shift;

  /// Throws std::invalid_argument on inconsistent dimensions.
  void Validate() const;
};

}  // namespace sdmpc
