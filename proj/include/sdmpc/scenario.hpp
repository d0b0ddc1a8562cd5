#pragma once

#include <string>

#include <Eigen/Dense>

#include "sdmpc/config.hpp"
#include "sdmpc/graph.hpp"
#include "sdmpc/io.hpp"
#include "sdmpc/lti.hpp"
#include "sdmpc/monitor.hpp"
#include "sdmpc/network_sim.hpp"
#include "sdmpc/synthesis.hpp"

namespace sdmpc {

LtiSystem MakeSystem(const ScenarioConfig& config);
Graph MakeGraph(const ScenarioConfig& config);
SynthesisResult SynthesizeScenario(const ScenarioConfig& config);

/// Reference state of `agent` at step t: e₀·(s0 + v̄·t·dt) + offset.
Eigen::VectorXd ReferenceState(const ScenarioConfig& config, int agent, int t);
/// x = ζ − ζ̂^agent(t).
Eigen::VectorXd ToErrorFrame(const Eigen::VectorXd& absolute, int t, int agent,
                             const ScenarioConfig& config);
Eigen::VectorXd ToAbsoluteFrame(const Eigen::VectorXd& error, int t, int agent,
                                const ScenarioConfig& config);

/// Error-frame states drawn uniformly from the bounding box of `set` and
/// kept when they fall inside it (rejection sampling).
std::vector<Eigen::VectorXd> SampleStatesIn(const Polytope& set, int count, unsigned seed);

struct ScenarioRun {
  SynthesisResult synthesis;
  SimulationTrace trace;
  MonitorReport monitor;
  double runtime_seconds = 0.0;
};

/// Largest max_i ‖x_t^i‖ over t ≥ from_step (0 if from_step is past the end).
double MaxNormFrom(const SimulationTrace& trace, int from_step);
/// First step after which max_i ‖x_t^i‖ stays ≤ fraction·max_i ‖x_0^i‖;
/// -1 if that never happens within the trace.
int SettlingStep(const SimulationTrace& trace, double fraction);

/// Synthesis followed by the network simulation and the lemma monitors.
/// An already computed synthesis may be passed to skip that stage.
ScenarioRun RunScenario(const ScenarioConfig& config, const SynthesisResult* synthesis = nullptr,
                        const SimulationConfig* sim_override = nullptr);

/// Alias kept for the vehicle formation use case.
inline ScenarioRun RunUgvFormation(const ScenarioConfig& config) { return RunScenario(config); }

io::Json RunSummary(const ScenarioConfig& config, const ScenarioRun& run);

/// Writes trace.csv, summary.json and plot.dat into out_dir (created if needed).
void ExportRun(const ScenarioConfig& config, const ScenarioRun& run, const std::string& out_dir);

/// Radii and set-nesting checks that make a state shift safe. With
/// r = inscribed radius of X̄_0:
///   alpha   = min(1, (r/2) / norm_bound(X_f))      so alpha·X_f ⊆ B_{r/2}(0)
///   r_prime = min(alpha · inscribed radius of X_f, r/2)
/// so that B_{r'}(0) ⊆ alpha·X_f ⊆ X_f and target + alpha·X_f ⊆ B_r(0) ⊆ X̄_0
/// for every target in B_{r'}(0).
struct ShiftCertificates {
  double r = 0.0;
  double alpha = 0.0;
  double r_prime = 0.0;
  double target_norm = 0.0;
  Eigen::VectorXd input_offset;
  bool target_in_ball = false;
  bool ball_in_terminal = false;
  bool shifted_terminal_in_half_ball = false;
  bool half_ball_in_r_ball = false;
  bool r_ball_in_switch_set = false;
  /// LP containment target + alpha·X_f ⊆ X̄_0.
  bool shifted_terminal_in_switch_set = false;
  /// LP containment K(alpha·X_f) + u_s ⊆ U.
  bool terminal_inputs_admissible = false;
  bool all() const {
    return target_in_ball && ball_in_terminal && shifted_terminal_in_half_ball && half_ball_in_r_ball &&
           r_ball_in_switch_set && shifted_terminal_in_switch_set && terminal_inputs_admissible;
  }
};

/// Throws std::invalid_argument if target is not an equilibrium of (A, B).
ShiftCertificates ComputeShiftCertificates(const LtiSystem& sys, const SynthesisResult& syn,
                                           const Eigen::VectorXd& target);

struct ObstacleShiftRun {
  ScenarioRun baseline;
  ScenarioRun shifted;
  ShiftCertificates certificates;
  bool excursion_in_switch_set = false;
  bool others_unchanged = false;
  double clearance_baseline = 0.0;
  double clearance_shifted = 0.0;
};

/// Re-targets one switched agent to `shift_target` for the configured window
/// and compares against an unshifted baseline. A zero target is a no-op.
/// Throws std::invalid_argument when the target lies outside B_{r'}(0)
/// (the message reports r').
ObstacleShiftRun RunObstacleShift(const ScenarioConfig& config, const Eigen::VectorXd& obstacle_center,
                                  const Eigen::VectorXd& shift_target);

io::Json ShiftSummary(const ScenarioConfig& config, const ObstacleShiftRun& run);

}  // namespace sdmpc
