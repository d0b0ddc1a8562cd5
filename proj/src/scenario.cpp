#include "sdmpc/scenario.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <limits>
#include <random>
#include <sstream>
#include <stdexcept>

namespace sdmpc {

LtiSystem MakeSystem(const ScenarioConfig& config) {
  config.Validate();
  return LtiSystem(config.A, config.B, config.dt);
}

Graph MakeGraph(const ScenarioConfig& config) { return Graph(config.num_agents, config.edges); }

SynthesisResult SynthesizeScenario(const ScenarioConfig& config) {
  const LtiSystem sys = MakeSystem(config);
  SynthesisOptions opt;
  opt.horizon = config.horizon;
  opt.xbar_scale = config.xbar_scale;
  opt.eps_pe = config.eps_pe;
  return Synthesize(sys, Polytope::SymmetricBox(config.state_bounds),
                    Polytope::SymmetricBox(config.input_bounds), config.Q, config.R, config.q_e, opt);
}

Eigen::VectorXd ReferenceState(const ScenarioConfig& config, int agent, int t) {
  Eigen::VectorXd ref = config.reference.offsets.at(agent);
  ref[0] += config.reference.s0 + config.reference.cruise_speed * t * config.dt;
  return ref;
}

Eigen::VectorXd ToErrorFrame(const Eigen::VectorXd& absolute, int t, int agent,
                             const ScenarioConfig& config) {
  if (absolute.size() != config.A.rows()) throw std::invalid_argument("ToErrorFrame: dimension mismatch");
  return absolute - ReferenceState(config, agent, t);
}

Eigen::VectorXd ToAbsoluteFrame(const Eigen::VectorXd& error, int t, int agent,
                                const ScenarioConfig& config) {
  if (error.size() != config.A.rows()) throw std::invalid_argument("ToAbsoluteFrame: dimension mismatch");
  return error + ReferenceState(config, agent, t);
}

std::vector<Eigen::VectorXd> SampleStatesIn(const Polytope& set, int count, unsigned seed) {
  const auto [lo, hi] = set.BoundingBox();
  std::mt19937_64 rng(seed);
  std::vector<std::uniform_real_distribution<double>> coord;
  for (Eigen::Index k = 0; k < lo.size(); ++k) coord.emplace_back(lo[k], hi[k]);
  std::vector<Eigen::VectorXd> out;
  int attempts = 0;
  while (static_cast<int>(out.size()) < count) {
    if (++attempts > 1000000) throw std::runtime_error("SampleStatesIn: rejection sampling did not terminate");
    Eigen::VectorXd x(lo.size());
    for (Eigen::Index k = 0; k < x.size(); ++k) x[k] = coord[k](rng);
    if (set.Contains(x, 0.0)) out.push_back(x);
  }
  return out;
}

double MaxNormFrom(const SimulationTrace& trace, int from_step) {
  double worst = 0.0;
  for (const auto& rec : trace.steps) {
    if (rec.t < from_step) continue;
    for (const auto& a : rec.agents) worst = std::max(worst, a.x.norm());
  }
  return worst;
}

int SettlingStep(const SimulationTrace& trace, double fraction) {
  if (trace.steps.empty()) return -1;
  double initial = 0.0;
  for (const auto& a : trace.steps.front().agents) initial = std::max(initial, a.x.norm());
  const double limit = fraction * initial;
  int settle = -1;
  for (int t = static_cast<int>(trace.steps.size()) - 1; t >= 0; --t) {
    double worst = 0.0;
    for (const auto& a : trace.steps[t].agents) worst = std::max(worst, a.x.norm());
    if (worst > limit) break;
    settle = t;
  }
  return settle;
}

ScenarioRun RunScenario(const ScenarioConfig& config, const SynthesisResult* synthesis,
                        const SimulationConfig* sim_override) {
  const auto start = std::chrono::steady_clock::now();
  ScenarioRun run;
  const LtiSystem sys = MakeSystem(config);
  run.synthesis = synthesis != nullptr ? *synthesis : SynthesizeScenario(config);
  const Graph graph = MakeGraph(config);
  std::vector<Eigen::VectorXd> x0;
  for (int i = 0; i < config.num_agents; ++i) x0.push_back(ToErrorFrame(config.initial_states[i], 0, i, config));
  SimulationConfig sim;
  if (sim_override != nullptr) {
    sim = *sim_override;
  } else {
    sim.consensus = config.consensus;
    sim.predicate = config.predicate;
  }
  run.trace = Run(sys, run.synthesis, graph, x0, config.steps, sim);
  run.monitor = MonitorLemmas(run.trace, run.synthesis);
  run.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return run;
}

io::Json RunSummary(const ScenarioConfig& config, const ScenarioRun& run) {
  const auto& tr = run.trace;
  double initial = 0.0;
  if (!tr.steps.empty()) {
    for (const auto& a : tr.steps.front().agents) initial = std::max(initial, a.x.norm());
  }
  const int settle = SettlingStep(tr, 0.05);
  io::Json j;
  j["name"] = config.name;
  j["num_agents"] = tr.num_agents;
  j["steps"] = static_cast<int>(tr.steps.size()) - 1;
  j["dt"] = tr.dt;
  j["consensus"] = ToString(config.consensus);
  j["predicate"] = ToString(config.predicate);
  j["switch_step"] = tr.switch_step;
  j["switch_time"] = tr.switch_step >= 0 ? io::Json(tr.switch_step * tr.dt) : io::Json(nullptr);
  j["max_initial_norm"] = initial;
  j["final_max_norm"] = tr.steps.empty() ? 0.0 : MaxNormFrom(tr, tr.steps.back().t);
  j["settling_step_5pct"] = settle;
  j["settling_time_5pct"] = settle >= 0 ? io::Json(settle * tr.dt) : io::Json(nullptr);
  j["runtime_seconds"] = run.runtime_seconds;
  const auto& s = run.synthesis;
  j["synthesis"] = {{"facets_X_f", s.X_f.num_facets()},
                    {"facets_X_0", s.X_0.num_facets()},
                    {"facets_X_bar_0", s.X_bar_0.num_facets()},
                    {"switch_steps", s.switch_steps},
                    {"rho_max", s.rho_max},
                    {"d_min_X_bar_0", s.X_bar_0.InscribedRadiusAtOrigin()},
                    {"cost_switch_threshold", CostSwitchThreshold(s)}};
  j["monitor"] = io::ToJson(run.monitor);
  return j;
}

void ExportRun(const ScenarioConfig& config, const ScenarioRun& run, const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);
  const std::filesystem::path dir(out_dir);
  io::WriteTraceCsv(run.trace, (dir / "trace.csv").string());
  io::WriteJsonFile((dir / "summary.json").string(), RunSummary(config, run));
  io::WritePlotData(run.trace, (dir / "plot.dat").string());
}

ShiftCertificates ComputeShiftCertificates(const LtiSystem& sys, const SynthesisResult& syn,
                                           const Eigen::VectorXd& target) {
  if (target.size() != sys.n()) throw std::invalid_argument("shift target dimension mismatch");
  const Eigen::MatrixXd AmI = sys.A() - Eigen::MatrixXd::Identity(sys.n(), sys.n());
  const Eigen::VectorXd u_s = -sys.B().colPivHouseholderQr().solve(AmI * target);
  const double residual = (AmI * target + sys.B() * u_s).lpNorm<Eigen::Infinity>();
  if (residual > 1e-9 * (1.0 + target.lpNorm<Eigen::Infinity>())) {
    std::ostringstream msg;
    msg << "shift target is not an equilibrium of the subsystem (residual " << residual << ")";
    throw std::invalid_argument(msg.str());
  }

  ShiftCertificates c;
  c.input_offset = u_s;
  c.r = syn.X_bar_0.InscribedRadiusAtOrigin();
  const double d_f = syn.X_f.InscribedRadiusAtOrigin();
  const double bound_f = NormBound(syn.X_f);
  c.alpha = std::min(1.0, 0.5 * c.r / bound_f);
  c.r_prime = std::min(c.alpha * d_f, 0.5 * c.r);
  c.target_norm = target.norm();
  c.target_in_ball = c.target_norm <= c.r_prime;

  const Polytope terminal = syn.X_f.Scaled(c.alpha);
  // Facet offsets are distances because every normal has unit length.
  c.ball_in_terminal = terminal.InscribedRadiusAtOrigin() >= c.r_prime - 1e-12;
  c.shifted_terminal_in_half_ball = NormBound(terminal) <= 0.5 * c.r + 1e-12;
  c.half_ball_in_r_ball = c.target_norm + 0.5 * c.r <= c.r + 1e-12;
  c.r_ball_in_switch_set = syn.X_bar_0.InscribedRadiusAtOrigin() >= c.r - 1e-12;
  c.shifted_terminal_in_switch_set = terminal.Translated(target).IsSubsetOf(syn.X_bar_0);
  c.terminal_inputs_admissible = terminal.IsSubsetOf(syn.U.Translated(-u_s).Preimage(syn.weights.K));
  return c;
}

namespace {

double Clearance(const SimulationTrace& trace, const ScenarioConfig& config, int agent,
                 const Eigen::VectorXd& obstacle) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& rec : trace.steps) {
    const Eigen::VectorXd abs = ToAbsoluteFrame(rec.agents[agent].x, rec.t, agent, config);
    best = std::min(best, (abs.head(2) - obstacle).norm());
  }
  return best;
}

bool SameAgentTrace(const SimulationTrace& a, const SimulationTrace& b, int agent) {
  if (a.steps.size() != b.steps.size()) return false;
  for (size_t t = 0; t < a.steps.size(); ++t) {
    const AgentStep& p = a.steps[t].agents[agent];
    const AgentStep& q = b.steps[t].agents[agent];
    if (p.x != q.x || p.u != q.u || p.mode != q.mode || p.cost != q.cost) return false;
  }
  return true;
}

}  // namespace

ObstacleShiftRun RunObstacleShift(const ScenarioConfig& config, const Eigen::VectorXd& obstacle_center,
                                  const Eigen::VectorXd& shift_target) {
  if (!config.obstacle_shift) throw std::invalid_argument("RunObstacleShift: config has no obstacle_shift block");
  if (obstacle_center.size() != 2) throw std::invalid_argument("RunObstacleShift: obstacle center must be (s, y)");
  const ObstacleShiftSpec& spec = *config.obstacle_shift;
  const LtiSystem sys = MakeSystem(config);

  ObstacleShiftRun out;
  const SynthesisResult syn = SynthesizeScenario(config);
  out.certificates = ComputeShiftCertificates(sys, syn, shift_target);
  if (!out.certificates.target_in_ball) {
    std::ostringstream msg;
    msg << "RunObstacleShift: shift target norm " << out.certificates.target_norm
        << " exceeds the admissible radius r' = " << out.certificates.r_prime;
    throw std::invalid_argument(msg.str());
  }
  if (spec.start_step + spec.duration > config.steps) {
    throw std::invalid_argument("RunObstacleShift: shift window extends past the simulated steps");
  }

  SimulationConfig sim;
  sim.consensus = config.consensus;
  sim.predicate = config.predicate;
  out.baseline = RunScenario(config, &syn, &sim);
  if (out.baseline.trace.switch_step < 0 || out.baseline.trace.switch_step > spec.start_step) {
    throw std::runtime_error("RunObstacleShift: the network has not switched by the shift start step");
  }

  if (shift_target.isZero(0.0)) {
    out.shifted = out.baseline;
  } else {
    ShiftCommand cmd;
    cmd.agent = spec.agent;
    cmd.start_step = spec.start_step;
    cmd.end_step = spec.start_step + spec.duration;
    cmd.target = shift_target;
    cmd.input_offset = out.certificates.input_offset;
    cmd.terminal = syn.X_f.Scaled(out.certificates.alpha);
    sim.shift = cmd;
    out.shifted = RunScenario(config, &syn, &sim);
  }

  out.excursion_in_switch_set = true;
  for (const auto& rec : out.shifted.trace.steps) {
    if (rec.t < out.shifted.trace.switch_step) continue;
    if (!syn.X_bar_0.Contains(rec.agents[spec.agent].x, 1e-9)) out.excursion_in_switch_set = false;
  }
  out.others_unchanged = true;
  for (int i = 0; i < config.num_agents; ++i) {
    if (i != spec.agent && !SameAgentTrace(out.baseline.trace, out.shifted.trace, i)) out.others_unchanged = false;
  }
  out.clearance_baseline = Clearance(out.baseline.trace, config, spec.agent, obstacle_center);
  out.clearance_shifted = Clearance(out.shifted.trace, config, spec.agent, obstacle_center);
  return out;
}

io::Json ShiftSummary(const ScenarioConfig& config, const ObstacleShiftRun& run) {
  const auto& c = run.certificates;
  io::Json j = RunSummary(config, run.shifted);
  j["obstacle_shift"] = {{"r", c.r},
                         {"alpha", c.alpha},
                         {"r_prime", c.r_prime},
                         {"target_norm", c.target_norm},
                         {"input_offset", io::VectorToJson(c.input_offset)},
                         {"certificates",
                          {{"target_in_ball", c.target_in_ball},
                           {"ball_in_terminal", c.ball_in_terminal},
                           {"shifted_terminal_in_half_ball", c.shifted_terminal_in_half_ball},
                           {"half_ball_in_r_ball", c.half_ball_in_r_ball},
                           {"r_ball_in_switch_set", c.r_ball_in_switch_set},
                           {"shifted_terminal_in_switch_set", c.shifted_terminal_in_switch_set},
                           {"terminal_inputs_admissible", c.terminal_inputs_admissible}}},
                         {"excursion_in_switch_set", run.excursion_in_switch_set},
                         {"others_unchanged", run.others_unchanged},
                         {"clearance_baseline", run.clearance_baseline},
                         {"clearance_shifted", run.clearance_shifted}};
  return j;
}

}  // namespace sdmpc
