#include "sdmpc/io.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

namespace sdmpc {

void ScenarioConfig::Validate() const {
  auto fail = [](const std::string& what) { throw std::invalid_argument("config: " + what); };
  const Eigen::Index n = A.rows();
  if (n == 0 || A.cols() != n) fail("system.A must be a non-empty square matrix");
  if (B.rows() != n || B.cols() == 0) fail("system.B must have as many rows as A");
  const Eigen::Index m = B.cols();
  if (!(dt > 0.0)) fail("system.dt must be positive");
  if (state_bounds.size() != n || (state_bounds.array() <= 0.0).any()) {
    fail("constraints.state_bounds needs n positive entries");
  }
  if (input_bounds.size() != m || (input_bounds.array() <= 0.0).any()) {
    fail("constraints.input_bounds needs m positive entries");
  }
  if (Q.rows() != n || Q.cols() != n) fail("weights.Q must be n x n");
  if (R.rows() != m || R.cols() != m) fail("weights.R must be m x m");
  if (!(q_e > 0.0)) fail("weights.q_e must be positive");
  if (eps_pe < 0.0) fail("weights.eps_pe must be non-negative");
  if (horizon < 1) fail("horizon must be >= 1");
  if (num_agents < 1) fail("graph.num_agents must be >= 1");
  for (auto [a, b] : edges) {
    if (a < 0 || b < 0 || a >= num_agents || b >= num_agents) fail("graph edge out of range");
  }
  if (static_cast<int>(initial_states.size()) != num_agents) fail("one initial state per agent is required");
  for (const auto& x : initial_states) {
    if (x.size() != n) fail("initial state dimension mismatch");
  }
  if (static_cast<int>(reference.offsets.size()) != num_agents) fail("one formation offset per agent is required");
  for (const auto& d : reference.offsets) {
    if (d.size() != n) fail("formation offset dimension mismatch");
  }
  if (steps < 0) fail("steps must be non-negative");
  if (obstacle_shift) {
    const auto& s = *obstacle_shift;
    if (s.agent < 0 || s.agent >= num_agents) fail("obstacle_shift.agent out of range");
    if (s.target.size() != n) fail("obstacle_shift.target must have n entries");
    if (s.start_step < 0 || s.duration < 1) fail("obstacle_shift needs start_step >= 0 and duration >= 1");
    if (s.obstacle_center.size() != 2) fail("obstacle_shift.obstacle_center must be a spatial (s, y) point");
  }
}

namespace io {
namespace {

void CheckKeys(const Json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw std::invalid_argument("config: " + where + " must be an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!allowed.count(it.key())) {
      throw std::invalid_argument("config: unknown key '" + it.key() + "' in " + where);
    }
  }
}

const Json& Require(const Json& j, const std::string& key, const std::string& where) {
  if (!j.contains(key)) throw std::invalid_argument("config: missing key '" + key + "' in " + where);
  return j.at(key);
}

Json NumberOrString(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

double NumberFromJson(const Json& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const std::string s = j.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  }
  throw std::invalid_argument("expected a number");
}

std::string Format(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::string> SplitCsv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double ParseDouble(const std::string& s) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0') throw std::invalid_argument("trace csv: bad number '" + s + "'");
  return v;
}

}  // namespace

Json MatrixToJson(const Eigen::MatrixXd& M) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index k = 0; k < M.cols(); ++k) row.push_back(M(i, k));
    rows.push_back(row);
  }
  return rows;
}

Eigen::MatrixXd MatrixFromJson(const Json& j) {
  if (!j.is_array()) throw std::invalid_argument("expected a matrix (array of rows)");
  const auto rows = static_cast<Eigen::Index>(j.size());
  if (rows == 0) return Eigen::MatrixXd(0, 0);
  const auto cols = static_cast<Eigen::Index>(j.at(0).size());
  Eigen::MatrixXd M(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const Json& row = j.at(i);
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
      throw std::invalid_argument("matrix rows must have equal length");
    }
    for (Eigen::Index k = 0; k < cols; ++k) M(i, k) = row.at(k).get<double>();
  }
  return M;
}

Json VectorToJson(const Eigen::VectorXd& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(NumberOrString(v[i]));
  return out;
}

Eigen::VectorXd VectorFromJson(const Json& j) {
  if (!j.is_array()) throw std::invalid_argument("expected a vector (array of numbers)");
  Eigen::VectorXd v(j.size());
  for (size_t i = 0; i < j.size(); ++i) v[i] = NumberFromJson(j.at(i));
  return v;
}

Json ToJson(const Polytope& p) {
  Json j;
  j["dim"] = p.dim();
  j["empty"] = p.is_empty();
  j["normals"] = MatrixToJson(p.normals());
  j["offsets"] = VectorToJson(p.offsets());
  return j;
}

Polytope PolytopeFromJson(const Json& j) {
  const Eigen::MatrixXd normals = MatrixFromJson(j.at("normals"));
  const Eigen::VectorXd offsets = VectorFromJson(j.at("offsets"));
  const int dim = j.contains("dim") ? j.at("dim").get<int>() : static_cast<int>(normals.cols());
  if (j.value("empty", false)) return Polytope::Empty(dim);
  if (normals.rows() == 0) return Polytope(Eigen::MatrixXd(0, dim), Eigen::VectorXd(0));
  return Polytope(normals, offsets);
}

Json ToJson(const SynthesisResult& s) {
  Json w;
  w["Q"] = MatrixToJson(s.weights.Q);
  w["R"] = MatrixToJson(s.weights.R);
  w["q_e"] = s.weights.q_e;
  w["eps_pe"] = s.weights.eps_pe;
  w["K"] = MatrixToJson(s.weights.K);
  w["P"] = MatrixToJson(s.weights.P);
  w["P_e"] = MatrixToJson(s.weights.P_e);
  Json j;
  j["weights"] = w;
  j["X"] = ToJson(s.X);
  j["U"] = ToJson(s.U);
  j["X_f"] = ToJson(s.X_f);
  j["X_0"] = ToJson(s.X_0);
  j["X_bar_0"] = ToJson(s.X_bar_0);
  j["rho_max"] = s.rho_max;
  j["horizon"] = s.horizon;
  j["xbar_scale"] = s.xbar_scale;
  j["switch_steps"] = s.switch_steps;
  return j;
}

SynthesisResult SynthesisFromJson(const Json& j) {
  SynthesisResult s;
  const Json& w = j.at("weights");
  s.weights.Q = MatrixFromJson(w.at("Q"));
  s.weights.R = MatrixFromJson(w.at("R"));
  s.weights.q_e = w.at("q_e").get<double>();
  s.weights.eps_pe = w.at("eps_pe").get<double>();
  s.weights.K = MatrixFromJson(w.at("K"));
  s.weights.P = MatrixFromJson(w.at("P"));
  s.weights.P_e = MatrixFromJson(w.at("P_e"));
  s.X = PolytopeFromJson(j.at("X"));
  s.U = PolytopeFromJson(j.at("U"));
  s.X_f = PolytopeFromJson(j.at("X_f"));
  s.X_0 = PolytopeFromJson(j.at("X_0"));
  s.X_bar_0 = PolytopeFromJson(j.at("X_bar_0"));
  s.rho_max = j.at("rho_max").get<double>();
  s.horizon = j.at("horizon").get<int>();
  s.xbar_scale = j.at("xbar_scale").get<double>();
  s.switch_steps = j.at("switch_steps").get<int>();
  return s;
}

Json ToJson(const CondensedQp& qp) {
  Json j;
  j["N"] = qp.N;
  j["n"] = qp.n;
  j["m"] = qp.m;
  j["H"] = MatrixToJson(qp.qp.H);
  j["f"] = VectorToJson(qp.qp.f);
  j["G_ineq"] = MatrixToJson(qp.qp.G_ineq);
  j["h"] = VectorToJson(qp.qp.h);
  j["G_eq"] = MatrixToJson(qp.qp.G_eq);
  j["b"] = VectorToJson(qp.qp.b);
  j["constant"] = qp.constant;
  Json groups = Json::array();
  for (auto g : qp.ineq_groups) groups.push_back(ToString(g));
  j["ineq_groups"] = groups;
  j["ineq_steps"] = qp.ineq_steps;
  Json eq_groups = Json::array();
  for (auto g : qp.eq_groups) eq_groups.push_back(ToString(g));
  j["eq_groups"] = eq_groups;
  j["eq_steps"] = qp.eq_steps;
  j["theta"] = VectorToJson(qp.theta);
  j["F"] = MatrixToJson(qp.F);
  j["E"] = MatrixToJson(qp.E);
  j["w"] = VectorToJson(qp.w);
  j["Y"] = MatrixToJson(qp.Y);
  j["x0"] = VectorToJson(qp.x0);
  j["compatibility_bound"] = NumberOrString(qp.compatibility_bound);
  j["initial_drift"] = qp.initial_drift;
  return j;
}

Json ToJson(const ScenarioConfig& c) {
  Json j;
  j["name"] = c.name;
  j["system"] = {{"A", MatrixToJson(c.A)}, {"B", MatrixToJson(c.B)}, {"dt", c.dt}};
  j["constraints"] = {{"state_bounds", VectorToJson(c.state_bounds)},
                      {"input_bounds", VectorToJson(c.input_bounds)}};
  j["weights"] = {{"Q", MatrixToJson(c.Q)}, {"R", MatrixToJson(c.R)}, {"q_e", c.q_e}, {"eps_pe", c.eps_pe}};
  j["horizon"] = c.horizon;
  j["xbar_scale"] = c.xbar_scale;
  Json edges = Json::array();
  for (auto [a, b] : c.edges) edges.push_back({a, b});
  j["graph"] = {{"num_agents", c.num_agents}, {"edges", edges}};
  Json offsets = Json::array();
  for (const auto& d : c.reference.offsets) offsets.push_back(VectorToJson(d));
  j["reference"] = {{"cruise_speed", c.reference.cruise_speed}, {"s0", c.reference.s0}, {"offsets", offsets}};
  Json init = Json::array();
  for (const auto& x : c.initial_states) init.push_back(VectorToJson(x));
  j["initial_states"] = init;
  j["steps"] = c.steps;
  j["consensus"] = ToString(c.consensus);
  j["predicate"] = ToString(c.predicate);
  j["output_dir"] = c.output_dir;
  j["seed"] = c.seed;
  if (c.obstacle_shift) {
    const auto& s = *c.obstacle_shift;
    j["obstacle_shift"] = {{"agent", s.agent},
                           {"target", VectorToJson(s.target)},
                           {"start_step", s.start_step},
                           {"duration", s.duration},
                           {"obstacle_center", VectorToJson(s.obstacle_center)}};
  }
  return j;
}

ScenarioConfig ScenarioConfigFromJson(const Json& j) {
  ScenarioConfig c;
  try {
    CheckKeys(j,
              {"name", "system", "constraints", "weights", "horizon", "xbar_scale", "graph", "reference",
               "initial_states", "steps", "consensus", "predicate", "output_dir", "seed", "obstacle_shift"},
              "top level");
    c.name = j.value("name", c.name);

    const Json& sys = Require(j, "system", "top level");
    CheckKeys(sys, {"A", "B", "dt"}, "system");
    c.A = MatrixFromJson(Require(sys, "A", "system"));
    c.B = MatrixFromJson(Require(sys, "B", "system"));
    c.dt = Require(sys, "dt", "system").get<double>();

    const Json& cons = Require(j, "constraints", "top level");
    CheckKeys(cons, {"state_bounds", "input_bounds"}, "constraints");
    c.state_bounds = VectorFromJson(Require(cons, "state_bounds", "constraints"));
    c.input_bounds = VectorFromJson(Require(cons, "input_bounds", "constraints"));

    const Json& w = Require(j, "weights", "top level");
    CheckKeys(w, {"Q", "R", "q_e", "eps_pe"}, "weights");
    c.Q = MatrixFromJson(Require(w, "Q", "weights"));
    c.R = MatrixFromJson(Require(w, "R", "weights"));
    c.q_e = w.value("q_e", c.q_e);
    c.eps_pe = w.value("eps_pe", c.eps_pe);

    c.horizon = j.value("horizon", c.horizon);
    c.xbar_scale = j.value("xbar_scale", c.xbar_scale);

    const Json& g = Require(j, "graph", "top level");
    CheckKeys(g, {"num_agents", "edges"}, "graph");
    c.num_agents = Require(g, "num_agents", "graph").get<int>();
    for (const auto& e : g.value("edges", Json::array())) {
      if (!e.is_array() || e.size() != 2) throw std::invalid_argument("graph edges must be [i, j] pairs");
      c.edges.emplace_back(e.at(0).get<int>(), e.at(1).get<int>());
    }

    const Json& ref = Require(j, "reference", "top level");
    CheckKeys(ref, {"cruise_speed", "s0", "offsets"}, "reference");
    c.reference.cruise_speed = ref.value("cruise_speed", 0.0);
    c.reference.s0 = ref.value("s0", 0.0);
    for (const auto& d : Require(ref, "offsets", "reference")) c.reference.offsets.push_back(VectorFromJson(d));

    for (const auto& x : Require(j, "initial_states", "top level")) c.initial_states.push_back(VectorFromJson(x));
    c.steps = j.value("steps", c.steps);
    if (j.contains("consensus")) c.consensus = ParseConsensusMode(j.at("consensus").get<std::string>());
    if (j.contains("predicate")) c.predicate = ParseSwitchPredicate(j.at("predicate").get<std::string>());
    c.output_dir = j.value("output_dir", c.output_dir);
    c.seed = j.value("seed", c.seed);

    if (j.contains("obstacle_shift")) {
      const Json& s = j.at("obstacle_shift");
      CheckKeys(s, {"agent", "target", "start_step", "duration", "obstacle_center"}, "obstacle_shift");
      ObstacleShiftSpec spec;
      spec.agent = Require(s, "agent", "obstacle_shift").get<int>();
      spec.target = VectorFromJson(Require(s, "target", "obstacle_shift"));
      spec.start_step = Require(s, "start_step", "obstacle_shift").get<int>();
      spec.duration = Require(s, "duration", "obstacle_shift").get<int>();
      spec.obstacle_center = VectorFromJson(Require(s, "obstacle_center", "obstacle_shift"));
      c.obstacle_shift = spec;
    }
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("config: malformed value: ") + e.what());
  }
  c.Validate();
  return c;
}

Json ReadJsonFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument(path + ": " + e.what());
  }
}

void WriteJsonFile(const std::string& path, const Json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << j.dump(2) << '\n';
}

ScenarioConfig LoadScenarioConfig(const std::string& path) {
  return ScenarioConfigFromJson(ReadJsonFile(path));
}

Json ToJson(const MonitorReport& r) {
  Json props = Json::array();
  for (const auto& p : r.properties) {
    props.push_back({{"name", p.name},
                     {"pass", p.pass},
                     {"worst_margin", NumberOrString(p.worst_margin)},
                     {"worst_step", p.worst_step},
                     {"worst_agent", p.worst_agent},
                     {"checks", p.checks},
                     {"violations", p.violations}});
  }
  return {{"all_pass", r.all_pass}, {"properties", props}};
}

void WriteTraceCsv(const SimulationTrace& trace, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "t,time,agent";
  for (int k = 0; k < trace.n; ++k) out << ",x" << k;
  for (int k = 0; k < trace.m; ++k) out << ",u" << k;
  out << ",cost,decoupled_cost,mode,ready,predicate_geometric,predicate_cost,c_t,compat_residual,"
         "terminal_residual,candidate_violation,qp_status,qp_iterations,shifted\n";
  for (const auto& rec : trace.steps) {
    for (size_t i = 0; i < rec.agents.size(); ++i) {
      const AgentStep& a = rec.agents[i];
      out << rec.t << ',' << Format(rec.t * trace.dt) << ',' << i;
      for (int k = 0; k < trace.n; ++k) out << ',' << Format(a.x[k]);
      for (int k = 0; k < trace.m; ++k) out << ',' << Format(a.u[k]);
      out << ',' << Format(a.cost) << ',' << Format(a.decoupled_cost) << ',' << ToString(a.mode) << ','
          << a.ready << ',' << a.predicate_geometric << ',' << a.predicate_cost << ','
          << Format(a.compatibility_bound) << ',' << Format(a.compatibility_residual) << ','
          << Format(a.terminal_residual) << ',' << Format(a.candidate_violation) << ','
          << ToString(a.status) << ',' << a.qp_iterations << ',' << a.shifted << '\n';
    }
  }
}

SimulationTrace ReadTraceCsv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("trace csv: empty file");
  const auto header = SplitCsv(line);
  std::map<std::string, size_t> col;
  for (size_t i = 0; i < header.size(); ++i) col[header[i]] = i;
  SimulationTrace trace;
  while (col.count("x" + std::to_string(trace.n))) ++trace.n;
  while (col.count("u" + std::to_string(trace.m))) ++trace.m;
  for (const char* name : {"t", "time", "agent", "cost", "decoupled_cost", "mode", "ready", "c_t",
                           "compat_residual", "terminal_residual", "qp_status"}) {
    if (!col.count(name)) throw std::invalid_argument(std::string("trace csv: missing column ") + name);
  }
  auto get = [&](const std::vector<std::string>& row, const std::string& name) -> const std::string& {
    auto it = col.find(name);
    if (it == col.end() || it->second >= row.size()) {
      static const std::string empty;
      return empty;
    }
    return row[it->second];
  };
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto row = SplitCsv(line);
    if (row.size() != header.size()) throw std::invalid_argument("trace csv: ragged row");
    const int t = std::stoi(get(row, "t"));
    const int agent = std::stoi(get(row, "agent"));
    if (t < 0 || agent < 0) throw std::invalid_argument("trace csv: negative index");
    if (static_cast<int>(trace.steps.size()) <= t) {
      trace.steps.resize(t + 1);
      trace.steps[t].t = t;
    }
    auto& agents = trace.steps[t].agents;
    if (static_cast<int>(agents.size()) <= agent) agents.resize(agent + 1);
    AgentStep& a = agents[agent];
    a.x.resize(trace.n);
    a.u.resize(trace.m);
    for (int k = 0; k < trace.n; ++k) a.x[k] = ParseDouble(get(row, "x" + std::to_string(k)));
    for (int k = 0; k < trace.m; ++k) a.u[k] = ParseDouble(get(row, "u" + std::to_string(k)));
    a.cost = ParseDouble(get(row, "cost"));
    a.decoupled_cost = ParseDouble(get(row, "decoupled_cost"));
    const std::string& mode = get(row, "mode");
    if (mode == "coupled") {
      a.mode = AgentMode::kCoupled;
    } else if (mode == "decoupled") {
      a.mode = AgentMode::kDecoupled;
    } else {
      throw std::invalid_argument("trace csv: bad mode '" + mode + "'");
    }
    a.ready = get(row, "ready") == "1";
    a.predicate_geometric = get(row, "predicate_geometric") == "1";
    a.predicate_cost = get(row, "predicate_cost") == "1";
    a.compatibility_bound = ParseDouble(get(row, "c_t"));
    a.compatibility_residual = ParseDouble(get(row, "compat_residual"));
    a.terminal_residual = ParseDouble(get(row, "terminal_residual"));
    if (col.count("candidate_violation")) a.candidate_violation = ParseDouble(get(row, "candidate_violation"));
    const std::string& status = get(row, "qp_status");
    if (status == "optimal") {
      a.status = QpStatus::kOptimal;
    } else if (status == "infeasible") {
      a.status = QpStatus::kInfeasible;
    } else if (status == "max_iter") {
      a.status = QpStatus::kMaxIter;
    } else {
      throw std::invalid_argument("trace csv: bad qp_status '" + status + "'");
    }
    if (col.count("qp_iterations")) a.qp_iterations = std::stoi(get(row, "qp_iterations"));
    a.shifted = get(row, "shifted") == "1";
    if (t == 1) trace.dt = ParseDouble(get(row, "time"));
    trace.num_agents = std::max(trace.num_agents, agent + 1);
  }
  for (const auto& rec : trace.steps) {
    if (static_cast<int>(rec.agents.size()) != trace.num_agents) {
      throw std::invalid_argument("trace csv: missing (t, agent) rows");
    }
    for (const auto& a : rec.agents) {
      if (a.mode == AgentMode::kDecoupled && trace.switch_step < 0) trace.switch_step = rec.t;
    }
  }
  return trace;
}

void WritePlotData(const SimulationTrace& trace, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "# time";
  for (int i = 0; i < trace.num_agents; ++i) out << " norm_x" << i;
  out << " mode\n";
  if (trace.switch_step >= 0) {
    out << "# switch_step " << trace.switch_step << " switch_time " << Format(trace.switch_step * trace.dt) << '\n';
  } else {
    out << "# switch_step none\n";
  }
  for (const auto& rec : trace.steps) {
    out << Format(rec.t * trace.dt);
    int mode = 0;
    for (const auto& a : rec.agents) {
      out << ' ' << Format(a.x.norm());
      if (a.mode == AgentMode::kDecoupled) mode = 1;
    }
    out << ' ' << mode << '\n';
  }
}

}  // namespace io
}  // namespace sdmpc
