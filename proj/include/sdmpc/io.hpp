#pragma once

#include <string>

#include <Eigen/Dense>

#include "json.hpp"
#include "sdmpc/cocp.hpp"
#include "sdmpc/config.hpp"
#include "sdmpc/monitor.hpp"
#include "sdmpc/network_sim.hpp"
#include "sdmpc/polytope.hpp"
#include "sdmpc/synthesis.hpp"

namespace sdmpc::io {

using Json = nlohmann::json;

Json MatrixToJson(const Eigen::MatrixXd& M);
Eigen::MatrixXd MatrixFromJson(const Json& j);
Json VectorToJson(const Eigen::VectorXd& v);
Eigen::VectorXd VectorFromJson(const Json& j);

/// {"normals": [[...]], "offsets": [...]} plus "dim" and "empty".
Json ToJson(const Polytope& p);
Polytope PolytopeFromJson(const Json& j);

Json ToJson(const SynthesisResult& s);
SynthesisResult SynthesisFromJson(const Json& j);

Json ToJson(const CondensedQp& qp);

Json ToJson(const ScenarioConfig& c);
/// Missing optional keys take the ScenarioConfig defaults; unknown keys and
/// malformed values throw std::invalid_argument.
ScenarioConfig ScenarioConfigFromJson(const Json& j);
ScenarioConfig LoadScenarioConfig(const std::string& path);

Json ToJson(const MonitorReport& r);

Json ReadJsonFile(const std::string& path);
void WriteJsonFile(const std::string& path, const Json& j);

/// One row per (t, agent). Values are printed with 17 significant digits so
/// re-import is exact.
void WriteTraceCsv(const SimulationTrace& trace, const std::string& path);
/// Restores every per-step scalar field plus x and u (trajectories are not
/// part of the CSV).
SimulationTrace ReadTraceCsv(const std::string& path);

/// Whitespace-separated columns: time, ‖x^i‖ per agent, mode (0 coupled,
/// 1 decoupled). A comment header names the columns and the switch time.
void WritePlotData(const SimulationTrace& trace, const std::string& path);

}  // namespace sdmpc::io
