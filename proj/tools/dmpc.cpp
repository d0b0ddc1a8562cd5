#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "sdmpc/io.hpp"
#include "sdmpc/monitor.hpp"
#include "sdmpc/scenario.hpp"

namespace {

using sdmpc::ScenarioConfig;
namespace fs = std::filesystem;

struct CommonOptions {
  std::string config;
  std::string out;
  std::optional<int> steps;
  std::optional<std::string> consensus;
  std::optional<unsigned> seed;
};

ScenarioConfig LoadWithOverrides(const CommonOptions& o) {
  ScenarioConfig c = sdmpc::io::LoadScenarioConfig(o.config);
  if (o.steps) c.steps = *o.steps;
  if (o.consensus) c.consensus = sdmpc::ParseConsensusMode(*o.consensus);
  if (!o.out.empty()) c.output_dir = o.out;
  c.Validate();
  return c;
}

void PrintReport(const sdmpc::MonitorReport& r) {
  for (const auto& p : r.properties) {
    std::printf("  %-24s %s  worst margin %.3e (step %d, agent %d), %d checks\n", p.name.c_str(),
                p.pass ? "pass" : "FAIL", p.worst_margin, p.worst_step, p.worst_agent, p.checks);
  }
}

int Synthesize(const CommonOptions& o) {
  const ScenarioConfig c = LoadWithOverrides(o);
  const sdmpc::SynthesisResult s = sdmpc::SynthesizeScenario(c);
  fs::create_directories(c.output_dir);
  const std::string path = (fs::path(c.output_dir) / "synthesis.json").string();
  sdmpc::io::WriteJsonFile(path, sdmpc::io::ToJson(s));
  std::printf("X_f %d facets, X_bar_0 %d facets (%d-step set), X_0 %d facets, rho_max %.4f\n",
              s.X_f.num_facets(), s.X_bar_0.num_facets(), s.switch_steps, s.X_0.num_facets(), s.rho_max);
  std::printf("wrote %s\n", path.c_str());
  return 0;
}

int RunCmd(const CommonOptions& o) {
  ScenarioConfig c = LoadWithOverrides(o);
  if (o.seed) {
    // Random initial deviations inside X_0, placed on the formation reference.
    c.seed = *o.seed;
    const sdmpc::SynthesisResult s = sdmpc::SynthesizeScenario(c);
    const auto x0 = sdmpc::SampleStatesIn(s.X_0, c.num_agents, c.seed);
    for (int i = 0; i < c.num_agents; ++i) c.initial_states[i] = sdmpc::ToAbsoluteFrame(x0[i], 0, i, c);
  }
  const sdmpc::ScenarioRun run = sdmpc::RunScenario(c);
  sdmpc::ExportRun(c, run, c.output_dir);
  const auto& tr = run.trace;
  if (tr.switch_step >= 0) {
    std::printf("switch at step %d (t = %.2f s)\n", tr.switch_step, tr.switch_step * tr.dt);
  } else {
    std::printf("no switch within %d steps\n", c.steps);
  }
  std::printf("final max |x| = %.3e, runtime %.3f s\n", sdmpc::MaxNormFrom(tr, tr.steps.back().t),
              run.runtime_seconds);
  PrintReport(run.monitor);
  std::printf("wrote %s/{trace.csv,summary.json,plot.dat}\n", c.output_dir.c_str());
  return run.monitor.all_pass ? 0 : 2;
}

int MonitorCmd(const CommonOptions& o, const std::string& trace_path, const std::string& synthesis_path) {
  const ScenarioConfig c = LoadWithOverrides(o);
  const sdmpc::SynthesisResult s = synthesis_path.empty()
                                       ? sdmpc::SynthesizeScenario(c)
                                       : sdmpc::io::SynthesisFromJson(sdmpc::io::ReadJsonFile(synthesis_path));
  const std::string path = trace_path.empty() ? (fs::path(c.output_dir) / "trace.csv").string() : trace_path;
  const sdmpc::SimulationTrace tr = sdmpc::io::ReadTraceCsv(path);
  const sdmpc::MonitorReport r = sdmpc::MonitorLemmas(tr, s);
  std::printf("%s: %zu steps, %d agents, switch step %d\n", path.c_str(), tr.steps.size(), tr.num_agents,
              tr.switch_step);
  PrintReport(r);
  return r.all_pass ? 0 : 2;
}

int ShiftCmd(const CommonOptions& o) {
  const ScenarioConfig c = LoadWithOverrides(o);
  if (!c.obstacle_shift) throw std::invalid_argument("config has no obstacle_shift block");
  const auto run = sdmpc::RunObstacleShift(c, c.obstacle_shift->obstacle_center, c.obstacle_shift->target);
  fs::create_directories(c.output_dir);
  const fs::path dir(c.output_dir);
  sdmpc::io::WriteTraceCsv(run.shifted.trace, (dir / "trace_shift.csv").string());
  sdmpc::io::WritePlotData(run.shifted.trace, (dir / "plot_shift.dat").string());
  sdmpc::io::WriteJsonFile((dir / "summary_shift.json").string(), sdmpc::ShiftSummary(c, run));
  const auto& cert = run.certificates;
  std::printf("r = %.4f, alpha = %.4f, r' = %.4f, |target| = %.4f\n", cert.r, cert.alpha, cert.r_prime,
              cert.target_norm);
  std::printf("nesting certificates %s, excursion in X_bar_0 %s, other agents unchanged %s\n",
              cert.all() ? "pass" : "FAIL", run.excursion_in_switch_set ? "yes" : "NO",
              run.others_unchanged ? "yes" : "NO");
  std::printf("obstacle clearance: baseline %.3f m, shifted %.3f m\n", run.clearance_baseline,
              run.clearance_shifted);
  const bool ok = cert.all() && run.excursion_in_switch_set && run.others_unchanged;
  return ok ? 0 : 2;
}

void AddCommon(CLI::App* app, CommonOptions& o) {
  app->add_option("--config", o.config, "Scenario configuration (JSON)")->required()->check(CLI::ExistingFile);
  app->add_option("--out", o.out, "Output directory (overrides output_dir)");
  app->add_option("--steps", o.steps, "Number of simulated steps")->check(CLI::NonNegativeNumber);
  app->add_option("--consensus", o.consensus, "Switch agreement protocol")
      ->check(CLI::IsMember({"multi_round", "instantaneous"}));
  app->add_option("--seed", o.seed, "Draw random initial deviations inside X_0 with this seed");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Distributed MPC with switched cost functions"};
  app.require_subcommand(1);
  CommonOptions opts;
  std::string trace_path;
  std::string synthesis_path;

  auto* syn = app.add_subcommand("synthesize", "Compute K, P, P_e and the sets X_f, X_bar_0, X_0");
  AddCommon(syn, opts);
  auto* run = app.add_subcommand("run", "Synthesize, simulate and export trace, summary and plot data");
  AddCommon(run, opts);
  auto* mon = app.add_subcommand("monitor", "Check a trace CSV against the runtime certificates");
  AddCommon(mon, opts);
  mon->add_option("--trace", trace_path, "Trace CSV (default <out>/trace.csv)");
  mon->add_option("--synthesis", synthesis_path, "Cached synthesis.json");
  auto* shift = app.add_subcommand("shift", "Obstacle-avoidance state shift for one switched agent");
  AddCommon(shift, opts);

  CLI11_PARSE(app, argc, argv);
  try {
    if (*syn) return Synthesize(opts);
    if (*run) return RunCmd(opts);
    if (*mon) return MonitorCmd(opts, trace_path, synthesis_path);
    if (*shift) return ShiftCmd(opts);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
