#include "sdmpc/monitor.hpp"

#include <cmath>
#include <stdexcept>

namespace sdmpc {
namespace {

void Observe(PropertyResult& p, double margin, int step, int agent) {
  ++p.checks;
  if (p.worst_step < 0 || margin > p.worst_margin) {
    p.worst_margin = margin;
    p.worst_step = step;
    p.worst_agent = agent;
  }
  if (!(margin <= 0.0)) {
    ++p.violations;
    p.pass = false;
  }
}

}  // namespace

const PropertyResult& MonitorReport::Get(const std::string& name) const {
  for (const auto& p : properties) {
    if (p.name == name) return p;
  }
  throw std::out_of_range("MonitorReport: no property named " + name);
}

MonitorReport MonitorLemmas(const SimulationTrace& trace, const SynthesisResult& syn,
                            const MonitorOptions& options) {
  PropertyResult feasibility{"recursive_feasibility"};
  PropertyResult descent{"cost_descent"};
  PropertyResult compat{"compatibility"};
  PropertyResult compat2{"compatibility_two_norm"};
  PropertyResult terminal{"terminal_equality"};
  PropertyResult invariance{"post_switch_invariance"};

  const auto& Q = syn.weights.Q;
  const auto& R = syn.weights.R;
  const double sqrt_n = std::sqrt(static_cast<double>(trace.n));
  const int T = static_cast<int>(trace.steps.size());
  for (int t = 0; t < T; ++t) {
    const StepRecord& rec = trace.steps[t];
    for (int i = 0; i < static_cast<int>(rec.agents.size()); ++i) {
      const AgentStep& a = rec.agents[i];
      Observe(feasibility, a.status == QpStatus::kOptimal ? 0.0 : 1.0, t, i);

      if (a.mode == AgentMode::kCoupled) {
        const double c = a.compatibility_bound;
        if (std::isfinite(c)) {
          Observe(compat, a.compatibility_residual - c - options.compatibility_tol, t, i);
          Observe(compat2, sqrt_n * a.compatibility_residual - sqrt_n * (c + options.compatibility_tol), t, i);
        }
        if (t >= 1) Observe(terminal, a.terminal_residual - options.terminal_tol, t, i);
        if (t + 1 < T && trace.steps[t + 1].agents[i].mode == AgentMode::kCoupled) {
          const double stage = a.x.dot(Q * a.x) + a.u.dot(R * a.u);
          const double delta = trace.steps[t + 1].agents[i].cost - a.cost;
          Observe(descent, delta + stage - options.descent_tol, t, i);
        }
      }

      if (trace.switch_step >= 0 && t >= trace.switch_step) {
        const double outside = a.mode == AgentMode::kDecoupled ? 0.0 : 1.0;
        double excess = 0.0;
        if (syn.X_bar_0.num_facets() > 0) {
          excess = (syn.X_bar_0.normals() * a.x - syn.X_bar_0.offsets()).maxCoeff();
        }
        Observe(invariance, std::max(outside, excess - options.membership_tol), t, i);
      } else if (a.mode == AgentMode::kDecoupled) {
        Observe(invariance, 1.0, t, i);
      }
    }
  }

  MonitorReport report;
  report.properties = {feasibility, descent, compat, compat2, terminal, invariance};
  for (const auto& p : report.properties) report.all_pass = report.all_pass && p.pass;
  return report;
}

}  // namespace sdmpc
