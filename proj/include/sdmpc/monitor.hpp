#pragma once

#include <string>
#include <vector>

#include "sdmpc/network_sim.hpp"
#include "sdmpc/synthesis.hpp"

namespace sdmpc {

struct PropertyResult {
  std::string name;
  bool pass = true;
  /// Largest value of (observed − allowed); ≤ 0 when the property holds.
  double worst_margin = 0.0;
  int worst_step = -1;
  int worst_agent = -1;
  int checks = 0;
  int violations = 0;
};

struct MonitorReport {
  std::vector<PropertyResult> properties;
  bool all_pass = true;
  const PropertyResult& Get(const std::string& name) const;
};

struct MonitorOptions {
  double descent_tol = 1e-6;
  double compatibility_tol = 1e-8;
  double terminal_tol = 1e-7;
  double membership_tol = 1e-9;
};

/// Runtime certificates over a finished trace:
///   recursive_feasibility   every QP solved to optimality
///   cost_descent            J(t+1) − J(t) ≤ −‖x_t‖²_Q − ‖u_t‖²_R while coupled
///   compatibility           ‖x_k* − x̂_k‖_∞ ≤ c_t (and the √n 2-norm consequence)
///   terminal_equality       ‖x_N* − x̂_N‖ small at coupled steps t ≥ 1
///   post_switch_invariance  x_t ∈ X̄_0 and decoupled mode for all t ≥ switch
/// Only per-step scalar fields and (x, u) are read, so a trace re-imported
/// from CSV yields the same report.
MonitorReport MonitorLemmas(const SimulationTrace& trace, const SynthesisResult& syn,
                            const MonitorOptions& options = {});

}  // namespace sdmpc
