#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "sdmpc/lp.hpp"
#include "sdmpc/scenario.hpp"
#include "support.hpp"

namespace {

using namespace sdmpc;
using sdmpc::testing::Mat;
using sdmpc::testing::Vec;

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string Fmt(const char* format, double a = 0, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), format, a, b, c, d);
  return buf;
}

ScenarioConfig Shipped() { return io::LoadScenarioConfig(testing::ShippedConfigPath()); }

double MaxInitialNorm(const SimulationTrace& tr) {
  double v = 0.0;
  for (const auto& a : tr.steps.front().agents) v = std::max(v, a.x.norm());
  return v;
}

// Closed-loop runs over random joint initial states, shared by criteria 2–6.
struct RandomRuns {
  int attempted = 0;
  int completed = 0;
  int qp_solves = 0;
  int non_optimal = 0;
  std::vector<std::string> errors;
  std::vector<MonitorReport> reports;
  std::vector<SimulationTrace> traces;
};

const RandomRuns& SampledRuns() {
  static const RandomRuns runs = [] {
    RandomRuns out;
    ScenarioConfig c = Shipped();
    c.steps = 60;
    const SynthesisResult syn = SynthesizeScenario(c);
    const LtiSystem sys = MakeSystem(c);
    const Graph g = MakeGraph(c);
    for (int k = 0; k < 50; ++k) {
      ++out.attempted;
      const auto x0 = SampleStatesIn(syn.X_0, c.num_agents, 1000u + static_cast<unsigned>(k));
      try {
        SimulationConfig sim;
        sim.record_messages = false;
        SimulationTrace tr = sdmpc::Run(sys, syn, g, x0, c.steps, sim);
        for (const auto& rec : tr.steps) {
          for (const auto& a : rec.agents) {
            ++out.qp_solves;
            if (a.status != QpStatus::kOptimal) ++out.non_optimal;
          }
        }
        out.reports.push_back(MonitorLemmas(tr, syn));
        out.traces.push_back(std::move(tr));
        ++out.completed;
      } catch (const std::exception& e) {
        out.errors.push_back(e.what());
      }
    }
    return out;
  }();
  return runs;
}

// Shipped scenario plus the sampled runs, checked for one monitor property.
Verdict PropertyOverRuns(const std::vector<std::string>& names) {
  const RandomRuns& runs = SampledRuns();
  const ScenarioRun shipped = RunScenario(Shipped());
  std::vector<const MonitorReport*> reports = {&shipped.monitor};
  for (const auto& r : runs.reports) reports.push_back(&r);
  Verdict v;
  v.pass = runs.completed == runs.attempted;
  int checks = 0, violations = 0;
  double worst = -std::numeric_limits<double>::infinity();
  for (const MonitorReport* r : reports) {
    for (const auto& name : names) {
      const PropertyResult& p = r->Get(name);
      checks += p.checks;
      violations += p.violations;
      worst = std::max(worst, p.worst_margin);
      v.pass = v.pass && p.pass;
    }
  }
  v.pass = v.pass && checks > 0;
  std::ostringstream s;
  s << reports.size() << " runs, " << checks << " checks, " << violations << " violations, worst margin " << worst;
  if (runs.completed != runs.attempted) s << ", " << runs.attempted - runs.completed << " runs aborted";
  v.detail = s.str();
  return v;
}

Verdict Criterion1() {
  const ScenarioConfig c = Shipped();
  const auto t0 = std::chrono::steady_clock::now();
  const ScenarioRun run = RunUgvFormation(c);
  const double runtime = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const double ts = run.trace.switch_step >= 0 ? run.trace.switch_step * c.dt : -1.0;
  const int settle_from = static_cast<int>(std::lround(2.5 / c.dt));
  const double late = MaxNormFrom(run.trace, settle_from);
  const double limit = 0.05 * MaxInitialNorm(run.trace);
  Verdict v;
  v.pass = ts >= 0.3 - 1e-9 && ts <= 1.5 + 1e-9 && late <= limit && runtime <= 10.0 &&
           static_cast<int>(run.trace.steps.size()) > settle_from;
  v.detail = Fmt("switch at %.2f s, max |x| after 2.5 s = %.2e (limit %.2e), runtime %.3f s", ts, late, limit, runtime);
  return v;
}

Verdict Criterion2() {
  const RandomRuns& runs = SampledRuns();
  Verdict v;
  v.pass = runs.completed == runs.attempted && runs.non_optimal == 0;
  std::ostringstream s;
  s << runs.completed << "/" << runs.attempted << " runs completed, " << runs.qp_solves << " QPs, " << runs.non_optimal
    << " not optimal";
  if (!runs.errors.empty()) s << "; first error: " << runs.errors.front();
  v.detail = s.str();
  return v;
}

Verdict Criterion6() {
  Verdict v = PropertyOverRuns({"post_switch_invariance"});
  int switched = 0;
  bool reverted = false;
  for (const auto& tr : SampledRuns().traces) {
    if (tr.switch_step >= 0) ++switched;
    for (int i = 0; i < tr.num_agents; ++i) {
      bool decoupled = false;
      for (const auto& rec : tr.steps) {
        const bool now = rec.agents[i].mode == AgentMode::kDecoupled;
        reverted = reverted || (decoupled && !now);
        decoupled = decoupled || now;
      }
    }
  }
  v.pass = v.pass && !reverted && switched == static_cast<int>(SampledRuns().traces.size());
  v.detail += ", " + std::to_string(switched) + " sampled runs switched" + (reverted ? ", mode reverted" : "");
  return v;
}

Verdict Criterion7() {
  const ScenarioConfig c = Shipped();
  const LtiSystem sys = MakeSystem(c);
  const SynthesisResult syn = SynthesizeScenario(c);
  const CostWeights& w = syn.weights;
  const double residual = DareResidual(sys, w.Q, w.R, w.P);
  const bool dare_ok = residual <= 1e-8 * w.P.norm();

  const Eigen::MatrixXd Acl = ClosedLoop(sys, w);
  std::mt19937_64 rng(7);
  std::normal_distribution<double> g;
  double worst_lyap = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < 1000; ++k) {
    const Eigen::VectorXd x = Vec({g(rng), g(rng), g(rng)});
    const Eigen::VectorXd y = Acl * x;
    worst_lyap = std::max(worst_lyap, -x.dot(w.P_e * x) + w.q_e * x.squaredNorm() + y.dot(w.P_e * y));
  }
  const bool lyap_ok = worst_lyap < 0.0;

  double worst_descent = -std::numeric_limits<double>::infinity();
  for (const auto& x : testing::SampleInside(syn.X_f, 1000, rng)) {
    const Eigen::VectorXd u = w.K * x, y = Acl * x;
    worst_descent = std::max(worst_descent, -x.dot(w.P * x) + x.dot(w.Q * x) + u.dot(w.R * u) + y.dot(w.P * y));
  }
  const bool descent_ok = worst_descent <= 1e-9;
  const bool nesting = syn.X_f.IsSubsetOf(syn.X_bar_0) && syn.X_bar_0.IsSubsetOf(syn.X_0) && syn.X_0.IsSubsetOf(syn.X);
  Verdict v;
  v.pass = dare_ok && lyap_ok && descent_ok && nesting;
  v.detail = Fmt("DARE residual %.2e (limit %.2e), worst P_e form %.2e, worst terminal descent %.2e", residual,
                 1e-8 * w.P.norm(), worst_lyap, worst_descent) +
             (nesting ? ", nesting holds" : ", nesting FAILS");
  return v;
}

QpProblem RandomQp(std::mt19937_64& rng, int s, int p, bool box) {
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> slack(0.05, 1.0);
  Eigen::MatrixXd L(s, s);
  for (int i = 0; i < s; ++i)
    for (int j = 0; j < s; ++j) L(i, j) = g(rng);
  Eigen::VectorXd f(s), z0(s);
  for (int i = 0; i < s; ++i) {
    f(i) = 3.0 * g(rng);
    z0(i) = std::clamp(0.5 * g(rng), -1.5, 1.5);
  }
  const int rows = p + (box ? 2 * s : 0);
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(rows, s);
  Eigen::VectorXd h(rows);
  for (int i = 0; i < p; ++i) {
    for (int j = 0; j < s; ++j) G(i, j) = g(rng);
    h(i) = G.row(i).dot(z0) + slack(rng);
  }
  for (int j = 0; box && j < s; ++j) {
    G(p + 2 * j, j) = 1.0;
    G(p + 2 * j + 1, j) = -1.0;
    h(p + 2 * j) = h(p + 2 * j + 1) = 2.0;
  }
  return QpProblem(L * L.transpose() + 0.1 * Eigen::MatrixXd::Identity(s, s), f, G, h, Eigen::MatrixXd(0, s),
                   Eigen::VectorXd(0));
}

double GridMinimum(const QpProblem& qp) {
  const int s = qp.size();
  Eigen::VectorXd center = Eigen::VectorXd::Zero(s);
  double half = 2.0, best = std::numeric_limits<double>::infinity();
  for (int level = 0; level < 30; ++level) {
    const int per_axis = 21;
    const double step = 2.0 * half / (per_axis - 1);
    Eigen::VectorXd best_z = center;
    Eigen::VectorXi idx = Eigen::VectorXi::Zero(s);
    for (bool done = false; !done;) {
      Eigen::VectorXd z(s);
      for (int i = 0; i < s; ++i) z(i) = center(i) - half + step * idx(i);
      if ((qp.G_ineq * z - qp.h).maxCoeff() <= 0.0 && qp.Objective(z) < best) {
        best = qp.Objective(z);
        best_z = z;
      }
      int k = 0;
      while (k < s && ++idx(k) == per_axis) idx(k++) = 0;
      done = k == s;
    }
    center = best_z;
    half *= 0.5;
  }
  return best;
}

Verdict Criterion8() {
  std::mt19937_64 rng(808);
  int kkt_pass = 0;
  for (int k = 0; k < 100; ++k) {
    const QpProblem qp = RandomQp(rng, 1 + k % 20, (k * 7) % 41, false);
    const QpSolution sol = Solve(qp);
    if (sol.status == QpStatus::kOptimal && CheckKkt(qp, sol.z_star, 1e-6)) ++kkt_pass;
  }
  int grid_pass = 0;
  double worst_gap = 0.0;
  for (int k = 0; k < 20; ++k) {
    const QpProblem qp = RandomQp(rng, 1 + k % 3, 1 + k % 4, true);
    const QpSolution sol = Solve(qp);
    const double gap = GridMinimum(qp) - sol.objective;
    worst_gap = std::max(worst_gap, std::abs(gap));
    if (sol.status == QpStatus::kOptimal && gap >= -1e-9 && gap <= 1e-3) ++grid_pass;
  }
  Verdict v;
  v.pass = kkt_pass == 100 && grid_pass == 20;
  v.detail = Fmt("%.0f/100 random QPs pass KKT at 1e-6, %.0f/20 tiny QPs within 1e-3 of the grid (worst %.2e)", kkt_pass,
                 grid_pass, worst_gap);
  return v;
}

bool Feasible(const Eigen::MatrixXd& A, const Eigen::VectorXd& b) {
  return lp::FeasibilityMargin(A, b).margin >= -1e-7;
}

struct Soundness {
  int inside = 0;
  int outside = 0;
  int violations = 0;
};

// Samples points on both sides of `set` (skipping a 1e-6 band around its
// boundary) and compares membership with an independent oracle.
Soundness SampleAgainst(const Polytope& set, const Eigen::VectorXd& lo, const Eigen::VectorXd& hi,
                        const std::function<bool(const Eigen::VectorXd&)>& oracle,
                        const std::function<bool(const Eigen::VectorXd&)>& in_domain, std::mt19937_64& rng) {
  Soundness s;
  int attempts = 0;
  while ((s.inside < 1000 || s.outside < 1000) && ++attempts < 2000000) {
    const Eigen::VectorXd x = testing::Uniform(rng, lo, hi);
    if (!in_domain(x)) continue;
    const double v = testing::Violation(set, x);
    if (std::abs(v) < 1e-6) continue;
    if (v < 0 && s.inside < 1000) {
      ++s.inside;
      if (!oracle(x)) ++s.violations;
    } else if (v > 0 && s.outside < 1000) {
      ++s.outside;
      if (oracle(x)) ++s.violations;
    }
  }
  return s;
}

Verdict Criterion9() {
  std::mt19937_64 rng(909);
  std::ostringstream detail;
  bool pass = true;
  auto record = [&](const char* name, const Soundness& s) {
    const bool ok = s.violations == 0 && s.inside >= 1000 && s.outside >= 1000;
    pass = pass && ok;
    detail << name << " " << s.inside << "/" << s.outside << " in/out, " << s.violations << " bad; ";
  };
  auto anywhere = [](const Eigen::VectorXd&) { return true; };

  {
    std::normal_distribution<double> g;
    Eigen::MatrixXd A(14, 4);
    for (int i = 0; i < A.rows(); ++i)
      for (int j = 0; j < 4; ++j) A(i, j) = g(rng);
    const Polytope P(A, Eigen::VectorXd::Ones(14));
    const Polytope S = Project(P, {0, 2});
    const auto [lo, hi] = S.BoundingBox();
    const Eigen::MatrixXd Ak = P.normals()(Eigen::all, std::vector<int>{0, 2});
    const Eigen::MatrixXd Ad = P.normals()(Eigen::all, std::vector<int>{1, 3});
    record("project", SampleAgainst(S, lo - 0.3 * (hi - lo), hi + 0.3 * (hi - lo),
                                    [&](const Eigen::VectorXd& y) { return Feasible(Ad, P.offsets() - Ak * y); },
                                    anywhere, rng));
  }

  const LtiSystem sys = testing::UgvSystem();
  const Polytope X = testing::UgvStateSet(), U = testing::UgvInputSet();
  const Polytope T = Polytope::SymmetricBox(Vec({2, 1, 0.2}));
  auto in_X = [&](const Eigen::VectorXd& x) { return X.Contains(x); };
  {
    const Polytope pre = PreSet(sys, T, X, U);
    Eigen::MatrixXd Au(T.num_facets() + U.num_facets(), 2);
    Au << T.normals() * sys.B(), U.normals();
    auto oracle = [&](const Eigen::VectorXd& x) {
      Eigen::VectorXd bu(Au.rows());
      bu << T.offsets() - T.normals() * sys.A() * x, U.offsets();
      return Feasible(Au, bu);
    };
    record("pre_set", SampleAgainst(pre, Vec({-3, -2, -0.5}), Vec({3, 2, 0.5}), oracle, in_X, rng));
  }
  {
    // Three steps through the lifted (x, u0, u1, u2) feasibility problem.
    const int N = 3;
    const Polytope pre = PreN(sys, T, X, U, N);
    auto oracle = [&](const Eigen::VectorXd& x) {
      const int fx = X.num_facets(), fu = U.num_facets(), ft = T.num_facets();
      const int rows = (N - 1) * fx + N * fu + ft;
      Eigen::MatrixXd G = Eigen::MatrixXd::Zero(rows, 2 * N);
      Eigen::VectorXd h(rows);
      int r = 0;
      for (int k = 1; k <= N; ++k) {
        const Polytope& S = k == N ? T : X;
        const int f = S.num_facets();
        Eigen::MatrixXd Ak = Eigen::MatrixXd::Identity(3, 3);
        for (int i = 0; i < k; ++i) Ak = sys.A() * Ak;
        h.segment(r, f) = S.offsets() - S.normals() * Ak * x;
        for (int j = 0; j < k; ++j) {
          Eigen::MatrixXd Apow = Eigen::MatrixXd::Identity(3, 3);
          for (int i = 0; i < k - 1 - j; ++i) Apow = sys.A() * Apow;
          G.block(r, 2 * j, f, 2) = S.normals() * Apow * sys.B();
        }
        r += f;
      }
      for (int j = 0; j < N; ++j) {
        G.block(r, 2 * j, fu, 2) = U.normals();
        h.segment(r, fu) = U.offsets();
        r += fu;
      }
      return Feasible(G, h);
    };
    record("pre_n", SampleAgainst(pre, Vec({-5, -4, -0.5}), Vec({5, 4, 0.5}), oracle, in_X, rng));
  }
  {
    const SynthesisResult& syn = testing::UgvSynthesis();
    const Eigen::MatrixXd Acl = ClosedLoop(sys, syn.weights);
    const Polytope Xk = X.Intersect(U.Preimage(syn.weights.K));
    const Polytope omega = MaxInvariantSet(Acl, Xk);
    int checked = 0, bad = 0;
    for (const auto& x : testing::SampleInside(omega, 1000, rng)) {
      ++checked;
      if (testing::Violation(omega, Acl * x) > 1e-7 || testing::Violation(Xk, x) > 1e-7) ++bad;
    }
    const double a = std::numbers::pi / 6.0;
    const Eigen::MatrixXd R = 0.9 * Mat(2, 2, {std::cos(a), -std::sin(a), std::sin(a), std::cos(a)});
    const Polytope rot = MaxInvariantSet(R, Polytope::SymmetricBox(Vec({1, 1})));
    std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
    for (int k = 0; k < 1000; ++k) {
      const double t = angle(rng);
      ++checked;
      if (testing::Violation(rot, R * rot.SupportPoint(Vec({std::cos(t), std::sin(t)}))) > 1e-7) ++bad;
    }
    pass = pass && bad == 0;
    detail << "max_invariant_set " << checked << " points, " << bad << " bad";
  }
  return {pass, detail.str()};
}

Verdict Criterion10() {
  int scenarios = 0, late = 0, spurious = 0, split = 0;
  int worst_excess = std::numeric_limits<int>::min();
  std::mt19937_64 rng(1010);
  std::uniform_int_distribution<int> when(0, 6);
  for (int M = 1; M <= 6; ++M) {
    for (const Graph& g : {Graph::Path(M), Graph::Star(M), Graph::Complete(M)}) {
      for (int trial = 0; trial < 10; ++trial) {
        std::vector<int> ready_at(M);
        for (int& r : ready_at) r = when(rng);
        std::vector<ConsensusAgent> agents(M);
        int unanimous = -1, switched = -1;
        for (int r = 0; r < 100 && switched < 0; ++r) {
          std::vector<bool> now(M);
          bool all = true;
          for (int i = 0; i < M; ++i) all = all && (now[i] = r >= ready_at[i]);
          if (all && unanimous < 0) unanimous = r;
          if (SwitchConsensusStep(agents, now, g, ConsensusMode::kMultiRound, r)) {
            switched = r;
            for (const auto& a : agents) split += a.switched ? 0 : 1;
          }
        }
        ++scenarios;
        const int excess = switched < 0 ? 1000 : (switched - unanimous) - 2 * g.Diameter();
        worst_excess = std::max(worst_excess, excess);
        if (excess > 0) ++late;
      }
      for (int holdout = 0; M > 1 && holdout < M; ++holdout) {
        std::vector<ConsensusAgent> agents(M);
        std::vector<bool> now(M, true);
        now[holdout] = false;
        for (int r = 0; r < 100; ++r) {
          if (SwitchConsensusStep(agents, now, g, ConsensusMode::kMultiRound, r)) ++spurious;
        }
      }
    }
  }
  Verdict v;
  v.pass = late == 0 && spurious == 0 && split == 0;
  std::ostringstream s;
  s << scenarios << " unanimous scenarios, " << late << " late (worst rounds beyond 2*diameter " << worst_excess
    << "), " << spurious << " switches without unanimity, " << split << " agents left behind";
  v.detail = s.str();
  return v;
}

Verdict Criterion11() {
  const ScenarioConfig c = Shipped();
  const ObstacleShiftRun run = RunObstacleShift(c, c.obstacle_shift->obstacle_center, c.obstacle_shift->target);
  // Independent recheck of the excursion against X̄_0 and the others' traces.
  bool inside = true, unchanged = true;
  const SynthesisResult& syn = run.shifted.synthesis;
  for (size_t t = 0; t < run.shifted.trace.steps.size(); ++t) {
    for (int i = 0; i < c.num_agents; ++i) {
      const AgentStep& s = run.shifted.trace.steps[t].agents[i];
      const AgentStep& b = run.baseline.trace.steps[t].agents[i];
      if (i == c.obstacle_shift->agent) {
        if (static_cast<int>(t) >= run.shifted.trace.switch_step) inside = inside && syn.X_bar_0.Contains(s.x);
      } else {
        unchanged = unchanged && s.x == b.x && s.u == b.u && s.cost == b.cost;
      }
    }
  }
  Verdict v;
  v.pass = run.certificates.all() && inside && unchanged && run.excursion_in_switch_set && run.others_unchanged;
  v.detail = Fmt("r = %.4f, alpha = %.4f, r' = %.4f, |target| = %.4f", run.certificates.r, run.certificates.alpha,
                 run.certificates.r_prime, run.certificates.target_norm) +
             (run.certificates.all() ? ", nesting certificates pass" : ", nesting certificates FAIL") +
             (inside ? ", excursion inside X_bar_0" : ", excursion leaves X_bar_0") +
             (unchanged ? ", other agents bitwise unchanged" : ", other agents changed");
  return v;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria = {
      {"UGV reproduction", Criterion1},
      {"Recursive feasibility", Criterion2},
      {"Pre-switch descent", [] { return PropertyOverRuns({"cost_descent"}); }},
      {"Compatibility satisfaction", [] { return PropertyOverRuns({"compatibility", "compatibility_two_norm"}); }},
      {"Terminal equality", [] { return PropertyOverRuns({"terminal_equality"}); }},
      {"Post-switch invariance", Criterion6},
      {"Synthesis certificates", Criterion7},
      {"QP solver oracle equivalence", Criterion8},
      {"Polytope oracles", Criterion9},
      {"Consensus protocol", Criterion10},
      {"Obstacle-shift demo", Criterion11},
  };
  int failed = 0;
  for (size_t k = 0; k < criteria.size(); ++k) {
    Verdict v;
    try {
      v = criteria[k].second();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    if (!v.pass) ++failed;
    std::printf("%s %2zu %s: %s\n", v.pass ? "PASS" : "FAIL", k + 1, criteria[k].first.c_str(), v.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%zu/%zu criteria passed\n", criteria.size() - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
