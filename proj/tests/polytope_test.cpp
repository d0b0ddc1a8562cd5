#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "sdmpc/lp.hpp"
#include "sdmpc/polytope.hpp"
#include "support.hpp"

namespace sdmpc {
namespace {

using testing::Mat;
using testing::Vec;

Polytope UnitBox(int n) { return Polytope::SymmetricBox(Eigen::VectorXd::Ones(n)); }

LtiSystem Scalar(double a, double b) { return LtiSystem(Mat(1, 1, {a}), Mat(1, 1, {b}), 1.0); }

Polytope Interval(double lo, double hi) { return Polytope::Box(Vec({lo}), Vec({hi})); }

// Feasibility of {z : A z ≤ b}, decided by the LP margin with a small slack.
bool Feasible(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, double tol = 1e-7) {
  if (A.rows() == 0) return (b.array() >= -tol).all();
  return lp::FeasibilityMargin(A, b).margin >= -tol;
}

TEST(Polytope, ContainsExamples) {
  const Polytope box = UnitBox(2);
  EXPECT_TRUE(box.Contains(Vec({0, 0})));
  EXPECT_FALSE(box.Contains(Vec({1.5, 0})));
  EXPECT_TRUE(box.Contains(Vec({1, 1})));
  EXPECT_THROW(box.Contains(Vec({0, 0, 0})), std::invalid_argument);
}

TEST(Polytope, RowsAreUnitNormalized) {
  const Polytope p(Mat(2, 2, {3, 4, 0, -2}), Vec({5, 2}));
  for (int i = 0; i < p.num_facets(); ++i) EXPECT_NEAR(p.normals().row(i).norm(), 1.0, 1e-15);
  EXPECT_TRUE(p.Contains(Vec({1, 0.5})));
  EXPECT_FALSE(p.Contains(Vec({1, 0.6})));
}

TEST(Polytope, ContainsAgreesWithDirectEvaluation) {
  const Eigen::MatrixXd A = Mat(4, 2, {1, 2, -3, 1, 0.5, -1, -1, -1});
  const Eigen::VectorXd b = Vec({2, 3, 1, 2});
  const Polytope p(A, b);
  std::mt19937_64 rng(1);
  for (int i = 0; i < 1000; ++i) {
    const Eigen::VectorXd x = testing::Uniform(rng, Vec({-4, -4}), Vec({4, 4}));
    const Eigen::VectorXd slack = A * x - b;
    if (std::abs(slack.maxCoeff()) < 1e-6) continue;
    EXPECT_EQ(p.Contains(x), (slack.array() <= 0).all());
  }
}

TEST(Polytope, EmptyFlagIsExplicit) {
  const Polytope e = Polytope::Empty(2);
  EXPECT_TRUE(e.is_empty());
  EXPECT_FALSE(e.Contains(Vec({0, 0})));
  const Polytope clash = Interval(0, 1).Intersect(Interval(2, 3)).Reduced();
  EXPECT_TRUE(clash.is_empty());
}

TEST(Project, BoxOntoTwoAxes) {
  const Polytope box = Polytope::Box(Vec({0, 0, 0}), Vec({1, 1, 1}));
  EXPECT_TRUE(Project(box, {0, 1}).ApproxEquals(Polytope::Box(Vec({0, 0}), Vec({1, 1}))));
}

TEST(Project, SimplexShadow) {
  const Polytope p(Mat(5, 2, {-1, 0, 1, 0, 0, -1, 0, 1, 1, 1}), Vec({0, 1, 0, 1, 1}));
  EXPECT_TRUE(Project(p, {0}).ApproxEquals(Interval(0, 1)));
}

TEST(Project, EliminatesCoupledVariable) {
  // x − u ≤ 0, u ≤ 2, −u ≤ 0, x ≥ −1  ⇒  −1 ≤ x ≤ 2.
  const Polytope p(Mat(4, 2, {1, -1, 0, 1, 0, -1, -1, 0}), Vec({0, 2, 0, 1}));
  EXPECT_TRUE(Project(p, {0}).ApproxEquals(Interval(-1, 2)));
}

TEST(Project, EmptyInputStaysEmpty) { EXPECT_TRUE(Project(Polytope::Empty(3), {0, 2}).is_empty()); }

TEST(Project, SamplingLpSoundness) {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> g;
  Eigen::MatrixXd A(14, 4);
  for (int i = 0; i < A.rows(); ++i)
    for (int j = 0; j < 4; ++j) A(i, j) = g(rng);
  const Polytope P(A, Eigen::VectorXd::Ones(14));
  ASSERT_TRUE(P.IsBounded());
  const std::vector<int> keep = {0, 2};
  const Polytope S = Project(P, keep);
  const auto [lo, hi] = S.BoundingBox();
  const Eigen::VectorXd pad = 0.3 * (hi - lo);

  const Eigen::MatrixXd Ak = P.normals()(Eigen::all, keep);
  const Eigen::MatrixXd Ad = P.normals()(Eigen::all, std::vector<int>{1, 3});
  int inside = 0, outside = 0;
  while (inside < 1000 || outside < 1000) {
    const Eigen::VectorXd y = testing::Uniform(rng, lo - pad, hi + pad);
    const double v = testing::Violation(S, y);
    if (std::abs(v) < 1e-6) continue;
    const bool lift = Feasible(Ad, P.offsets() - Ak * y);
    if (v < 0 && inside < 1000) {
      EXPECT_TRUE(lift) << y.transpose();
      ++inside;
    } else if (v > 0 && outside < 1000) {
      EXPECT_FALSE(lift) << y.transpose();
      ++outside;
    }
  }
}

TEST(PreSet, ScalarIntegrator) {
  const Polytope pre = PreSet(Scalar(1, 1), Interval(-1, 1), Interval(-5, 5), Interval(-1, 1));
  EXPECT_TRUE(pre.ApproxEquals(Interval(-2, 2)));
}

TEST(PreSet, LooseSetsReturnX) {
  const Polytope X = Interval(-3, 3);
  EXPECT_TRUE(PreSet(Scalar(1, 1), Interval(-100, 100), X, Interval(-100, 100)).ApproxEquals(X));
}

TEST(PreSet, UnstableScalar) {
  const LtiSystem sys = Scalar(2, 1);
  const Polytope pre = PreSet(sys, Interval(-1, 1), Interval(-5, 5), Interval(-1, 1));
  EXPECT_TRUE(pre.ApproxEquals(Interval(-1, 1)));
  // Gridded 1-D feasibility: some u ∈ [−1, 1] with |2x + u| ≤ 1.
  for (double x = -5.0; x <= 5.0; x += 0.01) {
    const bool feasible = std::abs(2 * x) <= 2.0 + 1e-12;
    if (std::abs(std::abs(x) - 1.0) < 1e-6) continue;
    EXPECT_EQ(pre.Contains(Vec({x})), feasible) << x;
  }
}

TEST(PreSet, SamplingLpSoundness) {
  const LtiSystem sys = testing::UgvSystem();
  const Polytope X = testing::UgvStateSet();
  const Polytope U = testing::UgvInputSet();
  const Polytope T = Polytope::SymmetricBox(Vec({2, 1, 0.2}));
  const Polytope pre = PreSet(sys, T, X, U);

  // u-feasibility LP for fixed x: T(Ax + Bu) ≤ t, u ∈ U.
  Eigen::MatrixXd Au(T.num_facets() + U.num_facets(), 2);
  Au << T.normals() * sys.B(), U.normals();
  auto reachable = [&](const Eigen::VectorXd& x) {
    Eigen::VectorXd bu(Au.rows());
    bu << T.offsets() - T.normals() * sys.A() * x, U.offsets();
    return Feasible(Au, bu);
  };

  std::mt19937_64 rng(3);
  const Eigen::VectorXd lo = Vec({-3, -2, -0.5}), hi = -lo;
  int inside = 0, outside = 0;
  while (inside < 1000 || outside < 1000) {
    const Eigen::VectorXd x = testing::Uniform(rng, lo, hi);
    const double v = testing::Violation(pre, x);
    if (std::abs(v) < 1e-6 || !X.Contains(x)) continue;
    if (v < 0 && inside < 1000) {
      EXPECT_TRUE(reachable(x)) << x.transpose();
      ++inside;
    } else if (v > 0 && outside < 1000) {
      EXPECT_FALSE(reachable(x)) << x.transpose();
      ++outside;
    }
  }
}

TEST(PreN, OneStepIsPreSet) {
  const LtiSystem sys = Scalar(1, 1);
  const Polytope X = Interval(-5, 5), U = Interval(-1, 1), T = Interval(-1, 1);
  EXPECT_TRUE(PreN(sys, T, X, U, 1).ApproxEquals(PreSet(sys, T, X, U)));
}

TEST(PreN, IntervalGrowsOnePerStep) {
  const Polytope pre = PreN(Scalar(1, 1), Interval(-1, 1), Interval(-5, 5), Interval(-1, 1), 3);
  EXPECT_TRUE(pre.ApproxEquals(Interval(-4, 4)));
  // Grid oracle: with three unit steps, |x| ≤ 4 reaches [−1, 1].
  for (double x = -5.0; x <= 5.0; x += 0.05) {
    if (std::abs(std::abs(x) - 4.0) < 1e-6) continue;
    EXPECT_EQ(pre.Contains(Vec({x})), std::abs(x) <= 4.0) << x;
  }
}

TEST(PreN, InvariantSetIsFixedPoint) {
  const LtiSystem sys(Mat(2, 2, {0.5, 0, 0, 0.5}), Eigen::MatrixXd::Identity(2, 2), 1.0);
  const Polytope X = UnitBox(2), U = UnitBox(2);
  for (int N : {1, 2, 5}) EXPECT_TRUE(PreN(sys, X, X, U, N).ApproxEquals(X)) << N;
}

TEST(PreN, RejectsZeroHorizon) {
  EXPECT_THROW(PreN(Scalar(1, 1), Interval(-1, 1), Interval(-5, 5), Interval(-1, 1), 0),
               std::invalid_argument);
}

TEST(PreN, SamplingLpSoundness) {
  // Two-step set checked through the lifted (x, u0, u1) feasibility LP.
  const LtiSystem sys = testing::UgvSystem();
  const Polytope X = testing::UgvStateSet(), U = testing::UgvInputSet();
  const Polytope T = Polytope::SymmetricBox(Vec({2, 1, 0.2}));
  const Polytope pre2 = PreN(sys, T, X, U, 2);
  const Eigen::MatrixXd& A = sys.A();
  const Eigen::MatrixXd& B = sys.B();
  auto reachable = [&](const Eigen::VectorXd& x) {
    const int fx = X.num_facets(), fu = U.num_facets(), ft = T.num_facets();
    Eigen::MatrixXd G = Eigen::MatrixXd::Zero(fx + 2 * fu + ft, 4);
    Eigen::VectorXd h(G.rows());
    G.block(0, 0, fx, 2) = X.normals() * B;
    h.head(fx) = X.offsets() - X.normals() * A * x;
    G.block(fx, 0, fu, 2) = U.normals();
    G.block(fx + fu, 2, fu, 2) = U.normals();
    h.segment(fx, fu) = U.offsets();
    h.segment(fx + fu, fu) = U.offsets();
    G.block(fx + 2 * fu, 0, ft, 2) = T.normals() * A * B;
    G.block(fx + 2 * fu, 2, ft, 2) = T.normals() * B;
    h.tail(ft) = T.offsets() - T.normals() * A * A * x;
    return Feasible(G, h);
  };
  std::mt19937_64 rng(5);
  const Eigen::VectorXd lo = Vec({-4, -4, -0.5}), hi = -lo;
  int inside = 0, outside = 0;
  while (inside < 1000 || outside < 1000) {
    const Eigen::VectorXd x = testing::Uniform(rng, lo, hi);
    const double v = testing::Violation(pre2, x);
    if (std::abs(v) < 1e-6 || !X.Contains(x)) continue;
    if (v < 0 && inside < 1000) {
      EXPECT_TRUE(reachable(x)) << x.transpose();
      ++inside;
    } else if (v > 0 && outside < 1000) {
      EXPECT_FALSE(reachable(x)) << x.transpose();
      ++outside;
    }
  }
}

TEST(MaxInvariantSet, DeadbeatKeepsAdmissibleSet) {
  const Polytope Xk = UnitBox(2);
  EXPECT_TRUE(MaxInvariantSet(Eigen::MatrixXd::Zero(2, 2), Xk).ApproxEquals(Xk));
}

TEST(MaxInvariantSet, ScalarContraction) {
  EXPECT_TRUE(MaxInvariantSet(Mat(1, 1, {0.5}), Interval(-1, 1)).ApproxEquals(Interval(-1, 1)));
}

TEST(MaxInvariantSet, RotationSampledBoundary) {
  const double a = std::numbers::pi / 6.0;
  const Eigen::MatrixXd Acl = 0.9 * Mat(2, 2, {std::cos(a), -std::sin(a), std::sin(a), std::cos(a)});
  const Polytope box = UnitBox(2);
  const Polytope omega = MaxInvariantSet(Acl, box);
  EXPECT_TRUE(omega.IsSubsetOf(box));
  EXPECT_TRUE(omega.ContainsOriginInInterior());

  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
  int boundary = 0;
  for (int i = 0; i < 10000; ++i) {
    const double t = angle(rng);
    const Eigen::VectorXd p = omega.SupportPoint(Vec({std::cos(t), std::sin(t)}));
    EXPECT_LE(testing::Violation(omega, Acl * p), 1e-7);
    ++boundary;
  }
  EXPECT_EQ(boundary, 10000);
  for (const auto& x : testing::SampleInside(omega, 1000, rng)) {
    EXPECT_LE(testing::Violation(omega, Acl * x), 1e-7);
  }
}

TEST(MaxInvariantSet, IsMaximal) {
  // Points of the box that leave it within a few steps must be excluded.
  const double a = std::numbers::pi / 6.0;
  const Eigen::MatrixXd Acl = 0.9 * Mat(2, 2, {std::cos(a), -std::sin(a), std::sin(a), std::cos(a)});
  const Polytope box = UnitBox(2);
  const Polytope omega = MaxInvariantSet(Acl, box);
  std::mt19937_64 rng(8);
  for (int i = 0; i < 2000; ++i) {
    const Eigen::VectorXd x = testing::Uniform(rng, Vec({-1, -1}), Vec({1, 1}));
    bool stays = true;
    Eigen::VectorXd y = x;
    for (int k = 0; k < 60 && stays; ++k) {
      stays = testing::Violation(box, y) <= 0;
      y = Acl * y;
    }
    const double v = testing::Violation(omega, x);
    if (std::abs(v) < 1e-6) continue;
    EXPECT_EQ(v < 0, stays) << x.transpose();
  }
}

TEST(MaxInvariantSet, RejectsUnstableMatrix) {
  EXPECT_THROW(MaxInvariantSet(Mat(1, 1, {1.5}), Interval(-1, 1)), std::invalid_argument);
}

TEST(NormBound, Examples) {
  EXPECT_NEAR(NormBound(UnitBox(3)), std::sqrt(3.0), 1e-12);
  EXPECT_NEAR(NormBound(Interval(-2, 2)), 2.0, 1e-12);
  const Polytope simplex(Mat(3, 2, {-1, 0, 0, -1, 1, 1}), Vec({0, 0, 1}));
  EXPECT_NEAR(NormBound(simplex), std::sqrt(2.0), 1e-12);
  EXPECT_THROW(NormBound(Polytope(Mat(1, 1, {1}), Vec({1}))), std::domain_error);
}

TEST(NormBound, BoundsSampledPoints) {
  const Polytope p(Mat(5, 3, {1, 1, 0, -1, 2, 0, 0, -1, 1, 0, 0, -1, 1, -1, 1}), Vec({3, 2, 1, 2, 4}));
  ASSERT_TRUE(p.IsBounded());
  const double bound = NormBound(p);
  std::mt19937_64 rng(4);
  for (const auto& x : testing::SampleInside(p, 10000, rng)) EXPECT_LE(x.norm(), bound + 1e-12);
}

TEST(Polytope, SupportAndContainment) {
  const Polytope box = UnitBox(2);
  EXPECT_NEAR(box.Support(Vec({1, 1})), 2.0, 1e-12);
  EXPECT_TRUE(box.Scaled(0.5).IsSubsetOf(box));
  EXPECT_FALSE(box.IsSubsetOf(box.Scaled(0.5)));
  EXPECT_TRUE(box.Translated(Vec({1, 0})).Contains(Vec({2, 0})));
  EXPECT_NEAR(box.InscribedRadiusAtOrigin(), 1.0, 1e-12);
}

}  // namespace
}  // namespace sdmpc
