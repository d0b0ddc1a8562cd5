#pragma once

#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sdmpc/io.hpp"
#include "sdmpc/lti.hpp"
#include "sdmpc/polytope.hpp"
#include "sdmpc/synthesis.hpp"

namespace sdmpc::testing {

inline Eigen::MatrixXd Mat(int rows, int cols, std::initializer_list<double> values) {
  Eigen::MatrixXd M(rows, cols);
  auto it = values.begin();
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) M(i, j) = *it++;
  return M;
}

inline Eigen::VectorXd Vec(std::initializer_list<double> values) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double x : values) v(i++) = x;
  return v;
}

inline LtiSystem UgvSystem() {
  return LtiSystem(Mat(3, 3, {1, 0, 0, 0, 1, 0.5, 0, 0, 1}), Mat(3, 2, {0.1, 0, 0, 0, 0, 0.1}), 0.1);
}

inline Polytope UgvStateSet() { return Polytope::SymmetricBox(Vec({20, 5, 0.5})); }
inline Polytope UgvInputSet() { return Polytope::SymmetricBox(Vec({3, 1})); }

/// Shipped weights: Q = I, R = 0.1·I, q_e = 1, N = 10, xbar_scale = 0.5.
inline const SynthesisResult& UgvSynthesis() {
  static const SynthesisResult syn =
      Synthesize(UgvSystem(), UgvStateSet(), UgvInputSet(), Eigen::MatrixXd::Identity(3, 3),
                 0.1 * Eigen::MatrixXd::Identity(2, 2), 1.0);
  return syn;
}

inline std::string ShippedConfigPath() { return std::string(SDMPC_SOURCE_DIR) + "/configs/ugv_formation.json"; }

inline Eigen::VectorXd Uniform(std::mt19937_64& rng, const Eigen::VectorXd& lo, const Eigen::VectorXd& hi) {
  Eigen::VectorXd x(lo.size());
  for (Eigen::Index i = 0; i < lo.size(); ++i) x(i) = std::uniform_real_distribution<double>(lo(i), hi(i))(rng);
  return x;
}

/// Uniform samples in P by rejection from its bounding box.
inline std::vector<Eigen::VectorXd> SampleInside(const Polytope& P, int count, std::mt19937_64& rng) {
  const auto [lo, hi] = P.BoundingBox();
  std::vector<Eigen::VectorXd> out;
  while (static_cast<int>(out.size()) < count) {
    Eigen::VectorXd x = Uniform(rng, lo, hi);
    if (P.Contains(x)) out.push_back(x);
  }
  return out;
}

/// Largest normalized facet slack violation, positive outside the set.
inline double Violation(const Polytope& P, const Eigen::VectorXd& x) {
  return (P.normals() * x - P.offsets()).maxCoeff();
}

}  // namespace sdmpc::testing
