#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sdmpc/lti.hpp"

namespace sdmpc {

/// Convex polyhedron {x : normals · x ≤ offsets} in H-representation.
///
/// Rows are scaled to unit Euclidean norm on construction and all-zero rows
/// are dropped (a zero row with a negative offset makes the set empty).
/// An empty set carries an explicit flag together with the canonical
/// infeasible pair e₁ᵀx ≤ -1, -e₁ᵀx ≤ -1, so it can never pass for a
/// nonempty set downstream.
class Polytope {
 public:
  Polytope() = default;
  Polytope(Eigen::MatrixXd normals, Eigen::VectorXd offsets);

  static Polytope Empty(int dim);
  static Polytope Box(const Eigen::VectorXd& lower, const Eigen::VectorXd& upper);
  /// {x : |xᵢ| ≤ half_widthᵢ}
  static Polytope SymmetricBox(const Eigen::VectorXd& half_width);

  int dim() const { return dim_; }
  int num_facets() const { return static_cast<int>(offsets_.size()); }
  const Eigen::MatrixXd& normals() const { return normals_; }
  const Eigen::VectorXd& offsets() const { return offsets_; }

  /// True when flagged empty by a prior operation. Use IsEmptyLp() to
  /// decide emptiness of an arbitrary inequality system.
  bool is_empty() const { return empty_; }
  bool IsEmptyLp() const;

  /// normals·x ≤ offsets + tol componentwise.
  bool Contains(const Eigen::VectorXd& x, double tol = 1e-9) const;

  Polytope Intersect(const Polytope& other) const;
  /// {s·x : x ∈ P} for s > 0.
  Polytope Scaled(double s) const;
  /// {x + v : x ∈ P}
  Polytope Translated(const Eigen::VectorXd& v) const;
  /// {y : M y ∈ P}
  Polytope Preimage(const Eigen::MatrixXd& M) const;

  /// Drops duplicate and LP-redundant facets; detects emptiness.
  Polytope Reduced(double tol = 1e-9) const;

  /// max dirᵀx over P. Throws when P is empty or unbounded in dir.
  double Support(const Eigen::VectorXd& dir) const;
  /// Maximizer of dirᵀx over P.
  Eigen::VectorXd SupportPoint(const Eigen::VectorXd& dir) const;

  /// Containment by support-function LPs: every facet of `other` bounds P.
  bool IsSubsetOf(const Polytope& other, double tol = 1e-7) const;
  /// Mutual containment.
  bool ApproxEquals(const Polytope& other, double tol = 1e-7) const;

  /// Radius of the largest origin-centred ball inside P (min facet offset,
  /// valid since rows are unit norm). Negative if the origin is outside.
  double InscribedRadiusAtOrigin() const;
  bool ContainsOriginInInterior(double tol = 1e-9) const;
  bool IsBounded() const;

  /// Coordinate-wise bounding box as (lower, upper); 2·dim LPs.
  std::pair<Eigen::VectorXd, Eigen::VectorXd> BoundingBox() const;

 private:
  Eigen::MatrixXd normals_;
  Eigen::VectorXd offsets_;
  int dim_ = 0;
  bool empty_ = false;
};

/// Orthogonal projection onto `keep_dims` (0-based, strictly increasing) by
/// Fourier–Motzkin elimination with LP redundancy removal after each pass.
Polytope Project(const Polytope& P, const std::vector<int>& keep_dims);

/// {x ∈ X : ∃u ∈ U, A x + B u ∈ target}
Polytope PreSet(const LtiSystem& sys, const Polytope& target,
                const Polytope& X, const Polytope& U);

/// N-fold PreSet starting from X_f.
Polytope PreN(const LtiSystem& sys, const Polytope& X_f, const Polytope& X,
              const Polytope& U, int N);

/// Maximal positively invariant subset of X_k for x⁺ = A_cl x.
/// Throws std::runtime_error if the iteration does not converge within
/// max_iter passes (the message reports the last iterate's facet count).
Polytope MaxInvariantSet(const Eigen::MatrixXd& A_cl, const Polytope& X_k,
                         int max_iter = 200);

/// Upper bound on max ‖x‖₂ over P: norm of the bounding-box corner that is
/// farthest from the origin. Throws std::domain_error when P is unbounded.
double NormBound(const Polytope& P);

}  // namespace sdmpc
