#include "sdmpc/polytope.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "sdmpc/lp.hpp"

namespace sdmpc {
namespace {

constexpr double kZeroRowTol = 1e-12;
constexpr double kDuplicateTol = 1e-10;

Eigen::MatrixXd SelectRows(const Eigen::MatrixXd& M, const std::vector<int>& idx) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(idx.size()), M.cols());
  for (size_t i = 0; i < idx.size(); ++i) out.row(i) = M.row(idx[i]);
  return out;
}

Eigen::VectorXd SelectEntries(const Eigen::VectorXd& v, const std::vector<int>& idx) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(idx.size()));
  for (size_t i = 0; i < idx.size(); ++i) out[i] = v[idx[i]];
  return out;
}

// Eliminates coordinate `col` from {x : A x ≤ b}.
std::pair<Eigen::MatrixXd, Eigen::VectorXd> FourierMotzkinStep(
    const Eigen::MatrixXd& A, const Eigen::VectorXd& b, int col) {
  std::vector<int> pos, neg, zero;
  for (Eigen::Index i = 0; i < A.rows(); ++i) {
    const double a = A(i, col);
    if (a > kZeroRowTol) {
      pos.push_back(static_cast<int>(i));
    } else if (a < -kZeroRowTol) {
      neg.push_back(static_cast<int>(i));
    } else {
      zero.push_back(static_cast<int>(i));
    }
  }
  const Eigen::Index d = A.cols();
  const Eigen::Index rows =
      static_cast<Eigen::Index>(zero.size() + pos.size() * neg.size());
  Eigen::MatrixXd full(rows, d);
  Eigen::VectorXd rhs(rows);
  Eigen::Index r = 0;
  for (int i : zero) {
    full.row(r) = A.row(i);
    rhs[r++] = b[i];
  }
  for (int p : pos) {
    for (int q : neg) {
      const double wp = -A(q, col);
      const double wq = A(p, col);
      full.row(r) = wp * A.row(p) + wq * A.row(q);
      rhs[r++] = wp * b[p] + wq * b[q];
    }
  }
  Eigen::MatrixXd out(rows, d - 1);
  out.leftCols(col) = full.leftCols(col);
  out.rightCols(d - 1 - col) = full.rightCols(d - 1 - col);
  return {out, rhs};
}

}  // namespace

Polytope::Polytope(Eigen::MatrixXd normals, Eigen::VectorXd offsets)
    : dim_(static_cast<int>(normals.cols())) {
  if (normals.rows() != offsets.size()) {
    throw std::invalid_argument("Polytope: normals and offsets row mismatch");
  }
  if (dim_ <= 0) throw std::invalid_argument("Polytope: dimension must be positive");
  std::vector<int> keep;
  for (Eigen::Index i = 0; i < normals.rows(); ++i) {
    const double norm = normals.row(i).norm();
    if (!std::isfinite(norm) || !std::isfinite(offsets[i])) {
      throw std::invalid_argument("Polytope: non-finite data");
    }
    if (norm <= kZeroRowTol) {
      if (offsets[i] < -kZeroRowTol) {
        *this = Empty(dim_);
        return;
      }
      continue;
    }
    normals.row(i) /= norm;
    offsets[i] /= norm;
    keep.push_back(static_cast<int>(i));
  }
  normals_ = SelectRows(normals, keep);
  offsets_ = SelectEntries(offsets, keep);
}

Polytope Polytope::Empty(int dim) {
  if (dim <= 0) throw std::invalid_argument("Polytope::Empty: dimension must be positive");
  Polytope p;
  p.dim_ = dim;
  p.empty_ = true;
  p.normals_ = Eigen::MatrixXd::Zero(2, dim);
  p.normals_(0, 0) = 1.0;
  p.normals_(1, 0) = -1.0;
  p.offsets_ = Eigen::VectorXd::Constant(2, -1.0);
  return p;
}

Polytope Polytope::Box(const Eigen::VectorXd& lower, const Eigen::VectorXd& upper) {
  const Eigen::Index n = lower.size();
  if (upper.size() != n) throw std::invalid_argument("Polytope::Box: size mismatch");
  Eigen::MatrixXd A(2 * n, n);
  A << Eigen::MatrixXd::Identity(n, n), -Eigen::MatrixXd::Identity(n, n);
  Eigen::VectorXd b(2 * n);
  b << upper, -lower;
  return Polytope(A, b);
}

Polytope Polytope::SymmetricBox(const Eigen::VectorXd& half_width) {
  return Box(-half_width, half_width);
}

bool Polytope::IsEmptyLp() const {
  if (empty_) return true;
  return lp::FeasibilityMargin(normals_, offsets_).margin < -1e-9;
}

bool Polytope::Contains(const Eigen::VectorXd& x, double tol) const {
  if (x.size() != dim_) {
    throw std::invalid_argument("Polytope::Contains: dimension mismatch");
  }
  if (empty_) return false;
  if (offsets_.size() == 0) return true;
  return ((normals_ * x - offsets_).array() <= tol).all();
}

Polytope Polytope::Intersect(const Polytope& other) const {
  if (other.dim_ != dim_) throw std::invalid_argument("Polytope::Intersect: dimension mismatch");
  if (empty_ || other.empty_) return Empty(dim_);
  Eigen::MatrixXd A(num_facets() + other.num_facets(), dim_);
  A << normals_, other.normals_;
  Eigen::VectorXd b(A.rows());
  b << offsets_, other.offsets_;
  return Polytope(A, b);
}

Polytope Polytope::Scaled(double s) const {
  if (!(s > 0.0)) throw std::invalid_argument("Polytope::Scaled: scale must be positive");
  if (empty_) return *this;
  Polytope p = *this;
  p.offsets_ *= s;
  return p;
}

Polytope Polytope::Translated(const Eigen::VectorXd& v) const {
  if (v.size() != dim_) throw std::invalid_argument("Polytope::Translated: dimension mismatch");
  if (empty_) return *this;
  Polytope p = *this;
  p.offsets_ += normals_ * v;
  return p;
}

Polytope Polytope::Preimage(const Eigen::MatrixXd& M) const {
  if (M.rows() != dim_) throw std::invalid_argument("Polytope::Preimage: dimension mismatch");
  if (empty_) return Empty(static_cast<int>(M.cols()));
  return Polytope(normals_ * M, offsets_);
}

Polytope Polytope::Reduced(double tol) const {
  if (empty_) return *this;
  const int p = num_facets();
  if (p == 0) return *this;

  // Parallel duplicates: keep the tightest offset.
  std::vector<int> unique;
  Eigen::VectorXd b = offsets_;
  for (int i = 0; i < p; ++i) {
    bool duplicate = false;
    for (int j : unique) {
      if ((normals_.row(i) - normals_.row(j)).lpNorm<Eigen::Infinity>() < kDuplicateTol) {
        b[j] = std::min(b[j], b[i]);
        duplicate = true;
        break;
      }
    }
    if (!duplicate) unique.push_back(i);
  }
  Eigen::MatrixXd A = SelectRows(normals_, unique);
  b = SelectEntries(b, unique);

  if (lp::FeasibilityMargin(A, b).margin < -tol) return Empty(dim_);

  const int q = static_cast<int>(unique.size());
  std::vector<bool> active(q, true);
  for (int i = 0; i < q; ++i) {
    std::vector<int> rows;
    rows.reserve(q);
    for (int j = 0; j < q; ++j) {
      if (j != i && active[j]) rows.push_back(j);
    }
    rows.push_back(i);
    Eigen::MatrixXd Ai = SelectRows(A, rows);
    Eigen::VectorXd bi = SelectEntries(b, rows);
    bi[bi.size() - 1] += 1.0;
    const lp::LpResult res = lp::Maximize(A.row(i).transpose(), Ai, bi);
    if (res.status == lp::LpStatus::kOptimal && res.value <= b[i] + tol) {
      active[i] = false;
    }
  }
  std::vector<int> kept;
  for (int i = 0; i < q; ++i) {
    if (active[i]) kept.push_back(i);
  }
  Polytope out;
  out.dim_ = dim_;
  out.normals_ = SelectRows(A, kept);
  out.offsets_ = SelectEntries(b, kept);
  return out;
}

double Polytope::Support(const Eigen::VectorXd& dir) const {
  if (dir.size() != dim_) throw std::invalid_argument("Polytope::Support: dimension mismatch");
  if (empty_) throw std::domain_error("Polytope::Support: empty polytope");
  const lp::LpResult res = lp::Maximize(dir, normals_, offsets_);
  if (res.status != lp::LpStatus::kOptimal) {
    throw std::domain_error(std::string("Polytope::Support: LP ") + lp::ToString(res.status));
  }
  return res.value;
}

Eigen::VectorXd Polytope::SupportPoint(const Eigen::VectorXd& dir) const {
  if (dir.size() != dim_) throw std::invalid_argument("Polytope::SupportPoint: dimension mismatch");
  if (empty_) throw std::domain_error("Polytope::SupportPoint: empty polytope");
  const lp::LpResult res = lp::Maximize(dir, normals_, offsets_);
  if (res.status != lp::LpStatus::kOptimal) {
    throw std::domain_error(std::string("Polytope::SupportPoint: LP ") + lp::ToString(res.status));
  }
  return res.x;
}

bool Polytope::IsSubsetOf(const Polytope& other, double tol) const {
  if (other.dim_ != dim_) throw std::invalid_argument("Polytope::IsSubsetOf: dimension mismatch");
  if (IsEmptyLp()) return true;
  if (other.empty_) return false;
  for (int i = 0; i < other.num_facets(); ++i) {
    const lp::LpResult res =
        lp::Maximize(other.normals_.row(i).transpose(), normals_, offsets_);
    if (res.status != lp::LpStatus::kOptimal) return false;
    if (res.value > other.offsets_[i] + tol) return false;
  }
  return true;
}

bool Polytope::ApproxEquals(const Polytope& other, double tol) const {
  return IsSubsetOf(other, tol) && other.IsSubsetOf(*this, tol);
}

double Polytope::InscribedRadiusAtOrigin() const {
  if (empty_) return -std::numeric_limits<double>::infinity();
  if (offsets_.size() == 0) return std::numeric_limits<double>::infinity();
  return offsets_.minCoeff();
}

bool Polytope::ContainsOriginInInterior(double tol) const {
  return InscribedRadiusAtOrigin() > tol;
}

bool Polytope::IsBounded() const {
  if (empty_) return true;
  for (int k = 0; k < dim_; ++k) {
    for (double sign : {1.0, -1.0}) {
      Eigen::VectorXd dir = Eigen::VectorXd::Zero(dim_);
      dir[k] = sign;
      if (lp::Maximize(dir, normals_, offsets_).status == lp::LpStatus::kUnbounded) {
        return false;
      }
    }
  }
  return true;
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> Polytope::BoundingBox() const {
  if (empty_) throw std::domain_error("Polytope::BoundingBox: empty polytope");
  Eigen::VectorXd lower(dim_), upper(dim_);
  for (int k = 0; k < dim_; ++k) {
    Eigen::VectorXd dir = Eigen::VectorXd::Zero(dim_);
    dir[k] = 1.0;
    const lp::LpResult hi = lp::Maximize(dir, normals_, offsets_);
    const lp::LpResult lo = lp::Maximize(-dir, normals_, offsets_);
    if (hi.status == lp::LpStatus::kUnbounded || lo.status == lp::LpStatus::kUnbounded) {
      throw std::domain_error("Polytope::BoundingBox: unbounded polytope");
    }
    if (hi.status != lp::LpStatus::kOptimal || lo.status != lp::LpStatus::kOptimal) {
      throw std::domain_error("Polytope::BoundingBox: empty polytope");
    }
    upper[k] = hi.value;
    lower[k] = -lo.value;
  }
  return {lower, upper};
}

Polytope Project(const Polytope& P, const std::vector<int>& keep_dims) {
  const int d = P.dim();
  if (keep_dims.empty() || static_cast<int>(keep_dims.size()) >= d) {
    throw std::invalid_argument("Project: keep_dims must be a nonempty strict subset");
  }
  for (size_t i = 0; i < keep_dims.size(); ++i) {
    if (keep_dims[i] < 0 || keep_dims[i] >= d || (i > 0 && keep_dims[i] <= keep_dims[i - 1])) {
      throw std::invalid_argument("Project: keep_dims must be increasing and in range");
    }
  }
  const int out_dim = static_cast<int>(keep_dims.size());
  Polytope current = P.Reduced();
  if (current.is_empty()) return Polytope::Empty(out_dim);

  // Eliminate from the highest index down so lower column indices stay put.
  std::vector<bool> keep(d, false);
  for (int k : keep_dims) keep[k] = true;
  for (int col = d - 1; col >= 0; --col) {
    if (keep[col]) continue;
    auto [A, b] = FourierMotzkinStep(current.normals(), current.offsets(), col);
    if (A.rows() == 0) {
      Polytope unconstrained(Eigen::MatrixXd::Zero(0, A.cols()), Eigen::VectorXd::Zero(0));
      current = unconstrained;
      continue;
    }
    current = Polytope(A, b).Reduced();
    if (current.is_empty()) return Polytope::Empty(out_dim);
  }
  return current;
}

Polytope PreSet(const LtiSystem& sys, const Polytope& target, const Polytope& X,
                const Polytope& U) {
  const int n = sys.n();
  const int m = sys.m();
  if (target.dim() != n || X.dim() != n || U.dim() != m) {
    throw std::invalid_argument("PreSet: dimension mismatch");
  }
  if (target.is_empty() || X.is_empty() || U.is_empty()) return Polytope::Empty(n);
  const int rows = X.num_facets() + U.num_facets() + target.num_facets();
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(rows, n + m);
  Eigen::VectorXd b(rows);
  int r = 0;
  A.block(r, 0, X.num_facets(), n) = X.normals();
  b.segment(r, X.num_facets()) = X.offsets();
  r += X.num_facets();
  A.block(r, n, U.num_facets(), m) = U.normals();
  b.segment(r, U.num_facets()) = U.offsets();
  r += U.num_facets();
  A.block(r, 0, target.num_facets(), n) = target.normals() * sys.A();
  A.block(r, n, target.num_facets(), m) = target.normals() * sys.B();
  b.segment(r, target.num_facets()) = target.offsets();
  std::vector<int> keep(n);
  for (int i = 0; i < n; ++i) keep[i] = i;
  return Project(Polytope(A, b), keep);
}

Polytope PreN(const LtiSystem& sys, const Polytope& X_f, const Polytope& X,
              const Polytope& U, int N) {
  if (N < 1) throw std::invalid_argument("PreN: N must be at least 1");
  Polytope current = X_f;
  for (int k = 0; k < N; ++k) {
    current = PreSet(sys, current, X, U);
    if (current.is_empty()) return current;
  }
  return current;
}

Polytope MaxInvariantSet(const Eigen::MatrixXd& A_cl, const Polytope& X_k, int max_iter) {
  if (A_cl.rows() != X_k.dim() || A_cl.cols() != X_k.dim()) {
    throw std::invalid_argument("MaxInvariantSet: dimension mismatch");
  }
  if (!IsSchurStable(A_cl)) {
    throw std::invalid_argument("MaxInvariantSet: closed-loop matrix is not Schur stable");
  }
  Polytope omega = X_k.Reduced();
  for (int iter = 0; iter < max_iter; ++iter) {
    if (omega.is_empty()) return omega;
    const Polytope pre = omega.Preimage(A_cl);
    if (omega.IsSubsetOf(pre, 1e-9)) return omega;
    omega = omega.Intersect(pre).Reduced();
  }
  std::ostringstream msg;
  msg << "MaxInvariantSet: no convergence after " << max_iter
      << " iterations (last iterate has " << omega.num_facets() << " facets)";
  throw std::runtime_error(msg.str());
}

double NormBound(const Polytope& P) {
  const auto [lower, upper] = P.BoundingBox();
  return lower.cwiseAbs().cwiseMax(upper.cwiseAbs()).norm();
}

}  // namespace sdmpc
