#include "sdmpc/qp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace sdmpc {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Residuals {
  double primal = 0.0;
  double dual = 0.0;
};

Residuals ComputeResiduals(const QpProblem& p, const Eigen::VectorXd& z,
                           const Eigen::VectorXd& lambda, const Eigen::VectorXd& nu) {
  Residuals r;
  if (p.num_ineq() > 0) {
    r.primal = std::max(0.0, (p.G_ineq * z - p.h).maxCoeff());
  }
  if (p.num_eq() > 0) {
    r.primal = std::max(r.primal, (p.G_eq * z - p.b).lpNorm<Eigen::Infinity>());
  }
  Eigen::VectorXd grad = p.H * z + p.f;
  if (p.num_ineq() > 0) grad += p.G_ineq.transpose() * lambda;
  if (p.num_eq() > 0) grad += p.G_eq.transpose() * nu;
  r.dual = grad.lpNorm<Eigen::Infinity>();
  return r;
}

// Goldfarb–Idnani working storage. Constraint normals use the solver's
// native orientation nᵀz ≥ c: an inequality Gᵢz ≤ hᵢ becomes (−Gᵢ)z ≥ −hᵢ.
class DualActiveSet {
 public:
  DualActiveSet(const QpProblem& p, const QpSettings& s)
      : p_(p),
        settings_(s),
        n_(p.size()),
        me_(p.num_eq()),
        mi_(p.num_ineq()),
        R_(Eigen::MatrixXd::Zero(n_, n_)),
        d_(n_),
        z_(n_),
        r_(n_),
        u_(Eigen::VectorXd::Zero(n_ + 1)),
        active_(n_ + 1, 0) {}

  QpSolution Run() {
    QpSolution out;
    Eigen::LLT<Eigen::MatrixXd> llt(p_.H);
    const Eigen::MatrixXd Linv =
        llt.matrixL().solve(Eigen::MatrixXd::Identity(n_, n_));
    J_ = Linv.transpose();
    x_ = -llt.solve(p_.f);

    if (me_ > n_) {
      out.status = QpStatus::kInfeasible;
      return Finish(out);
    }
    for (int i = 0; i < me_; ++i) {
      const Eigen::VectorXd np = p_.G_eq.row(i).transpose();
      ComputeD(np);
      UpdateZ();
      UpdateR();
      double t2 = 0.0;
      if (z_.squaredNorm() > kEps) t2 = (p_.b[i] - np.dot(x_)) / z_.dot(np);
      x_ += t2 * z_;
      u_[iq_] = t2;
      u_.head(iq_) -= t2 * r_.head(iq_);
      active_[iq_] = -i - 1;
      if (!AddConstraint()) {
        // Dependent equality rows: treat as infeasible unless consistent.
        out.status = QpStatus::kInfeasible;
        return Finish(out);
      }
    }

    viol_tol_.resize(mi_);
    for (int i = 0; i < mi_; ++i) {
      viol_tol_[i] = std::max(1e-12, 1e-3 * settings_.eps_abs) * (1.0 + std::abs(p_.h[i]));
    }
    std::vector<int> iai(mi_);
    std::vector<char> allowed(mi_, 1);
    Eigen::VectorXd slack(mi_);

    int iter = 0;
    while (true) {
      if (++iter > settings_.max_iter) {
        out.status = QpStatus::kMaxIter;
        out.iterations = iter - 1;
        return Finish(out);
      }
      for (int i = 0; i < mi_; ++i) iai[i] = i;
      for (int k = me_; k < iq_; ++k) iai[active_[k]] = -1;
      for (int i = 0; i < mi_; ++i) slack[i] = Slack(i);
      const Eigen::VectorXd x_old = x_;
      const Eigen::VectorXd u_old = u_;
      const std::vector<int> active_old = active_;

      bool restart = false;
      while (!restart) {
        int ip = -1;
        double most_violated = 0.0;
        for (int i = 0; i < mi_; ++i) {
          if (iai[i] != -1 && allowed[i] && slack[i] < -viol_tol_[i] &&
              slack[i] < most_violated) {
            most_violated = slack[i];
            ip = i;
          }
        }
        if (ip < 0) {
          out.status = QpStatus::kOptimal;
          out.iterations = iter;
          return Finish(out);
        }
        const Eigen::VectorXd np = -p_.G_ineq.row(ip).transpose();
        u_[iq_] = 0.0;
        active_[iq_] = ip;

        while (true) {
          ComputeD(np);
          UpdateZ();
          UpdateR();
          double t1 = kInf;
          int drop = -1;
          for (int k = me_; k < iq_; ++k) {
            if (r_[k] > 0.0 && u_[k] / r_[k] < t1) {
              t1 = u_[k] / r_[k];
              drop = active_[k];
            }
          }
          double t2 = kInf;
          if (z_.squaredNorm() > kEps) t2 = -slack[ip] / z_.dot(np);
          const double t = std::min(t1, t2);
          if (t >= kInf) {
            out.status = QpStatus::kInfeasible;
            out.iterations = iter;
            return Finish(out);
          }
          if (t2 >= kInf) {
            // Dual step only: the new normal is spanned by the working set.
            u_.head(iq_) -= t * r_.head(iq_);
            u_[iq_] += t;
            iai[drop] = drop;
            DeleteConstraint(drop);
            continue;
          }
          x_ += t * z_;
          u_.head(iq_) -= t * r_.head(iq_);
          u_[iq_] += t;
          if (t == t2) {
            if (!AddConstraint()) {
              allowed[ip] = 0;
              DeleteConstraint(ip);
              for (int i = 0; i < mi_; ++i) iai[i] = i;
              for (int k = me_; k < iq_; ++k) {
                active_[k] = active_old[k];
                u_[k] = u_old[k];
                iai[active_[k]] = -1;
              }
              x_ = x_old;
              break;
            }
            iai[ip] = -1;
            restart = true;
            break;
          }
          iai[drop] = drop;
          DeleteConstraint(drop);
          slack[ip] = Slack(ip);
        }
      }
    }
  }

 private:
  static constexpr double kEps = std::numeric_limits<double>::epsilon();

  double Slack(int i) const { return p_.h[i] - p_.G_ineq.row(i).dot(x_); }

  void ComputeD(const Eigen::VectorXd& np) { d_.noalias() = J_.transpose() * np; }

  void UpdateZ() {
    z_.noalias() = J_.rightCols(n_ - iq_) * d_.tail(n_ - iq_);
  }

  void UpdateR() {
    for (int i = iq_ - 1; i >= 0; --i) {
      double sum = d_[i];
      for (int j = i + 1; j < iq_; ++j) sum -= R_(i, j) * r_[j];
      r_[i] = sum / R_(i, i);
    }
  }

  bool AddConstraint() {
    for (int j = n_ - 1; j >= iq_ + 1; --j) {
      double cc = d_[j - 1];
      double ss = d_[j];
      const double h = std::hypot(cc, ss);
      if (h == 0.0) continue;
      d_[j] = 0.0;
      ss /= h;
      cc /= h;
      if (cc < 0.0) {
        cc = -cc;
        ss = -ss;
        d_[j - 1] = -h;
      } else {
        d_[j - 1] = h;
      }
      const double xny = ss / (1.0 + cc);
      for (int k = 0; k < n_; ++k) {
        const double t1 = J_(k, j - 1);
        const double t2 = J_(k, j);
        J_(k, j - 1) = t1 * cc + t2 * ss;
        J_(k, j) = xny * (t1 + J_(k, j - 1)) - t2;
      }
    }
    ++iq_;
    for (int i = 0; i < iq_; ++i) R_(i, iq_ - 1) = d_[i];
    if (std::abs(d_[iq_ - 1]) <= kEps * r_norm_) return false;
    r_norm_ = std::max(r_norm_, std::abs(d_[iq_ - 1]));
    return true;
  }

  void DeleteConstraint(int constraint) {
    int qq = -1;
    for (int i = me_; i < iq_; ++i) {
      if (active_[i] == constraint) {
        qq = i;
        break;
      }
    }
    if (qq < 0) throw std::logic_error("qp: constraint to drop is not in the working set");
    for (int i = qq; i < iq_ - 1; ++i) {
      active_[i] = active_[i + 1];
      u_[i] = u_[i + 1];
      R_.col(i) = R_.col(i + 1);
    }
    active_[iq_ - 1] = active_[iq_];
    u_[iq_ - 1] = u_[iq_];
    active_[iq_] = 0;
    u_[iq_] = 0.0;
    for (int j = 0; j < iq_; ++j) R_(j, iq_ - 1) = 0.0;
    --iq_;
    if (iq_ == 0) return;
    for (int j = qq; j < iq_; ++j) {
      double cc = R_(j, j);
      double ss = R_(j + 1, j);
      const double h = std::hypot(cc, ss);
      if (h == 0.0) continue;
      cc /= h;
      ss /= h;
      R_(j + 1, j) = 0.0;
      if (cc < 0.0) {
        R_(j, j) = -h;
        cc = -cc;
        ss = -ss;
      } else {
        R_(j, j) = h;
      }
      const double xny = ss / (1.0 + cc);
      for (int k = j + 1; k < iq_; ++k) {
        const double t1 = R_(j, k);
        const double t2 = R_(j + 1, k);
        R_(j, k) = t1 * cc + t2 * ss;
        R_(j + 1, k) = xny * (t1 + R_(j, k)) - t2;
      }
      for (int k = 0; k < n_; ++k) {
        const double t1 = J_(k, j);
        const double t2 = J_(k, j + 1);
        J_(k, j) = t1 * cc + t2 * ss;
        J_(k, j + 1) = xny * (J_(k, j) + t1) - t2;
      }
    }
  }

  QpSolution& Finish(QpSolution& out) {
    out.z_star = x_;
    out.ineq_multipliers = Eigen::VectorXd::Zero(mi_);
    out.eq_multipliers = Eigen::VectorXd::Zero(me_);
    for (int k = 0; k < iq_; ++k) {
      if (active_[k] < 0) {
        out.eq_multipliers[-active_[k] - 1] = -u_[k];
      } else {
        out.ineq_multipliers[active_[k]] = u_[k];
      }
    }
    if (out.status == QpStatus::kOptimal) Polish(out);
    const Residuals res = ComputeResiduals(p_, out.z_star, out.ineq_multipliers, out.eq_multipliers);
    out.primal_residual = res.primal;
    out.dual_residual = res.dual;
    out.objective = p_.Objective(out.z_star);
    if (out.status == QpStatus::kOptimal &&
        (res.primal > settings_.eps_abs || res.dual > settings_.eps_abs)) {
      out.status = QpStatus::kMaxIter;
    }
    return out;
  }

  // Re-solves the equality-constrained KKT system on the final working set
  // and keeps the result when it does not degrade the residuals.
  void Polish(QpSolution& out) const {
    std::vector<int> ineq_rows;
    for (int k = 0; k < iq_; ++k) {
      if (active_[k] >= 0) ineq_rows.push_back(active_[k]);
    }
    const int na = static_cast<int>(ineq_rows.size());
    const int rows = me_ + na;
    if (rows == 0) return;
    Eigen::MatrixXd C(rows, n_);
    Eigen::VectorXd c(rows);
    if (me_ > 0) {
      C.topRows(me_) = p_.G_eq;
      c.head(me_) = p_.b;
    }
    for (int k = 0; k < na; ++k) {
      C.row(me_ + k) = p_.G_ineq.row(ineq_rows[k]);
      c[me_ + k] = p_.h[ineq_rows[k]];
    }
    Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(n_ + rows, n_ + rows);
    kkt.topLeftCorner(n_, n_) = p_.H;
    kkt.topRightCorner(n_, rows) = C.transpose();
    kkt.bottomLeftCorner(rows, n_) = C;
    Eigen::VectorXd rhs(n_ + rows);
    rhs << -p_.f, c;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(kkt);
    if (lu.rank() < n_ + rows) return;
    const Eigen::VectorXd sol = lu.solve(rhs);
    Eigen::VectorXd lambda = Eigen::VectorXd::Zero(mi_);
    for (int k = 0; k < na; ++k) {
      const double value = sol[n_ + me_ + k];
      if (value < -1e-10) return;
      lambda[ineq_rows[k]] = std::max(0.0, value);
    }
    const Eigen::VectorXd z = sol.head(n_);
    const Eigen::VectorXd nu = sol.segment(n_, me_);
    const Residuals before = ComputeResiduals(p_, out.z_star, out.ineq_multipliers, out.eq_multipliers);
    const Residuals after = ComputeResiduals(p_, z, lambda, nu);
    if (std::max(after.primal, after.dual) <= std::max(before.primal, before.dual)) {
      out.z_star = z;
      out.ineq_multipliers = lambda;
      out.eq_multipliers = nu;
    }
  }

  const QpProblem& p_;
  QpSettings settings_;
  int n_;
  int me_;
  int mi_;
  int iq_ = 0;
  double r_norm_ = 1.0;
  Eigen::MatrixXd J_;
  Eigen::MatrixXd R_;
  Eigen::VectorXd d_;
  Eigen::VectorXd z_;
  Eigen::VectorXd r_;
  Eigen::VectorXd u_;
  Eigen::VectorXd x_;
  std::vector<int> active_;
  std::vector<double> viol_tol_;
};

}  // namespace

QpProblem::QpProblem(Eigen::MatrixXd H_, Eigen::VectorXd f_, Eigen::MatrixXd G_ineq_,
                     Eigen::VectorXd h_, Eigen::MatrixXd G_eq_, Eigen::VectorXd b_)
    : H(std::move(H_)),
      f(std::move(f_)),
      G_ineq(std::move(G_ineq_)),
      h(std::move(h_)),
      G_eq(std::move(G_eq_)),
      b(std::move(b_)) {
  const Eigen::Index s = H.rows();
  if (G_ineq.size() == 0) G_ineq.resize(0, s);
  if (G_eq.size() == 0) G_eq.resize(0, s);
  Validate();
}

void QpProblem::Validate() const {
  const Eigen::Index s = H.rows();
  if (s == 0 || H.cols() != s || f.size() != s) {
    throw std::invalid_argument("QpProblem: H must be s×s with s > 0 and f of length s");
  }
  if (G_ineq.cols() != s || G_ineq.rows() != h.size()) {
    throw std::invalid_argument("QpProblem: inequality block has inconsistent shape");
  }
  if (G_eq.cols() != s || G_eq.rows() != b.size()) {
    throw std::invalid_argument("QpProblem: equality block has inconsistent shape");
  }
  if (!H.isApprox(H.transpose(), 1e-10) && (H - H.transpose()).norm() > 1e-12) {
    throw std::invalid_argument("QpProblem: H must be symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H, Eigen::EigenvaluesOnly);
  if (!(es.eigenvalues()[0] > 1e-10)) {
    throw std::invalid_argument("QpProblem: H must be positive definite");
  }
}

const char* ToString(QpStatus status) {
  switch (status) {
    case QpStatus::kOptimal:
      return "optimal";
    case QpStatus::kInfeasible:
      return "infeasible";
    case QpStatus::kMaxIter:
      return "max_iter";
  }
  return "unknown";
}

QpSolution Solve(const QpProblem& problem, const QpSettings& settings) {
  problem.Validate();
  DualActiveSet solver(problem, settings);
  return solver.Run();
}

KktReport EvaluateKkt(const QpProblem& p, const Eigen::VectorXd& z, double tol) {
  if (z.size() != p.size()) throw std::invalid_argument("EvaluateKkt: dimension mismatch");
  KktReport report;
  const Eigen::VectorXd grad = p.H * z + p.f;

  std::vector<int> active;
  for (int i = 0; i < p.num_ineq(); ++i) {
    const double slack = p.h[i] - p.G_ineq.row(i).dot(z);
    const double scale = 1.0 + std::abs(p.h[i]);
    report.primal_violation = std::max(report.primal_violation, -slack / scale);
    if (slack <= 10.0 * tol * scale) active.push_back(i);
  }
  for (int i = 0; i < p.num_eq(); ++i) {
    const double r = std::abs(p.G_eq.row(i).dot(z) - p.b[i]) / (1.0 + std::abs(p.b[i]));
    report.primal_violation = std::max(report.primal_violation, r);
  }
  report.num_active = static_cast<int>(active.size());

  const int k = static_cast<int>(active.size()) + p.num_eq();
  Eigen::VectorXd residual = grad;
  Eigen::VectorXd multipliers;
  if (k > 0) {
    Eigen::MatrixXd M(p.size(), k);
    for (size_t j = 0; j < active.size(); ++j) M.col(j) = p.G_ineq.row(active[j]).transpose();
    if (p.num_eq() > 0) M.rightCols(p.num_eq()) = p.G_eq.transpose();
    multipliers = M.completeOrthogonalDecomposition().solve(-grad);
    residual = grad + M * multipliers;
  }
  report.stationarity = residual.lpNorm<Eigen::Infinity>() / (1.0 + p.f.lpNorm<Eigen::Infinity>());
  report.min_multiplier = 0.0;
  for (size_t j = 0; j < active.size(); ++j) {
    const double lambda = multipliers[j];
    report.min_multiplier = std::min(report.min_multiplier, lambda);
    const double slack = p.h[active[j]] - p.G_ineq.row(active[j]).dot(z);
    report.complementarity = std::max(report.complementarity, std::abs(lambda * slack));
  }
  report.ok = report.stationarity <= tol && report.primal_violation <= tol &&
              report.min_multiplier >= -tol && report.complementarity <= tol;
  return report;
}

}  // namespace sdmpc
