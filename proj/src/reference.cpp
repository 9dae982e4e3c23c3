#include "shcgm/reference.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace shcgm {
namespace reference {

namespace {

double offdiag_norm(const Eigen::MatrixXd& a) {
  double s = 0.0;
  for (Eigen::Index j = 0; j < a.cols(); ++j)
    for (Eigen::Index i = 0; i < a.rows(); ++i)
      if (i != j) s += a(i, j) * a(i, j);
  return std::sqrt(s);
}

}  // namespace

JacobiResult jacobi_eigendecomposition(Eigen::MatrixXd a, double tol, int max_sweeps) {
  require(a.rows() == a.cols() && a.rows() > 0, "jacobi: matrix not square");
  require(a.rows() <= 200, "jacobi: dimension above the dense reference limit");
  a = 0.5 * (a + a.transpose().eval());
  const Eigen::Index n = a.rows();
  const double fro = std::max(a.norm(), 1e-300);

  JacobiResult out;
  out.vectors = Eigen::MatrixXd::Identity(n, n);

  for (int sweep = 1; sweep <= max_sweeps; ++sweep) {
    out.sweeps = sweep;
    if (offdiag_norm(a) <= tol * fro) break;
    for (Eigen::Index p = 0; p < n - 1; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        // Rotation angle that annihilates a(p,q); the stable tangent formula
        // keeps |t| <= 1.
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        // A <- J^T A J on rows/cols p and q.
        for (Eigen::Index k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double vkp = out.vectors(k, p);
          const double vkq = out.vectors(k, q);
          out.vectors(k, p) = c * vkp - s * vkq;
          out.vectors(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<Eigen::Index> order(static_cast<size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](Eigen::Index i, Eigen::Index j) { return a(i, i) < a(j, j); });
  out.values.resize(n);
  Eigen::MatrixXd sorted(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    out.values[k] = a(order[static_cast<size_t>(k)], order[static_cast<size_t>(k)]);
    sorted.col(k) = out.vectors.col(order[static_cast<size_t>(k)]);
  }
  out.vectors = std::move(sorted);
  return out;
}

LmoResult exact_lmo_dense(const Domain& domain, const DecisionVar& direction) {
  if (const auto* d = domain.as<PsdTraceBall>()) {
    require(d->n <= 200, "exact_lmo_dense: dimension above the dense limit");
    const Eigen::MatrixXd s =
        0.5 * (direction.mat() + direction.mat().transpose());
    const JacobiResult eig = jacobi_eigendecomposition(s);
    const double lmin = eig.values[0];
    LmoResult out;
    if (d->bound == TraceBound::Le && lmin >= 0.0) {
      Eigen::VectorXd e1 = Eigen::VectorXd::Zero(d->n);
      e1[0] = 1.0;
      out.atom.node = Atom::SpectralPsd{0.0, std::move(e1)};
      out.value = 0.0;
    } else {
      out.atom.node = Atom::SpectralPsd{d->beta, eig.vectors.col(0)};
      out.value = d->beta * lmin;
    }
    return out;
  }
  if (const auto* d = domain.as<NuclearBall>()) {
    require(d->rows + d->cols <= 400, "exact_lmo_dense: dimension above the dense limit");
    // Top singular triple from the symmetric embedding [[0, M], [M^T, 0]],
    // whose largest eigenvalue is sigma_max with eigenvector (u; v)/sqrt(2).
    const Eigen::MatrixXd& m = direction.mat();
    Eigen::MatrixXd emb = Eigen::MatrixXd::Zero(d->rows + d->cols, d->rows + d->cols);
    emb.topRightCorner(d->rows, d->cols) = m;
    emb.bottomLeftCorner(d->cols, d->rows) = m.transpose();
    const JacobiResult eig = jacobi_eigendecomposition(emb);
    const Eigen::VectorXd top = eig.vectors.col(d->rows + d->cols - 1);
    Eigen::VectorXd u = top.head(d->rows);
    Eigen::VectorXd v = top.tail(d->cols);
    const double un = u.norm();
    const double vn = v.norm();
    LmoResult out;
    if (un == 0.0 || vn == 0.0) {
      // Zero direction: any rank-1 point attains the optimal value 0.
      u = Eigen::VectorXd::Zero(d->rows);
      v = Eigen::VectorXd::Zero(d->cols);
      u[0] = 1.0;
      v[0] = 1.0;
    } else {
      u /= un;
      v /= vn;
    }
    out.atom.node = Atom::SpectralRank1{-d->beta, u, v};
    out.value = -d->beta * u.dot(m * v);
    return out;
  }
  // Vector domains and products already use exact closed forms.
  if (domain.as<DomainList>()) {
    const auto& list = *domain.as<DomainList>();
    const auto& dirs = direction.parts();
    require(dirs.size() == list.size(), "exact_lmo_dense: block count mismatch");
    LmoResult out;
    Atom::List atoms;
    for (size_t i = 0; i < list.size(); ++i) {
      LmoResult sub = exact_lmo_dense(list[i], dirs[i]);
      out.value += sub.value;
      atoms.push_back(std::move(sub.atom));
    }
    out.atom.node = std::move(atoms);
    return out;
  }
  return lmo(domain, direction);
}

Eigen::VectorXd exact_projection_l1(const Eigen::VectorXd& y, double radius) {
  require(radius > 0.0, "exact_projection_l1: radius must be positive");
  if (y.cwiseAbs().sum() <= radius) return y;
  // Shrinkage threshold theta solves sum_i max(|y_i| - theta, 0) = radius;
  // the left side is continuous and strictly decreasing until it hits zero.
  double lo = 0.0;
  double hi = y.cwiseAbs().maxCoeff();
  const auto mass = [&](double theta) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < y.size(); ++i)
      s += std::max(std::abs(y[i]) - theta, 0.0);
    return s;
  };
  for (int it = 0; it < 200 && hi - lo > 1e-12; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mass(mid) > radius)
      lo = mid;
    else
      hi = mid;
  }
  const double theta = 0.5 * (lo + hi);
  Eigen::VectorXd out(y.size());
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    const double mag = std::max(std::abs(y[i]) - theta, 0.0);
    out[i] = y[i] < 0.0 ? -mag : mag;
  }
  return out;
}

FiniteDiffReport finite_diff_check(const std::function<double(const DecisionVar&)>& f,
                                   const DecisionVar& grad, const DecisionVar& at,
                                   double h) {
  require(h > 0.0, "finite_diff_check: h must be positive");
  require(grad.same_shape(at), "finite_diff_check: gradient shape mismatch");
  const Eigen::VectorXd g = grad.to_flat();
  Eigen::VectorXd x = at.to_flat();
  FiniteDiffReport report;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double xi = x[i];
    x[i] = xi + h;
    const double fp = f(DecisionVar::from_flat(x, at));
    x[i] = xi - h;
    const double fm = f(DecisionVar::from_flat(x, at));
    x[i] = xi;
    const double fd = (fp - fm) / (2.0 * h);
    const double scale = std::max({1.0, std::abs(g[i]), std::abs(fd)});
    const double rel = std::abs(fd - g[i]) / scale;
    if (rel > report.max_rel_error) {
      report.max_rel_error = rel;
      report.worst_index = i;
    }
  }
  return report;
}

}  // namespace reference
}  // namespace shcgm
