#include "shcgm/nonsmooth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace shcgm {

Eigen::VectorXd prox(const NonsmoothTerm& g, double beta, const Eigen::VectorXd& y) {
  require(beta > 0.0, "prox: beta must be positive");
  require(y.size() == g.dim, "prox: argument dimension mismatch");
  return g.prox_fn(y, beta);
}

double distance_to_set(const NonsmoothTerm& g, const Eigen::VectorXd& z) {
  require(g.kind == NonsmoothTerm::Kind::IndicatorSet,
          "distance_to_set: term is not an indicator");
  require(z.size() == g.dim, "distance_to_set: argument dimension mismatch");
  return (z - g.prox_fn(z, 1.0)).norm();
}

double smoothed_value(const NonsmoothTerm& g, const Eigen::VectorXd& z, double beta) {
  require(beta > 0.0, "smoothed_value: beta must be positive");
  require(z.size() == g.dim, "smoothed_value: argument dimension mismatch");
  const Eigen::VectorXd p = g.prox_fn(z, beta);
  if (g.kind == NonsmoothTerm::Kind::IndicatorSet)
    return (z - p).squaredNorm() / (2.0 * beta);
  return g.value(p) + (z - p).squaredNorm() / (2.0 * beta);
}

DecisionVar smoothed_grad_term(const NonsmoothTerm& g, const LinearMap& a,
                               const DecisionVar& x, double beta) {
  require(beta > 0.0, "smoothed_grad_term: beta must be positive");
  require(a.output_dim == g.dim, "smoothed_grad_term: map/term dimension mismatch");
  const Eigen::VectorXd z = a.apply(x);
  return a.adjoint((z - g.prox_fn(z, beta)) / beta);
}

NonsmoothTerm indicator_box(Eigen::VectorXd lo, Eigen::VectorXd hi) {
  require(lo.size() == hi.size() && lo.size() > 0, "indicator_box: bad bounds");
  for (Eigen::Index i = 0; i < lo.size(); ++i)
    require(lo[i] <= hi[i], "indicator_box: lo > hi");
  NonsmoothTerm g;
  g.kind = NonsmoothTerm::Kind::IndicatorSet;
  g.dim = lo.size();
  g.name = "box";
  g.prox_fn = [lo = std::move(lo), hi = std::move(hi)](const Eigen::VectorXd& y,
                                                       double) {
    return Eigen::VectorXd(y.cwiseMax(lo).cwiseMin(hi));
  };
  return g;
}

NonsmoothTerm indicator_point(Eigen::VectorXd b) {
  require(b.size() > 0, "indicator_point: empty target");
  NonsmoothTerm g;
  g.kind = NonsmoothTerm::Kind::IndicatorSet;
  g.dim = b.size();
  g.name = "point";
  g.prox_fn = [b = std::move(b)](const Eigen::VectorXd&, double) { return b; };
  return g;
}

NonsmoothTerm indicator_l1ball(Eigen::Index dim, double radius) {
  require(dim > 0 && radius > 0.0, "indicator_l1ball: bad parameters");
  NonsmoothTerm g;
  g.kind = NonsmoothTerm::Kind::IndicatorSet;
  g.dim = dim;
  g.name = "l1ball";
  g.prox_fn = [radius](const Eigen::VectorXd& y, double) {
    return project_l1_ball(y, radius);
  };
  return g;
}

NonsmoothTerm indicator_rowsum_nonneg(Eigen::Index n) {
  require(n > 0, "indicator_rowsum_nonneg: n must be positive");
  NonsmoothTerm g;
  g.kind = NonsmoothTerm::Kind::IndicatorSet;
  g.dim = n + n * n;
  g.name = "rowsum_nonneg";
  g.prox_fn = [n](const Eigen::VectorXd& y, double) {
    Eigen::VectorXd out(y.size());
    out.head(n).setOnes();
    out.tail(n * n) = y.tail(n * n).cwiseMax(0.0);
    return out;
  };
  return g;
}

NonsmoothTerm l1_norm(Eigen::Index dim, double weight) {
  require(dim > 0 && weight > 0.0, "l1_norm: bad parameters");
  NonsmoothTerm g;
  g.kind = NonsmoothTerm::Kind::LipschitzProx;
  g.dim = dim;
  g.name = "l1";
  // sup-norm of the subdifferential over the dual ball: weight * sqrt(dim).
  g.lipschitz = weight * std::sqrt(static_cast<double>(dim));
  g.value = [weight](const Eigen::VectorXd& z) { return weight * z.cwiseAbs().sum(); };
  g.prox_fn = [weight](const Eigen::VectorXd& y, double beta) {
    return soft_threshold(y, beta * weight);
  };
  return g;
}

Eigen::VectorXd project_l1_ball(const Eigen::VectorXd& y, double radius) {
  require(radius > 0.0, "project_l1_ball: radius must be positive");
  if (y.cwiseAbs().sum() <= radius) return y;
  // Duchi et al. style: sort |y| descending, find the last index rho where
  // the running threshold stays below the magnitude, shrink by theta.
  std::vector<double> u(static_cast<size_t>(y.size()));
  for (Eigen::Index i = 0; i < y.size(); ++i) u[static_cast<size_t>(i)] = std::abs(y[i]);
  std::sort(u.begin(), u.end(), std::greater<double>());
  double css = 0.0;
  double theta = 0.0;
  Eigen::Index rho = 0;
  for (size_t j = 0; j < u.size(); ++j) {
    css += u[j];
    const double t = (css - radius) / static_cast<double>(j + 1);
    if (u[j] > t) {
      theta = t;
      rho = static_cast<Eigen::Index>(j + 1);
    }
  }
  (void)rho;
  Eigen::VectorXd out(y.size());
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    const double mag = std::max(std::abs(y[i]) - theta, 0.0);
    out[i] = y[i] < 0.0 ? -mag : mag;
  }
  return out;
}

Eigen::VectorXd soft_threshold(const Eigen::VectorXd& y, double t) {
  Eigen::VectorXd out(y.size());
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    const double mag = std::max(std::abs(y[i]) - t, 0.0);
    out[i] = y[i] < 0.0 ? -mag : mag;
  }
  return out;
}

}  // namespace shcgm
