#pragma once

#include <functional>
#include <string>

#include "shcgm/linalg.hpp"

namespace shcgm {

// The nonsmooth term g in F(x) = E f(x, w) + g(A x): either a proper closed
// convex function with a known Lipschitz constant and prox, or the indicator
// of a closed convex set given by its projection. For indicators prox_{b g}
// is the projection for every b > 0.
struct NonsmoothTerm {
  enum class Kind { LipschitzProx, IndicatorSet };

  Kind kind = Kind::IndicatorSet;
  Eigen::Index dim = 0;
  std::string name;
  double lipschitz = 0.0;  // L_g, meaningful for LipschitzProx only
  std::function<double(const Eigen::VectorXd&)> value;  // g(z), LipschitzProx only
  std::function<Eigen::VectorXd(const Eigen::VectorXd&, double)> prox_fn;
};

Eigen::VectorXd prox(const NonsmoothTerm& g, double beta, const Eigen::VectorXd& y);

// ||z - proj_K(z)|| for indicator terms.
double distance_to_set(const NonsmoothTerm& g, const Eigen::VectorXd& z);

// Nesterov-smoothed value g_beta(z): the Moreau envelope for Lipschitz terms,
// dist(z, K)^2 / (2 beta) for indicators.
double smoothed_value(const NonsmoothTerm& g, const Eigen::VectorXd& z, double beta);

// grad_x g_beta(A x) = A^T (A x - prox_{beta g}(A x)) / beta.
DecisionVar smoothed_grad_term(const NonsmoothTerm& g, const LinearMap& a,
                               const DecisionVar& x, double beta);

// Constructors.
NonsmoothTerm indicator_box(Eigen::VectorXd lo, Eigen::VectorXd hi);  // bounds may be +-inf
NonsmoothTerm indicator_point(Eigen::VectorXd b);
NonsmoothTerm indicator_l1ball(Eigen::Index dim, double radius);
// {1_n} x R+^{n x n}: first block pinned to ones, second block clipped at 0.
NonsmoothTerm indicator_rowsum_nonneg(Eigen::Index n);
NonsmoothTerm l1_norm(Eigen::Index dim, double weight);  // g = weight ||.||_1

// Sort-and-threshold projection onto {||z||_1 <= radius}; exact in one pass.
Eigen::VectorXd project_l1_ball(const Eigen::VectorXd& y, double radius);

Eigen::VectorXd soft_threshold(const Eigen::VectorXd& y, double t);

}  // namespace shcgm
