#pragma once

#include <functional>

#include "shcgm/domains.hpp"

namespace shcgm {
namespace reference {

// Slow, certifiable oracles used to check the fast paths. Everything here is
// deliberately independent of the power-iteration code in linalg.

struct JacobiResult {
  Eigen::VectorXd values;   // ascending
  Eigen::MatrixXd vectors;  // columns, aligned with values
  int sweeps = 0;
};

// Cyclic Jacobi rotations until the off-diagonal mass falls below
// tol * ||A||_F. Dense O(n^3) per sweep; intended for n <= 200.
JacobiResult jacobi_eigendecomposition(Eigen::MatrixXd a, double tol = 1e-13,
                                       int max_sweeps = 64);

// Exact linear minimization by dense decomposition (spectral domains) or the
// same closed forms the fast path uses (vector domains). Matrix sides bounded
// by 200.
LmoResult exact_lmo_dense(const Domain& domain, const DecisionVar& direction);

// Projection onto the l1 ball by bisection on the shrinkage threshold
// (independent of the sort-based route).
Eigen::VectorXd exact_projection_l1(const Eigen::VectorXd& y, double radius);

struct FiniteDiffReport {
  double max_rel_error = 0.0;
  Eigen::Index worst_index = -1;
};

// Central differences per flat coordinate of `at`. Relative error uses
// max(1, |analytic|, |numeric|) as the scale.
FiniteDiffReport finite_diff_check(const std::function<double(const DecisionVar&)>& f,
                                   const DecisionVar& grad, const DecisionVar& at,
                                   double h);

}  // namespace reference
}  // namespace shcgm
