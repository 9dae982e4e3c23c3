#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "shcgm/decision_var.hpp"

namespace shcgm {

// First-order stochastic oracle for f(x) = E f(x, w). sample_gradient must be
// unbiased for full_gradient; full_gradient and variance_bound are optional
// (diagnostics and schedules-with-known-sigma paths respectively).
struct StochasticOracle {
  std::function<DecisionVar(const DecisionVar&, Rng&)> sample_gradient;
  std::function<DecisionVar(const DecisionVar&)> full_gradient;
  double variance_bound = -1.0;  // sigma^2 per sample; negative when unknown
};

// Running gradient average d_k. k counts applied updates.
struct EstimatorState {
  DecisionVar d;
  std::int64_t k = 0;
};

// d <- (1 - rho) d + rho g.
void update_estimator(EstimatorState& st, const DecisionVar& g, double rho);

// Uniform sample of `batch` distinct indices from {0, ..., population-1},
// ascending. Floyd's algorithm: O(batch) draws regardless of population.
std::vector<Eigen::Index> sample_minibatch(Eigen::Index population,
                                           Eigen::Index batch, Rng& rng);

}  // namespace shcgm
