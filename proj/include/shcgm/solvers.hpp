#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "shcgm/domains.hpp"
#include "shcgm/nonsmooth.hpp"
#include "shcgm/stochastic.hpp"

namespace shcgm {

enum class Algorithm { Shcgm, Hcgm, Sfw };
enum class OracleMode { Exact, Additive, Multiplicative };

struct Schedules {
  OracleMode mode = OracleMode::Exact;
  double beta0 = 1.0;
  double delta = 0.0;  // additive: >= 0; multiplicative: (0, 1]
};

struct StepParams {
  double eta;
  double beta;
  double rho;
};

// Step sizes for iteration k >= 1. Exact/additive:
//   eta = 9/(k+8), beta = beta0/sqrt(k+8), rho = 4/(k+7)^(2/3).
// Multiplicative with quality delta:
//   eta = 9/(delta(k-1)+9), beta = beta0/sqrt(delta(k-1)+9),
//   rho = 4/(delta(k-2)+9)^(2/3);
// delta = 1 reproduces the exact schedules term by term.
StepParams schedules_at(const Schedules& s, std::int64_t k);

// Everything a solver needs about one problem instance. objective is the
// deterministic evaluator used for trace records (population or full-batch
// value); metrics are named extra evaluators reported at the end of a run.
struct ProblemSpec {
  explicit ProblemSpec(Domain d) : domain(std::move(d)) {}

  std::string name;
  Domain domain;
  StochasticOracle oracle;
  std::optional<LinearMap> a_map;
  std::optional<NonsmoothTerm> g;
  double l_f = 0.0;
  double a_norm = 0.0;  // operator norm of a_map; 0 when absent
  std::optional<double> reference_objective;
  std::function<double(const DecisionVar&)> objective;
  std::vector<std::pair<std::string, std::function<double(const DecisionVar&)>>> metrics;
  // Optional repair used by reference solves: maps an iterate to a nearby
  // point of the domain with (near-)zero constraint violation, or returns the
  // argument unchanged when no confident rounding exists.
  std::function<DecisionVar(const DecisionVar&)> round_feasible;
};

struct SolverConfig {
  Algorithm algorithm = Algorithm::Shcgm;
  Schedules schedules;
  std::int64_t iterations = 0;
  std::uint64_t seed = 0;
  EigConfig eig;  // lmo eigensolver knobs; warm_start is managed internally
  // Trace density: every iteration up to trace_dense_until, then indices
  // growing by trace_thin_factor. The final iteration is always recorded.
  std::int64_t trace_dense_until = 1000;
  double trace_thin_factor = 1.02;
  bool record_estimator_mse = true;  // needs oracle.full_gradient
};

struct TraceRecord {
  std::int64_t k = 0;
  double objective = 0.0;
  std::optional<double> residual;  // |objective - reference_objective|
  double feasibility = 0.0;        // dist(Ax, K); 0 when g is absent or Lipschitz
  std::optional<double> estimator_mse;  // ||full_grad(x_k) - d_k||^2, sampling point
  double beta = 0.0;
  double wall_ms = 0.0;
};

struct RunStats {
  std::int64_t lmo_calls = 0;
  std::int64_t eig_early_stops = 0;  // inner eigensolve missed its residual target
  std::int64_t additive_loose_accepts = 0;
  std::int64_t additive_refinements = 0;
  std::int64_t additive_fallbacks = 0;
  std::int64_t mult_cert_failures = 0;
};

struct RunResult {
  std::vector<TraceRecord> trace;
  DecisionVar x;
  EstimatorState estimator;
  RunStats stats;
  // Set when the run aborted (non-finite iterate); trace holds the records
  // produced up to that point.
  std::optional<std::string> error;
};

struct SolverState {
  DecisionVar x;
  EstimatorState est;
  Eigen::VectorXd eig_warm;  // spectral-lmo restart vector, empty until first call
  RunStats stats;
};

// Context handed to the inexact-oracle wrappers; the additive budget is
// delta * (eta/2) * diameter^2 * (l_f + a_norm^2 / beta).
struct LmoContext {
  double eta = 0.0;
  double beta = 0.0;
  double diameter = 0.0;
  double l_f = 0.0;
  double a_norm = 0.0;
  const DecisionVar* x = nullptr;
};

struct InexactLmoResult {
  Atom atom;
  Eigen::VectorXd warm;
  double value = 0.0;          // <direction, atom>
  double budget = 0.0;         // additive value-gap allowance for this call
  double certified_gap = 0.0;  // sound upper bound on <v,atom> - min_s <v,s>
  bool loose_accepted = false; // an early-stopped candidate passed certification
  bool fell_back = false;      // reference-quality oracle had to be used
  int refinements = 0;
};

// Additive wrapper: runs the eigensolver at a loose tolerance, accepts its
// atom only when a sound certificate bounds the value gap by the budget,
// otherwise refines and finally falls back to the reference-quality oracle.
// delta = 0 delegates to the exact oracle verbatim.
InexactLmoResult lmo_additive(const Domain& domain, const DecisionVar& direction,
                              double delta, const LmoContext& ctx,
                              const EigConfig& base);

// Multiplicative wrapper: certifies <v, s~ - x> <= delta <v, s - x> against a
// reference-quality s, returning s on certification failure. delta = 1
// requires an exact inner oracle and passes its atom through. When no inner
// oracle is supplied, the worst boundary case s~ = x + delta (s - x) is used.
using InnerLmo = std::function<Atom(const DecisionVar& direction)>;
InexactLmoResult lmo_multiplicative(const Domain& domain, const DecisionVar& direction,
                                    double delta, const LmoContext& ctx,
                                    const EigConfig& base, const InnerLmo& inner = {});

// One iteration (1-based k) of the homotopy conditional-gradient update:
// sample, estimator update, smoothed direction, lmo, convex step. When
// mse_out is non-null and the oracle has a full gradient, it receives
// ||full_grad(x_k) - d_k||^2 before the step.
void solver_iterate(SolverState& st, const ProblemSpec& p, const SolverConfig& cfg,
                    std::int64_t k, Rng& root, double* mse_out = nullptr);

using IterateObserver = std::function<void(std::int64_t, const DecisionVar&)>;

RunResult run_solver(const ProblemSpec& p, const SolverConfig& cfg,
                     const IterateObserver& observer = {});

}  // namespace shcgm
