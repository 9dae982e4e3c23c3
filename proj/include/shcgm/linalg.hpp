#pragma once

#include <cstdint>
#include <functional>

#include "shcgm/decision_var.hpp"

namespace shcgm {

// Dense symmetric matrix. The mirror entry is written on every set(), so the
// stored matrix is symmetric by construction and either triangle can be read.
class SymMatrix {
 public:
  SymMatrix() = default;
  explicit SymMatrix(Eigen::Index n) : m_(Eigen::MatrixXd::Zero(n, n)) {}

  // Takes the symmetric part (M + M^T)/2 of an arbitrary square matrix.
  static SymMatrix from_dense(const Eigen::MatrixXd& m) {
    require(m.rows() == m.cols(), "SymMatrix: matrix not square");
    SymMatrix out(m.rows());
    out.m_ = 0.5 * (m + m.transpose());
    return out;
  }

  Eigen::Index dim() const { return m_.rows(); }
  double operator()(Eigen::Index i, Eigen::Index j) const { return m_(i, j); }
  void set(Eigen::Index i, Eigen::Index j, double v) {
    m_(i, j) = v;
    m_(j, i) = v;
  }
  const Eigen::MatrixXd& dense() const { return m_; }

 private:
  Eigen::MatrixXd m_;
};

enum class EigWhich { Min, Max };

struct EigConfig {
  double tol = 1e-7;  // residual target, relative to ||M||_F
  int max_iter = 500;
  std::uint64_t seed = 0;  // start-vector seed
  // Optional caller-supplied start vector (e.g. the previous solve's result);
  // overrides the seeded random start. Not owned.
  const Eigen::VectorXd* warm_start = nullptr;
};

struct EigResult {
  double value = 0.0;
  Eigen::VectorXd vector;
  double residual = 0.0;  // ||M v - value * v||, v unit
  int iterations = 0;
  bool converged = false;
};

// Extreme eigenpair of a symmetric matrix by power iteration on a spectral
// shift: c = ||M||_F + 1 dominates the spectrum, so c I - M (Min) and
// c I + M (Max) are positive definite with the wanted pair dominant.
// Non-convergence is not an error: the best pair seen is returned with
// converged = false and its residual.
EigResult extreme_eigpair(const Eigen::MatrixXd& m, EigWhich which,
                          const EigConfig& cfg = {});
EigResult extreme_eigpair(const SymMatrix& m, EigWhich which,
                          const EigConfig& cfg = {});

struct SvdResult {
  double value = 0.0;  // leading singular value
  Eigen::VectorXd u;
  Eigen::VectorXd v;
  double residual = 0.0;  // ||M^T u - value * v||
  int iterations = 0;
  bool converged = false;
};

// Leading singular triple via power iteration on the Gram matrix of the
// narrower side.
SvdResult top_singular_pair(const Eigen::MatrixXd& m, const EigConfig& cfg = {});

// Linear operator from a decision-variable space to R^d. Both directions are
// supplied by the caller; input_shape carries the domain-side shape for
// adjoint outputs and random probes.
struct LinearMap {
  std::function<Eigen::VectorXd(const DecisionVar&)> apply;
  std::function<DecisionVar(const Eigen::VectorXd&)> adjoint;
  DecisionVar input_shape;
  Eigen::Index output_dim = 0;
};

// A x = flatten(x). Exact isometry, operator norm 1.
LinearMap make_vectorize_map(const DecisionVar& shape);

// Largest singular value of A, estimated by power iteration on A^T A in the
// decision-variable space.
double operator_norm_estimate(const LinearMap& a, int probes = 100,
                              std::uint64_t seed = 0);

}  // namespace shcgm
