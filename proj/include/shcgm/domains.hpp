#pragma once

#include <memory>
#include <variant>
#include <vector>

#include "shcgm/linalg.hpp"

namespace shcgm {

// Extreme points returned by the linear minimization oracles. Atoms stay in
// factored form so solver steps can apply rank-1 updates without forming a
// dense matrix first.
struct Atom {
  struct SpectralPsd {  // weight * v v^T, weight >= 0
    double weight;
    Eigen::VectorXd v;
  };
  struct SpectralRank1 {  // weight * u v^T
    double weight;
    Eigen::VectorXd u;
    Eigen::VectorXd v;
  };
  struct Vertex {  // coeff * e_index in R^dim
    Eigen::Index dim;
    Eigen::Index index;
    double coeff;
  };
  struct DensePoint {
    DecisionVar point;
  };
  using List = std::vector<Atom>;

  std::variant<SpectralPsd, SpectralRank1, Vertex, DensePoint, List> node;
};

enum class TraceBound { Le, Eq };

struct PsdTraceBall {  // {X psd, tr X <= beta} or {X psd, tr X = beta}
  Eigen::Index n;
  double beta;
  TraceBound bound;
};
struct NuclearBall {  // {X in R^{rows x cols}, ||X||_* <= beta}
  Eigen::Index rows;
  Eigen::Index cols;
  double beta;
};
struct L1Ball {
  Eigen::Index dim;
  double radius;
};
struct BoxDomain {  // {lo <= x <= hi} coordinatewise, bounds finite
  Eigen::VectorXd lo;
  Eigen::VectorXd hi;
};
struct SimplexDomain {  // {x >= 0, sum x = radius}
  Eigen::Index dim;
  double radius;
};

class Domain;
using DomainList = std::vector<Domain>;

class Domain {
 public:
  Domain(PsdTraceBall d);
  Domain(NuclearBall d);
  Domain(L1Ball d);
  Domain(BoxDomain d);
  Domain(SimplexDomain d);
  Domain(DomainList d);

  const std::variant<PsdTraceBall, NuclearBall, L1Ball, BoxDomain, SimplexDomain,
                     DomainList>&
  node() const {
    return node_;
  }

  template <class T>
  const T* as() const {
    return std::get_if<T>(&node_);
  }

 private:
  std::variant<PsdTraceBall, NuclearBall, L1Ball, BoxDomain, SimplexDomain, DomainList>
      node_;
};

struct LmoResult {
  Atom atom;
  double value = 0.0;  // <direction, atom>
  // False when an inner eigensolve stopped before its residual target; the
  // atom is still the best pair found and eig_residual reports its quality.
  bool exact = true;
  double eig_residual = 0.0;
  // Iteration vector of the inner eigensolve (empty for closed-form domains);
  // callers may feed it back as EigConfig::warm_start on the next call.
  Eigen::VectorXd warm;
};

// argmin_{s in domain} <direction, s>. Ties break toward the lowest index
// (vector domains) or follow the eigensolver start (spectral domains).
LmoResult lmo(const Domain& domain, const DecisionVar& direction,
              const EigConfig& cfg = {});

DecisionVar materialize(const Atom& atom);

// <direction, atom> without materializing.
double atom_dot(const DecisionVar& direction, const Atom& atom);

// x <- (1 - eta) x + eta * atom, using the atom's factored form.
void cgm_step(DecisionVar& x, const Atom& atom, double eta);

// max_{x,y in domain} ||x - y||_F (exact closed forms).
double diameter(const Domain& domain);

// Zero decision variable of the domain's shape.
DecisionVar domain_shape(const Domain& domain);

// Canonical deterministic start point: the materialized lmo at direction 0
// under the documented tie rules. Spectral domains special-case the zero
// direction (the eigensolver would return a seeded random vector there):
// PsdTraceBall(<=) and NuclearBall start at 0, PsdTraceBall(=) at
// beta e_1 e_1^T.
DecisionVar init_point(const Domain& domain);

}  // namespace shcgm
