#include "shcgm/domains.hpp"

#include <cmath>

namespace shcgm {

Domain::Domain(PsdTraceBall d) : node_(std::move(d)) {
  const auto& p = std::get<PsdTraceBall>(node_);
  require(p.n > 0, "PsdTraceBall: n must be positive");
  require(p.beta > 0, "PsdTraceBall: beta must be positive");
}
Domain::Domain(NuclearBall d) : node_(std::move(d)) {
  const auto& p = std::get<NuclearBall>(node_);
  require(p.rows > 0 && p.cols > 0, "NuclearBall: shape must be positive");
  require(p.beta > 0, "NuclearBall: beta must be positive");
}
Domain::Domain(L1Ball d) : node_(std::move(d)) {
  const auto& p = std::get<L1Ball>(node_);
  require(p.dim > 0, "L1Ball: dim must be positive");
  require(p.radius > 0, "L1Ball: radius must be positive");
}
Domain::Domain(BoxDomain d) : node_(std::move(d)) {
  const auto& p = std::get<BoxDomain>(node_);
  require(p.lo.size() == p.hi.size() && p.lo.size() > 0, "BoxDomain: bad bounds");
  require(p.lo.allFinite() && p.hi.allFinite(), "BoxDomain: bounds must be finite");
  require((p.lo.array() <= p.hi.array()).all(), "BoxDomain: lo > hi");
}
Domain::Domain(SimplexDomain d) : node_(std::move(d)) {
  const auto& p = std::get<SimplexDomain>(node_);
  require(p.dim > 0, "SimplexDomain: dim must be positive");
  require(p.radius > 0, "SimplexDomain: radius must be positive");
}
Domain::Domain(DomainList d) : node_(std::move(d)) {
  require(!std::get<DomainList>(node_).empty(), "Domain: empty product");
}

namespace {

Eigen::Index argmin_lowest(const Eigen::VectorXd& g) {
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < g.size(); ++i)
    if (g[i] < g[best]) best = i;
  return best;
}

Eigen::Index argmax_abs_lowest(const Eigen::VectorXd& g) {
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < g.size(); ++i)
    if (std::abs(g[i]) > std::abs(g[best])) best = i;
  return best;
}

}  // namespace

LmoResult lmo(const Domain& domain, const DecisionVar& direction,
              const EigConfig& cfg) {
  LmoResult out;
  if (const auto* d = domain.as<PsdTraceBall>()) {
    const Eigen::MatrixXd& g = direction.mat();
    require(g.rows() == d->n && g.cols() == d->n, "lmo: direction shape mismatch");
    // Only the symmetric part is visible against symmetric arguments.
    const Eigen::MatrixXd s = 0.5 * (g + g.transpose());
    const EigResult eig = extreme_eigpair(s, EigWhich::Min, cfg);
    out.exact = eig.converged;
    out.eig_residual = eig.residual;
    out.warm = eig.vector;
    const double rayleigh = eig.vector.dot(s * eig.vector);
    if (d->bound == TraceBound::Le && rayleigh >= 0.0) {
      Eigen::VectorXd e1 = Eigen::VectorXd::Zero(d->n);
      e1[0] = 1.0;
      out.atom.node = Atom::SpectralPsd{0.0, std::move(e1)};
      out.value = 0.0;
    } else {
      out.atom.node = Atom::SpectralPsd{d->beta, eig.vector};
      out.value = d->beta * rayleigh;
    }
    return out;
  }
  if (const auto* d = domain.as<NuclearBall>()) {
    const Eigen::MatrixXd& g = direction.mat();
    require(g.rows() == d->rows && g.cols() == d->cols,
            "lmo: direction shape mismatch");
    const SvdResult svd = top_singular_pair(g, cfg);
    out.exact = svd.converged;
    out.eig_residual = svd.residual;
    // The Gram-side iteration vector is what a warm restart needs.
    out.warm = (d->rows >= d->cols) ? svd.v : svd.u;
    out.atom.node = Atom::SpectralRank1{-d->beta, svd.u, svd.v};
    out.value = -d->beta * svd.u.dot(g * svd.v);
    return out;
  }
  if (const auto* d = domain.as<L1Ball>()) {
    const Eigen::VectorXd& g = direction.vec();
    require(g.size() == d->dim, "lmo: direction shape mismatch");
    const Eigen::Index i = argmax_abs_lowest(g);
    const double sign = g[i] < 0.0 ? -1.0 : 1.0;
    out.atom.node = Atom::Vertex{d->dim, i, -d->radius * sign};
    out.value = -d->radius * sign * g[i];
    return out;
  }
  if (const auto* d = domain.as<BoxDomain>()) {
    const Eigen::VectorXd& g = direction.vec();
    require(g.size() == d->lo.size(), "lmo: direction shape mismatch");
    Eigen::VectorXd corner(g.size());
    for (Eigen::Index i = 0; i < g.size(); ++i)
      corner[i] = g[i] > 0.0 ? d->lo[i] : (g[i] < 0.0 ? d->hi[i] : d->lo[i]);
    out.value = g.dot(corner);
    out.atom.node = Atom::DensePoint{DecisionVar::vector(std::move(corner))};
    return out;
  }
  if (const auto* d = domain.as<SimplexDomain>()) {
    const Eigen::VectorXd& g = direction.vec();
    require(g.size() == d->dim, "lmo: direction shape mismatch");
    const Eigen::Index i = argmin_lowest(g);
    out.atom.node = Atom::Vertex{d->dim, i, d->radius};
    out.value = d->radius * g[i];
    return out;
  }
  const auto& list = *domain.as<DomainList>();
  const auto& dirs = direction.parts();
  require(dirs.size() == list.size(), "lmo: direction block count mismatch");
  Atom::List atoms;
  atoms.reserve(list.size());
  out.value = 0.0;
  for (size_t i = 0; i < list.size(); ++i) {
    LmoResult sub = lmo(list[i], dirs[i], cfg);
    out.value += sub.value;
    out.exact = out.exact && sub.exact;
    out.eig_residual = std::max(out.eig_residual, sub.eig_residual);
    atoms.push_back(std::move(sub.atom));
  }
  out.atom.node = std::move(atoms);
  return out;
}

DecisionVar materialize(const Atom& atom) {
  if (const auto* a = std::get_if<Atom::SpectralPsd>(&atom.node)) {
    Eigen::MatrixXd m = a->weight * (a->v * a->v.transpose());
    return DecisionVar::matrix(std::move(m));
  }
  if (const auto* a = std::get_if<Atom::SpectralRank1>(&atom.node)) {
    Eigen::MatrixXd m = a->weight * (a->u * a->v.transpose());
    return DecisionVar::matrix(std::move(m));
  }
  if (const auto* a = std::get_if<Atom::Vertex>(&atom.node)) {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(a->dim);
    v[a->index] = a->coeff;
    return DecisionVar::vector(std::move(v));
  }
  if (const auto* a = std::get_if<Atom::DensePoint>(&atom.node)) return a->point;
  const auto& list = std::get<Atom::List>(atom.node);
  DecisionVar::Blocks blocks;
  blocks.reserve(list.size());
  for (const auto& a : list) blocks.push_back(materialize(a));
  return DecisionVar::blocks(std::move(blocks));
}

double atom_dot(const DecisionVar& direction, const Atom& atom) {
  if (const auto* a = std::get_if<Atom::SpectralPsd>(&atom.node))
    return a->weight * a->v.dot(direction.mat() * a->v);
  if (const auto* a = std::get_if<Atom::SpectralRank1>(&atom.node))
    return a->weight * a->u.dot(direction.mat() * a->v);
  if (const auto* a = std::get_if<Atom::Vertex>(&atom.node))
    return a->coeff * direction.vec()[a->index];
  if (const auto* a = std::get_if<Atom::DensePoint>(&atom.node))
    return direction.dot(a->point);
  const auto& list = std::get<Atom::List>(atom.node);
  const auto& dirs = direction.parts();
  require(dirs.size() == list.size(), "atom_dot: block count mismatch");
  double s = 0.0;
  for (size_t i = 0; i < list.size(); ++i) s += atom_dot(dirs[i], list[i]);
  return s;
}

void cgm_step(DecisionVar& x, const Atom& atom, double eta) {
  require(eta >= 0.0 && eta <= 1.0, "cgm_step: eta outside [0, 1]");
  if (const auto* a = std::get_if<Atom::SpectralPsd>(&atom.node)) {
    Eigen::MatrixXd& m = x.mat();
    m *= (1.0 - eta);
    if (a->weight != 0.0) m.noalias() += (eta * a->weight) * (a->v * a->v.transpose());
    return;
  }
  if (const auto* a = std::get_if<Atom::SpectralRank1>(&atom.node)) {
    Eigen::MatrixXd& m = x.mat();
    m *= (1.0 - eta);
    if (a->weight != 0.0) m.noalias() += (eta * a->weight) * (a->u * a->v.transpose());
    return;
  }
  if (const auto* a = std::get_if<Atom::Vertex>(&atom.node)) {
    Eigen::VectorXd& v = x.vec();
    v *= (1.0 - eta);
    v[a->index] += eta * a->coeff;
    return;
  }
  if (const auto* a = std::get_if<Atom::DensePoint>(&atom.node)) {
    x.blend(eta, a->point);
    return;
  }
  const auto& list = std::get<Atom::List>(atom.node);
  auto& blocks = x.parts();
  require(blocks.size() == list.size(), "cgm_step: block count mismatch");
  for (size_t i = 0; i < list.size(); ++i) cgm_step(blocks[i], list[i], eta);
}

double diameter(const Domain& domain) {
  if (const auto* d = domain.as<PsdTraceBall>()) return d->beta * std::sqrt(2.0);
  if (const auto* d = domain.as<NuclearBall>()) return 2.0 * d->beta;
  if (const auto* d = domain.as<L1Ball>()) return 2.0 * d->radius;
  if (const auto* d = domain.as<BoxDomain>()) return (d->hi - d->lo).norm();
  if (const auto* d = domain.as<SimplexDomain>()) return d->radius * std::sqrt(2.0);
  double s = 0.0;
  for (const auto& sub : *domain.as<DomainList>()) {
    const double di = diameter(sub);
    s += di * di;
  }
  return std::sqrt(s);
}

DecisionVar domain_shape(const Domain& domain) {
  if (const auto* d = domain.as<PsdTraceBall>())
    return DecisionVar::matrix(d->n, d->n);
  if (const auto* d = domain.as<NuclearBall>())
    return DecisionVar::matrix(d->rows, d->cols);
  if (const auto* d = domain.as<L1Ball>()) return DecisionVar::vector(d->dim);
  if (const auto* d = domain.as<BoxDomain>())
    return DecisionVar::vector(d->lo.size());
  if (const auto* d = domain.as<SimplexDomain>()) return DecisionVar::vector(d->dim);
  DecisionVar::Blocks blocks;
  for (const auto& sub : *domain.as<DomainList>()) blocks.push_back(domain_shape(sub));
  return DecisionVar::blocks(std::move(blocks));
}

DecisionVar init_point(const Domain& domain) {
  if (const auto* d = domain.as<PsdTraceBall>()) {
    DecisionVar x = DecisionVar::matrix(d->n, d->n);
    if (d->bound == TraceBound::Eq) x.mat()(0, 0) = d->beta;
    return x;
  }
  if (domain.as<NuclearBall>()) return domain_shape(domain);
  if (const auto* d = domain.as<L1Ball>()) {
    DecisionVar x = DecisionVar::vector(d->dim);
    x.vec()[0] = -d->radius;
    return x;
  }
  if (const auto* d = domain.as<BoxDomain>())
    return DecisionVar::vector(Eigen::VectorXd(d->lo));
  if (const auto* d = domain.as<SimplexDomain>()) {
    DecisionVar x = DecisionVar::vector(d->dim);
    x.vec()[0] = d->radius;
    return x;
  }
  DecisionVar::Blocks blocks;
  for (const auto& sub : *domain.as<DomainList>()) blocks.push_back(init_point(sub));
  return DecisionVar::blocks(std::move(blocks));
}

}  // namespace shcgm
