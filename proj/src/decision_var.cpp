#include "shcgm/decision_var.hpp"

#include <cmath>

namespace shcgm {

bool DecisionVar::same_shape(const DecisionVar& o) const {
  if (is_vector()) return o.is_vector() && vec().size() == o.vec().size();
  if (is_matrix())
    return o.is_matrix() && mat().rows() == o.mat().rows() &&
           mat().cols() == o.mat().cols();
  if (!o.is_blocks() || parts().size() != o.parts().size()) return false;
  for (size_t i = 0; i < parts().size(); ++i)
    if (!parts()[i].same_shape(o.parts()[i])) return false;
  return true;
}

Eigen::Index DecisionVar::flat_size() const {
  if (is_vector()) return vec().size();
  if (is_matrix()) return mat().size();
  Eigen::Index n = 0;
  for (const auto& b : parts()) n += b.flat_size();
  return n;
}

DecisionVar DecisionVar::zeros_like() const {
  DecisionVar out = *this;
  out.set_zero();
  return out;
}

void DecisionVar::set_zero() {
  if (is_vector())
    vec().setZero();
  else if (is_matrix())
    mat().setZero();
  else
    for (auto& b : parts()) b.set_zero();
}

void DecisionVar::scale(double a) {
  if (is_vector())
    vec() *= a;
  else if (is_matrix())
    mat() *= a;
  else
    for (auto& b : parts()) b.scale(a);
}

void DecisionVar::axpy(double a, const DecisionVar& x) {
  require(same_shape(x), "DecisionVar::axpy: shape mismatch");
  if (is_vector())
    vec() += a * x.vec();
  else if (is_matrix())
    mat() += a * x.mat();
  else
    for (size_t i = 0; i < parts().size(); ++i) parts()[i].axpy(a, x.parts()[i]);
}

void DecisionVar::blend(double eta, const DecisionVar& t) {
  require(same_shape(t), "DecisionVar::blend: shape mismatch");
  if (is_vector())
    vec() = (1.0 - eta) * vec() + eta * t.vec();
  else if (is_matrix())
    mat() = (1.0 - eta) * mat() + eta * t.mat();
  else
    for (size_t i = 0; i < parts().size(); ++i) parts()[i].blend(eta, t.parts()[i]);
}

double DecisionVar::dot(const DecisionVar& o) const {
  require(same_shape(o), "DecisionVar::dot: shape mismatch");
  if (is_vector()) return vec().dot(o.vec());
  if (is_matrix()) return (mat().array() * o.mat().array()).sum();
  double s = 0.0;
  for (size_t i = 0; i < parts().size(); ++i) s += parts()[i].dot(o.parts()[i]);
  return s;
}

double DecisionVar::squared_norm() const {
  if (is_vector()) return vec().squaredNorm();
  if (is_matrix()) return mat().squaredNorm();
  double s = 0.0;
  for (const auto& b : parts()) s += b.squared_norm();
  return s;
}

double DecisionVar::norm() const { return std::sqrt(squared_norm()); }

double DecisionVar::max_abs() const {
  if (is_vector()) return vec().size() == 0 ? 0.0 : vec().cwiseAbs().maxCoeff();
  if (is_matrix()) return mat().size() == 0 ? 0.0 : mat().cwiseAbs().maxCoeff();
  double m = 0.0;
  for (const auto& b : parts()) m = std::max(m, b.max_abs());
  return m;
}

bool DecisionVar::all_finite() const {
  if (is_vector()) return vec().allFinite();
  if (is_matrix()) return mat().allFinite();
  for (const auto& b : parts())
    if (!b.all_finite()) return false;
  return true;
}

Eigen::VectorXd DecisionVar::to_flat() const {
  Eigen::VectorXd out(flat_size());
  if (is_vector()) {
    out = vec();
  } else if (is_matrix()) {
    out = Eigen::Map<const Eigen::VectorXd>(mat().data(), mat().size());
  } else {
    Eigen::Index at = 0;
    for (const auto& b : parts()) {
      const Eigen::Index n = b.flat_size();
      out.segment(at, n) = b.to_flat();
      at += n;
    }
  }
  return out;
}

DecisionVar DecisionVar::from_flat(const Eigen::VectorXd& flat, const DecisionVar& shape) {
  require(flat.size() == shape.flat_size(), "DecisionVar::from_flat: size mismatch");
  DecisionVar out = shape.zeros_like();
  if (shape.is_vector()) {
    out.vec() = flat;
  } else if (shape.is_matrix()) {
    out.mat() = Eigen::Map<const Eigen::MatrixXd>(flat.data(), shape.mat().rows(),
                                                  shape.mat().cols());
  } else {
    Eigen::Index at = 0;
    for (size_t i = 0; i < shape.parts().size(); ++i) {
      const Eigen::Index n = shape.parts()[i].flat_size();
      out.parts()[i] = from_flat(flat.segment(at, n), shape.parts()[i]);
      at += n;
    }
  }
  return out;
}

void DecisionVar::fill_normal(Rng& rng) {
  if (is_vector()) {
    for (Eigen::Index i = 0; i < vec().size(); ++i) vec()[i] = rng.normal();
  } else if (is_matrix()) {
    for (Eigen::Index j = 0; j < mat().cols(); ++j)
      for (Eigen::Index i = 0; i < mat().rows(); ++i) mat()(i, j) = rng.normal();
  } else {
    for (auto& b : parts()) b.fill_normal(rng);
  }
}

}  // namespace shcgm
