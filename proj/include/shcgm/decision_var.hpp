#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "shcgm/rng.hpp"

namespace shcgm {

[[noreturn]] inline void fail(const std::string& msg) {
  throw std::invalid_argument(msg);
}

inline void require(bool cond, const std::string& msg) {
  if (!cond) fail(msg);
}

// Iterate storage for the solvers: a dense vector, a dense matrix, or an
// ordered list of blocks (product-space variables, possibly nested). Matrix
// iterates on symmetric domains stay symmetric because every update is a
// convex combination of symmetric terms; nothing here enforces it.
class DecisionVar {
 public:
  using Blocks = std::vector<DecisionVar>;

  DecisionVar() : data_(Eigen::VectorXd()) {}

  static DecisionVar vector(Eigen::VectorXd v) { return DecisionVar(std::move(v)); }
  static DecisionVar vector(Eigen::Index n) {
    return DecisionVar(Eigen::VectorXd(Eigen::VectorXd::Zero(n)));
  }
  static DecisionVar matrix(Eigen::MatrixXd m) { return DecisionVar(std::move(m)); }
  static DecisionVar matrix(Eigen::Index rows, Eigen::Index cols) {
    return DecisionVar(Eigen::MatrixXd(Eigen::MatrixXd::Zero(rows, cols)));
  }
  static DecisionVar blocks(Blocks b) { return DecisionVar(std::move(b)); }

  bool is_vector() const { return std::holds_alternative<Eigen::VectorXd>(data_); }
  bool is_matrix() const { return std::holds_alternative<Eigen::MatrixXd>(data_); }
  bool is_blocks() const { return std::holds_alternative<Blocks>(data_); }

  const Eigen::VectorXd& vec() const {
    require(is_vector(), "DecisionVar: not a vector");
    return std::get<Eigen::VectorXd>(data_);
  }
  Eigen::VectorXd& vec() {
    require(is_vector(), "DecisionVar: not a vector");
    return std::get<Eigen::VectorXd>(data_);
  }
  const Eigen::MatrixXd& mat() const {
    require(is_matrix(), "DecisionVar: not a matrix");
    return std::get<Eigen::MatrixXd>(data_);
  }
  Eigen::MatrixXd& mat() {
    require(is_matrix(), "DecisionVar: not a matrix");
    return std::get<Eigen::MatrixXd>(data_);
  }
  const Blocks& parts() const {
    require(is_blocks(), "DecisionVar: not a block list");
    return std::get<Blocks>(data_);
  }
  Blocks& parts() {
    require(is_blocks(), "DecisionVar: not a block list");
    return std::get<Blocks>(data_);
  }

  bool same_shape(const DecisionVar& o) const;
  Eigen::Index flat_size() const;

  DecisionVar zeros_like() const;
  void set_zero();
  void scale(double a);
  // *this += a * x
  void axpy(double a, const DecisionVar& x);
  // *this = (1 - eta) * *this + eta * t
  void blend(double eta, const DecisionVar& t);
  double dot(const DecisionVar& o) const;
  double squared_norm() const;
  double norm() const;
  double max_abs() const;
  bool all_finite() const;

  // Column-major flattening; blocks concatenate in order. Round-trips with
  // from_flat given a shape prototype.
  Eigen::VectorXd to_flat() const;
  static DecisionVar from_flat(const Eigen::VectorXd& flat, const DecisionVar& shape);

  void fill_normal(Rng& rng);

 private:
  explicit DecisionVar(Eigen::VectorXd v) : data_(std::move(v)) {}
  explicit DecisionVar(Eigen::MatrixXd m) : data_(std::move(m)) {}
  explicit DecisionVar(Blocks b) : data_(std::move(b)) {}

  std::variant<Eigen::VectorXd, Eigen::MatrixXd, Blocks> data_;
};

}  // namespace shcgm
