#include "stlrrt/dynamics.hpp"

#include "stlrrt/error.hpp"

#include <unsupported/Eigen/MatrixFunctions>

namespace stlrrt {

using Eigen::MatrixXd;
using Eigen::VectorXd;

void Dynamics::validate() const {
  const auto n_ = A.rows();
  if (A.cols() != n_) throw DimensionMismatch("A must be square");
  if (B.rows() != n_) throw DimensionMismatch("B must have as many rows as A");
  if (p.size() != n_) throw DimensionMismatch("drift p must have dimension n");
  if (state_set.dim() != n_) throw DimensionMismatch("state set dimension differs from A");
  if (input_set.dim() != B.cols()) throw DimensionMismatch("input set dimension differs from B's columns");
}

Discretization discretize(const Dynamics& dyn, double h) {
  if (!(h > 0.0)) throw InvalidArgument("discretization step must be positive");
  const int n = dyn.n();
  const int m = dyn.m();
  MatrixXd M = MatrixXd::Zero(n + m + 1, n + m + 1);
  M.topLeftCorner(n, n) = dyn.A;
  M.block(0, n, n, m) = dyn.B;
  M.block(0, n + m, n, 1) = dyn.p;
  const MatrixXd E = (M * h).exp();
  return {E.topLeftCorner(n, n), E.block(0, n, n, m), E.block(0, n + m, n, 1), h};
}

const Discretization& DiscretizationCache::get(double h) {
  auto it = cache_.find(h);
  if (it == cache_.end()) it = cache_.emplace(h, discretize(*dyn_, h)).first;
  return it->second;
}

Dynamics build_drift_integrator() {
  Dynamics d;
  d.A.resize(2, 2);
  d.A << -0.049, -0.029, -0.071, -0.049;
  d.B = MatrixXd::Identity(2, 2);
  d.p = VectorXd::Zero(2);
  d.state_set = Polytope::box(VectorXd::Constant(2, 10.0));
  d.input_set = Polytope::box(VectorXd::Constant(2, 5.0));
  return d;
}

Dynamics build_clohessy_wiltshire(double n_mean_motion) {
  if (!(n_mean_motion > 0.0)) throw InvalidArgument("mean motion must be positive");
  const double n = n_mean_motion;
  Dynamics d;
  d.A = MatrixXd::Zero(6, 6);
  d.A.topRightCorner(3, 3) = MatrixXd::Identity(3, 3);
  d.A(3, 0) = 3.0 * n * n;
  d.A(3, 4) = 2.0 * n;
  d.A(4, 3) = -2.0 * n;
  d.A(5, 2) = -n * n;
  d.B = MatrixXd::Zero(6, 3);
  d.B.bottomRows(3) = MatrixXd::Identity(3, 3);
  d.p = VectorXd::Zero(6);
  VectorXd radius(6);
  radius << 120, 120, 120, 0.5, 0.5, 0.5;
  d.state_set = Polytope::box(radius);
  d.input_set = Polytope::box(VectorXd::Constant(3, 1.5));
  return d;
}

}  // namespace stlrrt
