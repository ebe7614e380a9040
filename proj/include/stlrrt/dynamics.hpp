#pragma once

#include "stlrrt/geometry.hpp"

#include <Eigen/Dense>

#include <map>

namespace stlrrt {

/// ẋ = A x + B u + p with x ∈ X (state_set) and u ∈ U (input_set).
struct Dynamics {
  Eigen::MatrixXd A;
  Eigen::MatrixXd B;
  Eigen::VectorXd p;
  Polytope state_set;
  Polytope input_set;

  int n() const { return static_cast<int>(A.rows()); }
  int m() const { return static_cast<int>(B.cols()); }

  /// Throws DimensionMismatch on inconsistent shapes.
  void validate() const;
};

/// Exact zero-order-hold map x⁺ = Ad x + Bd u + pd over a step h.
struct Discretization {
  Eigen::MatrixXd Ad;
  Eigen::MatrixXd Bd;
  Eigen::VectorXd pd;
  double h = 0.0;
};

/// Augmented matrix exponential exp([[A, B, p], [0, 0, 0]]·h).
Discretization discretize(const Dynamics& dyn, double h);

/// Memoizes discretizations by step length.
class DiscretizationCache {
 public:
  explicit DiscretizationCache(const Dynamics& dyn) : dyn_(&dyn) {}
  const Discretization& get(double h);

 private:
  const Dynamics* dyn_;
  std::map<double, Discretization> cache_;
};

/// Planar single integrator with position-dependent drift, |x|∞ ≤ 10, |u|∞ ≤ 5.
Dynamics build_drift_integrator();

/// Clohessy–Wiltshire relative motion with mean motion `n_mean_motion`
/// (rad/s), |p|∞ ≤ 120 m, |v|∞ ≤ 0.5 m/s, |u|∞ ≤ 1.5.
Dynamics build_clohessy_wiltshire(double n_mean_motion = 1.13e-3);

}  // namespace stlrrt
