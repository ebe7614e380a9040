#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace stlrrt {

/// Knotted signal with piecewise-linear interpolation, exact at knots.
class SampledSignal {
 public:
  SampledSignal() = default;
  explicit SampledSignal(int dim) : dim_(dim) {}

  int dim() const { return dim_; }
  std::size_t size() const { return times_.size(); }
  bool empty() const { return times_.empty(); }
  const std::vector<double>& times() const { return times_; }
  double front_time() const { return times_.front(); }
  double back_time() const { return times_.back(); }

  /// Appends a knot; times must be strictly increasing.
  void push_back(double t, const Eigen::Ref<const Eigen::VectorXd>& x);
  void reserve(std::size_t n);

  Eigen::Map<const Eigen::VectorXd> state(std::size_t k) const {
    return {values_.data() + k * static_cast<std::size_t>(dim_), dim_};
  }
  /// State at t; clamps outside the knot range.
  Eigen::VectorXd at(double t) const;

 private:
  int dim_ = 0;
  std::vector<double> times_;
  std::vector<double> values_;
};

/// States on knots plus a zero-order-hold input on every knot interval.
struct Trajectory {
  SampledSignal states;
  int input_dim = 0;
  std::vector<double> inputs;  ///< (size − 1)·input_dim, row k held on [t_k, t_{k+1})

  Trajectory() = default;
  Trajectory(int n, int m) : states(n), input_dim(m) {}

  std::size_t size() const { return states.size(); }
  const std::vector<double>& times() const { return states.times(); }
  Eigen::Map<const Eigen::VectorXd> state(std::size_t k) const { return states.state(k); }
  Eigen::Map<const Eigen::VectorXd> input(std::size_t k) const {
    return {inputs.data() + k * static_cast<std::size_t>(input_dim), input_dim};
  }

  void push_back(double t, const Eigen::Ref<const Eigen::VectorXd>& x);
  /// Records the input held from the previous knot to the next one.
  void push_input(const Eigen::Ref<const Eigen::VectorXd>& u);

  /// Appends `next`, whose first knot must equal this trajectory's last.
  void append(const Trajectory& next);

  /// Σ ‖x_{k+1} − x_k‖₂.
  double path_length() const;
};

/// Columns t, x1..xn, u1..um at 17 significant digits. The final row repeats
/// the last held input.
void write_csv(const Trajectory& traj, const std::string& path);
/// Reads a CSV written by write_csv; `state_dim` splits state and input columns
/// (all non-time columns are states when negative).
Trajectory read_csv(const std::string& path, int state_dim = -1);

}  // namespace stlrrt
