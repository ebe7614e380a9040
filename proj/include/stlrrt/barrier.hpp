#pragma once

#include "stlrrt/formula.hpp"
#include "stlrrt/geometry.hpp"

#include <Eigen/Dense>

#include <optional>
#include <vector>

namespace stlrrt {

/// Barrier parameters (γ̄, r).
struct Theta {
  double gamma_bar = 0.0;
  double r = 0.0;
};

/// Scalar affine in θ: constant + gamma_bar·γ̄ + r·r.
struct AffineTheta {
  double constant = 0.0;
  double gamma_bar = 0.0;
  double r = 0.0;

  double eval(const Theta& th) const { return constant + gamma_bar * th.gamma_bar + r * th.r; }
};

/// Matrix whose entries are affine in θ, stored as three coefficient arrays.
struct AffineThetaMatrix {
  Eigen::MatrixXd constant;
  Eigen::MatrixXd gamma_bar;
  Eigen::MatrixXd r;

  Eigen::MatrixXd eval(const Theta& th) const { return constant + th.gamma_bar * gamma_bar + th.r * r; }
  AffineTheta at(Eigen::Index i, Eigen::Index j) const { return {constant(i, j), gamma_bar(i, j), r(i, j)}; }
};

/**
 * Time-varying barrier of one atomic task: b(x, t) = h(x) + γ(t) with
 * γ(t) = γ̄ − r − (γ̄/α)·t on [0, α) and γ(t) = −r on [α, β].
 */
struct TaskBarrier {
  AtomicTask task;
  LinearPredicate predicate;
  double alpha = 0.0;
  double beta = 0.0;
  std::optional<Theta> theta;

  /// α = 0 collapses γ to the constant segment −r.
  bool single_segment() const { return alpha == 0.0; }
};

/// Switching times per task kind; `free_time` picks α for F and FG tasks
/// (midpoint of the admissible window when absent).
TaskBarrier make_task_barrier(const AtomicTask& task, const LinearPredicate& predicate,
                              std::optional<double> free_time = std::nullopt);

double gamma_eval(const TaskBarrier& tb, double t);
int upsilon(const TaskBarrier& tb, double t);

/// γ(t) on a given segment as an affine function of θ.
AffineTheta gamma_affine(const TaskBarrier& tb, double t, int segment);
/// Slope e_i of segment i as an affine function of θ.
AffineTheta gamma_slope_affine(const TaskBarrier& tb, int segment);

struct MatrixForm {
  AffineThetaMatrix E;  ///< n_h × (n+1): [D | 1·e_i]
  AffineThetaMatrix g;  ///< n_h × 1: 1·g_i + c
};

MatrixForm matrix_form(const TaskBarrier& tb, int segment);

/**
 * Conjunction of task barriers: b(x, t) = min over active tasks
 * l ∈ I(t) = {l : β_l > t} of b_l(x, t), intersected with the state set.
 */
class ConjunctionBarrier {
 public:
  ConjunctionBarrier() = default;
  ConjunctionBarrier(std::vector<TaskBarrier> tasks, Polytope state_set, double horizon);

  const std::vector<TaskBarrier>& tasks() const { return tasks_; }
  const std::vector<double>& switch_times() const { return switch_times_; }
  double beta_phi() const { return beta_phi_; }
  double horizon() const { return horizon_; }
  const Polytope& state_set() const { return state_set_; }
  int dim() const { return state_set_.dim(); }

  bool is_bound() const;
  ConjunctionBarrier bind(const std::vector<Theta>& thetas) const;

  /// I(t) = {l : β_l > t}.
  std::vector<int> switch_map(double t) const;
  /// {l : β_l ≥ t}: the active set together with tasks ending exactly at t.
  std::vector<int> closure_map(double t) const;

  /// Index j with s_j ≤ t < s_{j+1}; -1 once t ≥ β_φ.
  int interval_index(double t) const;

  Polytope set_at(double t) const;
  Polytope limit_from_left(double t) const;
  /// State-set rows plus barrier rows of every task with β_l ≥ t.
  Polytope closure_at(double t) const;

  /// min over I(t) of h_l(x) + γ_l(t); +∞ when no task is active.
  double value(const Eigen::VectorXd& x, double t) const;

 private:
  Polytope rows_for(const std::vector<int>& tasks, double t) const;
  void require_bound() const;

  std::vector<TaskBarrier> tasks_;
  Polytope state_set_;
  double horizon_ = 0.0;
  std::vector<double> switch_times_;
  double beta_phi_ = 0.0;
};

}  // namespace stlrrt
