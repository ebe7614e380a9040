#pragma once

#include "stlrrt/barrier.hpp"
#include "stlrrt/dynamics.hpp"
#include "stlrrt/encoder.hpp"
#include "stlrrt/trajectory.hpp"

#include <optional>
#include <vector>

namespace stlrrt {

struct ControlSample {
  double t = 0.0;
  Eigen::VectorXd x;
  Eigen::VectorXd u;
  std::vector<std::vector<int>> active_rows;  ///< per active task
  double slack = 0.0;                         ///< smallest margin over all rows
};

/**
 * Min-norm CBF-QP  min ‖u‖²  s.t.  u ∈ U  and, for every task l ∈ I(t) and
 * every predicate row k on segment Υ_l(t),
 *   d_kᵀ(A x + B u + p) + e ≥ −κ (d_kᵀ x + c_k + γ_l(t)).
 * Rows are precomputed per inter-switch interval so one evaluation costs a
 * matrix-vector product when u = 0 is already feasible.
 */
class CbfQpKernel {
 public:
  CbfQpKernel(const ConjunctionBarrier& cb, const Dynamics& dyn, ClassKGain kappa);

  /// Stacked rows C u ≥ d at (x, t), including the input-set rows.
  void rows(const Eigen::VectorXd& x, double t, Eigen::MatrixXd& C, Eigen::VectorXd& d) const;

  /// Throws QpInfeasible with the worst row when no input satisfies the rows.
  Eigen::VectorXd control(const Eigen::VectorXd& x, double t, double tol = 1e-7) const;
  /// Same as control but reports infeasibility instead of throwing.
  std::optional<Eigen::VectorXd> try_control(const Eigen::VectorXd& x, double t, double tol = 1e-7) const;

  /// Barrier value b(x, t) (+∞ once no task is active).
  double barrier_value(const Eigen::VectorXd& x, double t) const;

  const ConjunctionBarrier& barrier() const { return cb_; }
  const Dynamics& dynamics() const { return dyn_; }
  ClassKGain kappa() const { return kappa_; }

 private:
  struct Block {
    Eigen::MatrixXd DB;       ///< rows·m, multiplies u
    Eigen::MatrixXd M;        ///< rows·n: κD + D A
    Eigen::VectorXd offset;   ///< κ(c + γ₀) + D p + e
    Eigen::VectorXd gamma_t;  ///< κ·dγ/dt per row
    Eigen::MatrixXd D;        ///< barrier rows, for barrier values
    Eigen::VectorXd h0;       ///< c + γ₀ per row
    Eigen::VectorXd h1;       ///< dγ/dt per row
  };
  const Block* block_at(double t) const;

  ConjunctionBarrier cb_;
  Dynamics dyn_;
  ClassKGain kappa_;
  std::vector<Block> blocks_;
};

/// One-shot control through the kernel.
Eigen::VectorXd cbf_qp_control(const ConjunctionBarrier& cb, const Dynamics& dyn, ClassKGain kappa,
                               const Eigen::VectorXd& x, double t);
/// Same program handed to a general convex solver (independent cross-check).
Eigen::VectorXd cbf_qp_control(const ConjunctionBarrier& cb, const Dynamics& dyn, ClassKGain kappa,
                               const Eigen::VectorXd& x, double t, const ConvexSolver& qp);

struct LieCheck {
  bool holds = false;
  double min_margin = 0.0;
  ControlSample sample;
};

/// Evaluates the row condition only on the tasks attaining the barrier
/// minimum and, within each, the rows attaining the predicate minimum
/// (both to 1e−8). Holds when the smallest margin is ≥ −1e−9.
LieCheck check_lie_condition(const ConjunctionBarrier& cb, const Dynamics& dyn, ClassKGain kappa,
                             const Eigen::VectorXd& x, double t, const Eigen::VectorXd& u);

struct Rollout {
  Trajectory trajectory;
  std::vector<double> barrier_values;  ///< per knot, +∞ past β_φ
  double min_barrier = 0.0;            ///< over knots in [0, β_φ]
};

/// Zero-order-hold rollout on the grid {k·dt} ∪ switch times up to `t_end`
/// (β_φ when absent). Past β_φ the input is zero.
Rollout rollout(const CbfQpKernel& kernel, const Eigen::VectorXd& x0, double dt,
                std::optional<double> t_end = std::nullopt);
Rollout rollout(const ConjunctionBarrier& cb, const Dynamics& dyn, ClassKGain kappa, const Eigen::VectorXd& x0,
                double dt, std::optional<double> t_end = std::nullopt);

struct SweepResult {
  std::size_t samples = 0;
  std::size_t failures = 0;
  double worst_violation = 0.0;
};

/// Draws `per_interval` uniform (x, t) ∈ X × (s_j, s_{j+1}) for every interval
/// and solves the CBF-QP at each. Samples are generated serially from `seed`
/// and solved in parallel.
SweepResult qp_feasibility_sweep(const CbfQpKernel& kernel, int per_interval, std::uint64_t seed, double tol = 1e-7);
SweepResult qp_feasibility_sweep_serial(const CbfQpKernel& kernel, int per_interval, std::uint64_t seed,
                                        double tol = 1e-7);

}  // namespace stlrrt
