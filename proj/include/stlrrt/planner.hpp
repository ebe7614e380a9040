#pragma once

#include "stlrrt/barrier.hpp"
#include "stlrrt/dynamics.hpp"
#include "stlrrt/solver.hpp"
#include "stlrrt/trajectory.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace stlrrt {

struct PlannerParams {
  Eigen::MatrixXd Q;
  Eigen::MatrixXd R;
  double delta_max = 10.0;
  double eps_rewire = 5.0;
  int n_max = 500;
  double dt = 0.5;
  double collision_resolution = 0.0;  ///< dt/4 when ≤ 0
  std::uint64_t seed = 0;
  double goal_bias = 0.1;        ///< probability of sampling t̃ = t_hr
  int rewire_cap = 25;
  double time_scale = 1.0;       ///< weight of |Δt| in dist
  double membership_tol = 1e-7;

  double resolution() const { return collision_resolution > 0.0 ? collision_resolution : dt / 4.0; }
  /// Throws InvalidArgument on non-PD weights or nonpositive scalars.
  void validate(int n, int m) const;
};

struct PlanNode {
  Eigen::VectorXd x;
  double t = 0.0;
  int parent = -1;
  int edge = -1;  ///< incoming edge id
  double cost_to_go = 0.0;
  std::vector<int> children;
};

/// Time-consistent tree rooted at (x0, 0).
class PlanTree {
 public:
  PlanTree(const Eigen::VectorXd& x0, int input_dim);

  const std::vector<PlanNode>& nodes() const { return nodes_; }
  const PlanNode& node(int i) const { return nodes_.at(static_cast<std::size_t>(i)); }
  const Trajectory& edge(int e) const { return edges_.at(static_cast<std::size_t>(e)); }
  std::size_t size() const { return nodes_.size(); }

  /// Adds a node at the end of `edge`, which must start at the parent.
  int insert(int parent, Trajectory edge);

  bool is_ancestor(int a, int of) const;

  /// Reparents r onto j through `edge` when strictly cheaper; returns whether
  /// the tree changed. No-op when j lies in r's subtree.
  bool rewire(int j, int r, Trajectory edge);

  /// Path length recomputed from the root for every node.
  std::vector<double> recompute_costs() const;
  /// Largest |cached − recomputed| cost difference.
  double audit() const;

  /// Concatenated edges on the root path of node i.
  Trajectory path_to(int i) const;

 private:
  std::vector<PlanNode> nodes_;
  std::vector<Trajectory> edges_;
  int input_dim_ = 0;
};

double dist(const Eigen::VectorXd& xa, double ta, const Eigen::VectorXd& xb, double tb, double time_scale = 1.0);

/// argmin dist over nodes with t ≤ t̃ − min_gap; ties go to the lowest id.
int past_nn(const PlanTree& tree, const Eigen::VectorXd& x, double t, double time_scale = 1.0, double min_gap = 0.0);

/// Nodes within eps of j with t_r ≥ t_j, excluding j and its ancestors,
/// sorted by dist (then id).
std::vector<int> future_nns(const PlanTree& tree, int j, double eps, double time_scale = 1.0);

/// Knot grid t_from + k·dt up to t_to with every switch time in between
/// inserted.
std::vector<double> knot_grid(const ConjunctionBarrier& cb, double t_from, double t_to, double dt);

/// Transcription shared by steer and bridge. Throws ZeroDuration when the span
/// is shorter than dt and QpInfeasible when the program has no solution.
Trajectory steer(const Eigen::VectorXd& x_from, double t_from, const Eigen::VectorXd& x_target, double t_target,
                 const ConjunctionBarrier& cb, const Dynamics& dyn, const PlannerParams& params,
                 const ConvexSolver& qp);
Trajectory bridge(const Eigen::VectorXd& x_from, double t_from, const Eigen::VectorXd& x_to, double t_to,
                  const ConjunctionBarrier& cb, const Dynamics& dyn, const PlannerParams& params,
                  const ConvexSolver& qp);

/// Samples the linear interpolation at `resolution` plus every knot.
bool collision_free(const Trajectory& traj, const std::vector<Polytope>& obstacles, double resolution);

/// Same sampling, checked against the closure of the barrier set.
bool inside_barrier(const Trajectory& traj, const ConjunctionBarrier& cb, double resolution, double tol = 1e-7);

struct PlanStats {
  std::uint64_t seed = 0;
  int iterations = 0;
  int nodes = 0;
  int first_iteration = -1;
  double first_cost = 0.0;
  double best_cost = 0.0;
  int best_iteration = -1;
  double first_wall_seconds = 0.0;
  double best_wall_seconds = 0.0;
  double total_wall_seconds = 0.0;
  int zero_duration = 0;
  int steer_infeasible = 0;
  int collision_rejections = 0;
  int membership_rejections = 0;
  int bridge_attempts = 0;
  int bridge_pruned = 0;
  int bridge_infeasible = 0;
  int rewires = 0;
  int audits = 0;
  double max_audit_error = 0.0;
  std::vector<std::pair<int, double>> best_cost_history;  ///< (iteration, cost) on every improvement
};

struct PlanResult {
  Trajectory trajectory;
  PlanStats stats;
  PlanTree tree;
  int goal_node = -1;
};

/// Runs n_max iterations on a bound barrier. t_hr is the formula horizon.
/// Throws NoSolution when no node reaches t_hr.
PlanResult plan(const ConjunctionBarrier& cb, const Dynamics& dyn, const Eigen::VectorXd& x0, double t_hr,
                const std::vector<Polytope>& obstacles, const PlannerParams& params, const ConvexSolver& qp);

/// Solver settings used for steer and bridge programs.
const ConvexSolver& default_planner_solver();

}  // namespace stlrrt
