#pragma once

#include "stlrrt/barrier.hpp"
#include "stlrrt/dynamics.hpp"
#include "stlrrt/solver.hpp"

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace stlrrt {

/// Linear class-K function κ(s) = kappa_gain·s.
struct ClassKGain {
  double kappa_gain = 1.0;
  double operator()(double s) const { return kappa_gain * s; }
};

/// Constraint families of the parameter LP.
enum class RowTag { Param, PredicateNonempty, Input, Initial, Viability, Invariance };

std::string to_string(RowTag tag);

/// Rows of one inter-switch interval: vertex times, active tasks and segments.
struct LpInterval {
  double s_lo = 0.0;
  double s_hi = 0.0;
  std::vector<int> active;    ///< task indices in I(s_lo)
  std::vector<int> segments;  ///< Υ_l(s_lo), parallel to `active`
  int u_offset = 0;           ///< first vertex-input variable; vertex q uses [u_offset + q·m, +m)
};

struct LpLayout {
  ConjunctionBarrier barrier;  ///< unbound
  Dynamics dyn;
  Eigen::VectorXd x0;
  ClassKGain kappa;
  double r_min = 1e-3;

  VertexSet state_vertices;
  std::vector<LpInterval> intervals;
  std::vector<int> gamma_bar_var;
  std::vector<int> r_var;
  std::vector<int> xi_offset;  ///< viability witness ξ_l, n variables each
  std::vector<int> w_offset;   ///< H^r witness w_l, n variables each
  int num_vars = 0;

  QpProblem lp;  ///< objective −Σ r_l, rows G x ≤ h
  std::vector<RowTag> row_tags;

  std::map<RowTag, int> row_counts() const;
  /// Row counts predicted from the layout dimensions alone.
  std::map<RowTag, int> expected_row_counts() const;
};

/// Builds the parameter LP. Requires kappa_gain > 0, r_min > 0 and x0 ∈ X.
LpLayout build_lp(const ConjunctionBarrier& barrier, const Dynamics& dyn, const Eigen::VectorXd& x0,
                  ClassKGain kappa = {}, double r_min = 1e-3);

struct EncodingResult {
  SolveStatus status = SolveStatus::NumericalError;
  std::optional<ConjunctionBarrier> barrier;  ///< bound on success
  std::vector<double> r;                      ///< r_l* per task
  double objective = 0.0;
  double solve_seconds = 0.0;
  std::optional<RowTag> infeasible_block;
  std::vector<Eigen::VectorXd> viability_witnesses;  ///< ξ_l*
  std::vector<Eigen::VectorXd> hr_witnesses;         ///< w_l*
  Eigen::VectorXd solution;
  std::shared_ptr<const LpLayout> layout;

  bool optimal() const { return status == SolveStatus::Optimal; }
  /// min_l r_l* (+∞ for an empty conjunction).
  double robustness() const;
  /// Vertex input u_q of interval j.
  Eigen::VectorXd vertex_input(int interval, int vertex) const;
};

/// Solves the LP. Infeasible LPs are diagnosed by dropping one row block at
/// a time (invariance, viability, initial, nonemptiness, input, parameters)
/// and reporting the first whose removal restores feasibility.
/// Throws SolverFailure when the solver does not reach a verdict.
EncodingResult solve_lp(const LpLayout& layout, const ConvexSolver& solver);

/// Convenience: default solver settings tuned for the parameter LP.
const ConvexSolver& default_lp_solver();

struct DisjunctionResult {
  int selected = -1;
  std::vector<EncodingResult> results;
};

/// Relative margin a later disjunct must exceed to displace an earlier one.
inline constexpr double kSelectionTieTol = 1e-7;

/// Encodes every disjunct (in parallel) and selects the feasible one with the
/// largest min_l r_l*; ties within kSelectionTieTol go to the lowest index.
/// Throws AllInfeasible.
DisjunctionResult encode_disjunction(const std::vector<ConjunctionBarrier>& disjuncts, const Dynamics& dyn,
                                     const Eigen::VectorXd& x0, ClassKGain kappa, double r_min,
                                     const ConvexSolver& solver);

/// Serial reference of encode_disjunction.
DisjunctionResult encode_disjunction_serial(const std::vector<ConjunctionBarrier>& disjuncts, const Dynamics& dyn,
                                            const Eigen::VectorXd& x0, ClassKGain kappa, double r_min,
                                            const ConvexSolver& solver);

/// Builds the unbound conjunction barrier of one disjunct.
ConjunctionBarrier make_conjunction(const std::vector<AtomicTask>& tasks,
                                    const std::map<std::string, LinearPredicate>& predicates, const Polytope& state_set,
                                    double horizon, const std::map<std::size_t, double>& free_times = {});

}  // namespace stlrrt
