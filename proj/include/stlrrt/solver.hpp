#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <limits>
#include <string>

namespace stlrrt {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;
using Triplet = Eigen::Triplet<double, int>;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/**
 * Convex quadratic program
 *
 *   minimize    ½ xᵀ P x + qᵀ x
 *   subject to  G x ≤ h,  A x = b,  lb ≤ x ≤ ub.
 *
 * P may have no stored entries (linear program). Only its lower triangle is
 * read. Empty `lb`/`ub` mean no bounds; infinite entries are skipped.
 */
struct QpProblem {
  SparseMatrix P;
  Eigen::VectorXd q;
  SparseMatrix G;
  Eigen::VectorXd h;
  SparseMatrix A;
  Eigen::VectorXd b;
  Eigen::VectorXd lb;
  Eigen::VectorXd ub;

  int num_vars() const { return static_cast<int>(q.size()); }
};

enum class SolveStatus { Optimal, Infeasible, Unbounded, IterationLimit, NumericalError };

std::string to_string(SolveStatus s);

struct QpResult {
  SolveStatus status = SolveStatus::NumericalError;
  Eigen::VectorXd x;
  double objective = 0.0;
  int iterations = 0;
};

/// Anything that can solve a QpProblem. Implementations must be safe to call
/// concurrently on distinct problems.
class ConvexSolver {
 public:
  virtual ~ConvexSolver() = default;
  virtual QpResult solve(const QpProblem& problem) const = 0;
};

struct InteriorPointSettings {
  int max_iterations = 120;
  double feasibility_tol = 1e-9;
  double gap_tol = 1e-9;
  double infeasibility_tol = 1e-9;
  double regularization = 1e-9;
  int refinement_steps = 3;
  /// On iteration limit or numerical failure, minimize the largest constraint
  /// violation and report Infeasible when it stays above this threshold.
  /// Negative disables the check.
  double phase_one_threshold = 1e-7;
};

/// Sparse primal-dual interior-point method (Mehrotra predictor-corrector)
/// on the regularized quasidefinite KKT system.
class InteriorPointSolver final : public ConvexSolver {
 public:
  InteriorPointSolver() = default;
  explicit InteriorPointSolver(InteriorPointSettings settings) : settings_(settings) {}

  QpResult solve(const QpProblem& problem) const override;

  const InteriorPointSettings& settings() const { return settings_; }

 private:
  QpResult solve_direct(const QpProblem& problem) const;
  InteriorPointSettings settings_;
};

/// Result of a least-distance program  min ‖u‖₂  s.t.  C u ≥ d.
struct LeastDistanceResult {
  bool feasible = false;
  Eigen::VectorXd u;
  /// Largest violation d_i − c_iᵀu over rows normalized to unit length.
  double max_violation = 0.0;
  int worst_row = -1;
};

/// Dense solver for small least-distance programs via the Lawson–Hanson
/// reduction to nonnegative least squares. Rows with violation at most `tol`
/// after normalization count as satisfied.
LeastDistanceResult least_distance(const Eigen::MatrixXd& C, const Eigen::VectorXd& d,
                                   double tol = 1e-9);

/// Nonnegative least squares  min ‖E λ − f‖  s.t. λ ≥ 0 (Lawson–Hanson).
Eigen::VectorXd nnls(const Eigen::MatrixXd& E, const Eigen::VectorXd& f, int max_iterations = 0);

}  // namespace stlrrt
