#pragma once

#include "stlrrt/solver.hpp"

#include <Eigen/Dense>

#include <optional>
#include <random>
#include <string>
#include <vector>

namespace stlrrt {

using Rng = std::mt19937_64;

/// Bounded H-polytope {x : A x ≤ b}. Boundedness is verified on construction
/// (box detection first, recession-cone LPs otherwise). May be empty.
class Polytope {
 public:
  Polytope() = default;
  Polytope(Eigen::MatrixXd A, Eigen::VectorXd b);

  /// Axis-aligned box lo ≤ x ≤ hi.
  static Polytope box(const Eigen::VectorXd& lo, const Eigen::VectorXd& hi);
  /// Symmetric box |x_i| ≤ r_i.
  static Polytope box(const Eigen::VectorXd& radius);

  /// Adds rows to a polytope already known to be bounded.
  Polytope with_rows(const Eigen::MatrixXd& A, const Eigen::VectorXd& b) const;

  const Eigen::MatrixXd& A() const { return A_; }
  const Eigen::VectorXd& b() const { return b_; }
  int dim() const { return static_cast<int>(A_.cols()); }
  int rows() const { return static_cast<int>(A_.rows()); }

  /// Per-coordinate bounds if every row has exactly one nonzero.
  bool is_box() const { return is_box_; }

 private:
  struct Trusted {};
  Polytope(Eigen::MatrixXd A, Eigen::VectorXd b, Trusted);
  void detect_box();

  Eigen::MatrixXd A_;
  Eigen::VectorXd b_;
  bool is_box_ = false;
};

/// h(x) = min_k (d_kᵀ x + c_k).
struct LinearPredicate {
  Eigen::MatrixXd D;
  Eigen::VectorXd c;

  int dim() const { return static_cast<int>(D.cols()); }
  int rows() const { return static_cast<int>(D.rows()); }
};

struct VertexSet {
  std::vector<Eigen::VectorXd> vertices;
  std::string source;

  std::size_t size() const { return vertices.size(); }
};

double predicate_value(const LinearPredicate& h, const Eigen::Ref<const Eigen::VectorXd>& x);

/// {x : D x + c ≥ r·1} ∩ P as a polytope.
Polytope superlevel_set(const LinearPredicate& h, double r, const Polytope& P);

bool contains(const Polytope& P, const Eigen::VectorXd& x, double tol = 1e-7);

/// Exact vertex list. Boxes use the corner formula; other polytopes solve
/// every dim-subset of facets in parallel.
VertexSet enumerate_vertices(const Polytope& P);

/// Serial reference for the facet-combination enumeration.
VertexSet enumerate_vertices_serial(const Polytope& P);

/// V × {s_lo, s_hi} in R^{n+1}; the first |V| points carry s_lo.
VertexSet space_time_vertices(const VertexSet& V, double s_lo, double s_hi);

struct ChebyshevBall {
  Eigen::VectorXd center;
  double radius = 0.0;
};

/// Largest inscribed ball; nullopt when P is empty.
std::optional<ChebyshevBall> chebyshev_center(const Polytope& P, const ConvexSolver& solver);

/// Axis-aligned bounding box (lo, hi) of a nonempty polytope.
std::pair<Eigen::VectorXd, Eigen::VectorXd> bounding_box(const Polytope& P, const ConvexSolver& solver);

struct SamplerSettings {
  int rejection_cap = 10000;
  int burn_in_per_dim = 50;
};

/// Approximately uniform sample: bounding-box rejection, then hit-and-run
/// from the Chebyshev center once the rejection cap is exhausted.
Eigen::VectorXd sample_uniform(const Polytope& P, Rng& rng, const ConvexSolver& solver,
                               const SamplerSettings& settings = {});
Eigen::VectorXd sample_uniform(const Polytope& P, Rng& rng);

}  // namespace stlrrt
