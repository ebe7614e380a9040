#include "stlrrt/geometry.hpp"

#include "stlrrt/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace stlrrt {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

const InteriorPointSolver& default_solver() {
  static const InteriorPointSolver solver;
  return solver;
}

// Maximizes ±d_i over the recession cone {d : A d ≤ 0} ∩ [−1, 1]ⁿ.
bool recession_cone_trivial(const MatrixXd& A) {
  const int n = static_cast<int>(A.cols());
  QpProblem lp;
  lp.G = A.sparseView();
  lp.h = VectorXd::Zero(A.rows());
  lp.lb = VectorXd::Constant(n, -1.0);
  lp.ub = VectorXd::Constant(n, 1.0);
  for (int i = 0; i < n; ++i) {
    for (double sign : {1.0, -1.0}) {
      lp.q = VectorXd::Zero(n);
      lp.q[i] = -sign;
      const QpResult res = default_solver().solve(lp);
      if (res.status != SolveStatus::Optimal) throw SolverFailure("boundedness check failed: " + to_string(res.status));
      if (-res.objective > 1e-7) return false;
    }
  }
  return true;
}

std::vector<std::vector<int>> combinations(int p, int k) {
  std::vector<std::vector<int>> out;
  std::vector<int> idx(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) idx[static_cast<std::size_t>(i)] = i;
  if (k > p) return out;
  while (true) {
    out.push_back(idx);
    int i = k - 1;
    while (i >= 0 && idx[static_cast<std::size_t>(i)] == p - k + i) --i;
    if (i < 0) break;
    ++idx[static_cast<std::size_t>(i)];
    for (int j = i + 1; j < k; ++j) idx[static_cast<std::size_t>(j)] = idx[static_cast<std::size_t>(j - 1)] + 1;
  }
  return out;
}

std::optional<VectorXd> facet_intersection(const Polytope& P, const std::vector<int>& rows, double tol) {
  const int n = P.dim();
  MatrixXd M(n, n);
  VectorXd rhs(n);
  for (int i = 0; i < n; ++i) {
    M.row(i) = P.A().row(rows[static_cast<std::size_t>(i)]);
    rhs[i] = P.b()[rows[static_cast<std::size_t>(i)]];
  }
  Eigen::FullPivLU<MatrixXd> lu(M);
  if (lu.rank() < n) return std::nullopt;
  VectorXd v = lu.solve(rhs);
  if (!contains(P, v, tol)) return std::nullopt;
  return v;
}

VertexSet box_vertices(const Polytope& P) {
  const int n = P.dim();
  VectorXd lo = VectorXd::Constant(n, -kInf), hi = VectorXd::Constant(n, kInf);
  for (int i = 0; i < P.rows(); ++i) {
    Eigen::Index j;
    const double a = P.A().row(i).cwiseAbs().maxCoeff(&j);
    const double coef = P.A()(i, j);
    if (coef > 0) hi[j] = std::min(hi[j], P.b()[i] / coef);
    else lo[j] = std::max(lo[j], P.b()[i] / coef);
    (void)a;
  }
  VertexSet out;
  out.source = "box";
  if ((lo.array() > hi.array()).any()) return out;
  const std::size_t count = std::size_t{1} << n;
  for (std::size_t idx = 0; idx < count; ++idx) {
    VectorXd v(n);
    for (int k = 0; k < n; ++k) v[k] = ((idx >> k) & 1U) ? hi[k] : lo[k];
    out.vertices.push_back(v);
  }
  // A degenerate box (lo = hi in some coordinate) repeats corners.
  std::vector<VectorXd> unique;
  for (auto& v : out.vertices) {
    bool dup = false;
    for (const auto& u : unique)
      if ((u - v).cwiseAbs().maxCoeff() == 0.0) dup = true;
    if (!dup) unique.push_back(v);
  }
  out.vertices = std::move(unique);
  return out;
}

double scale_of(const Polytope& P) { return std::max(1.0, P.b().cwiseAbs().maxCoeff()); }

VertexSet dedup(std::vector<std::optional<VectorXd>>& candidates, double tol, std::string source) {
  VertexSet out;
  out.source = std::move(source);
  for (auto& c : candidates) {
    if (!c) continue;
    bool dup = false;
    for (const auto& v : out.vertices)
      if ((v - *c).cwiseAbs().maxCoeff() <= tol) {
        dup = true;
        break;
      }
    if (!dup) out.vertices.push_back(std::move(*c));
  }
  return out;
}

void check_enumerable(const Polytope& P) {
  if (P.dim() > 8) throw DimensionTooLarge("vertex enumeration is limited to dimension 8, got " + std::to_string(P.dim()));
}

}  // namespace

Polytope::Polytope(MatrixXd A, VectorXd b) : A_(std::move(A)), b_(std::move(b)) {
  if (A_.rows() != b_.size())
    throw DimensionMismatch("polytope has " + std::to_string(A_.rows()) + " rows but b has " + std::to_string(b_.size()));
  if (A_.rows() < A_.cols() + 1)
    throw InvalidArgument("a bounded polytope in dimension " + std::to_string(A_.cols()) + " needs at least " +
                          std::to_string(A_.cols() + 1) + " rows");
  if (!A_.allFinite() || b_.hasNaN()) throw InvalidArgument("polytope data must be finite");
  detect_box();
  if (!is_box_ && !recession_cone_trivial(A_)) throw Unbounded("polytope is unbounded");
}

Polytope::Polytope(MatrixXd A, VectorXd b, Trusted) : A_(std::move(A)), b_(std::move(b)) { detect_box(); }

void Polytope::detect_box() {
  const int n = static_cast<int>(A_.cols());
  std::vector<char> has_lo(static_cast<std::size_t>(n), 0), has_hi(static_cast<std::size_t>(n), 0);
  for (Eigen::Index i = 0; i < A_.rows(); ++i) {
    int nonzeros = 0;
    Eigen::Index col = 0;
    for (Eigen::Index j = 0; j < n; ++j)
      if (A_(i, j) != 0.0) {
        ++nonzeros;
        col = j;
      }
    if (nonzeros != 1) {
      is_box_ = false;
      return;
    }
    (A_(i, col) > 0 ? has_hi : has_lo)[static_cast<std::size_t>(col)] = 1;
  }
  is_box_ = std::all_of(has_lo.begin(), has_lo.end(), [](char c) { return c; }) &&
            std::all_of(has_hi.begin(), has_hi.end(), [](char c) { return c; });
}

Polytope Polytope::box(const VectorXd& lo, const VectorXd& hi) {
  if (lo.size() != hi.size()) throw DimensionMismatch("box bounds differ in dimension");
  const Eigen::Index n = lo.size();
  MatrixXd A(2 * n, n);
  A << MatrixXd::Identity(n, n), -MatrixXd::Identity(n, n);
  VectorXd b(2 * n);
  b << hi, -lo;
  return Polytope(std::move(A), std::move(b));
}

Polytope Polytope::box(const VectorXd& radius) { return box(-radius, radius); }

Polytope Polytope::with_rows(const MatrixXd& A, const VectorXd& b) const {
  if (A.cols() != A_.cols() || A.rows() != b.size()) throw DimensionMismatch("appended rows have the wrong shape");
  MatrixXd A2(A_.rows() + A.rows(), A_.cols());
  A2 << A_, A;
  VectorXd b2(b_.size() + b.size());
  b2 << b_, b;
  return Polytope(std::move(A2), std::move(b2), Trusted{});
}

double predicate_value(const LinearPredicate& h, const Eigen::Ref<const VectorXd>& x) {
  if (h.D.cols() != x.size())
    throw DimensionMismatch("predicate dimension " + std::to_string(h.D.cols()) + " vs point " + std::to_string(x.size()));
  double v = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < h.D.rows(); ++i) v = std::min(v, h.D.row(i).dot(x) + h.c[i]);
  return v;
}

Polytope superlevel_set(const LinearPredicate& h, double r, const Polytope& P) {
  return P.with_rows(-h.D, h.c - VectorXd::Constant(h.rows(), r));
}

bool contains(const Polytope& P, const VectorXd& x, double tol) {
  if (P.dim() != x.size())
    throw DimensionMismatch("polytope dimension " + std::to_string(P.dim()) + " vs point " + std::to_string(x.size()));
  for (Eigen::Index i = 0; i < P.A().rows(); ++i)
    if (P.A().row(i).dot(x) > P.b()[i] + tol) return false;
  return true;
}

VertexSet enumerate_vertices(const Polytope& P) {
  check_enumerable(P);
  if (P.is_box()) return box_vertices(P);
  const auto combos = combinations(P.rows(), P.dim());
  const double tol = 1e-9 * scale_of(P);
  std::vector<std::optional<VectorXd>> found(combos.size());
#pragma omp parallel for schedule(dynamic, 64)
  for (std::ptrdiff_t k = 0; k < static_cast<std::ptrdiff_t>(combos.size()); ++k)
    found[static_cast<std::size_t>(k)] = facet_intersection(P, combos[static_cast<std::size_t>(k)], tol);
  return dedup(found, tol, "facet-combinations");
}

VertexSet enumerate_vertices_serial(const Polytope& P) {
  check_enumerable(P);
  const auto combos = combinations(P.rows(), P.dim());
  const double tol = 1e-9 * scale_of(P);
  std::vector<std::optional<VectorXd>> found;
  found.reserve(combos.size());
  for (const auto& c : combos) found.push_back(facet_intersection(P, c, tol));
  return dedup(found, tol, "facet-combinations");
}

VertexSet space_time_vertices(const VertexSet& V, double s_lo, double s_hi) {
  if (!(s_lo < s_hi)) throw EmptyInterval("space-time interval [" + std::to_string(s_lo) + ", " + std::to_string(s_hi) + "] is empty");
  VertexSet out;
  out.source = V.source + " x time";
  for (double s : {s_lo, s_hi})
    for (const auto& v : V.vertices) {
      VectorXd z(v.size() + 1);
      z << v, s;
      out.vertices.push_back(std::move(z));
    }
  return out;
}

std::optional<ChebyshevBall> chebyshev_center(const Polytope& P, const ConvexSolver& solver) {
  const int n = P.dim();
  const int p = P.rows();
  MatrixXd G(p + 1, n + 1);
  G.setZero();
  G.topLeftCorner(p, n) = P.A();
  for (int i = 0; i < p; ++i) G(i, n) = P.A().row(i).norm();
  G(p, n) = -1.0;
  VectorXd h(p + 1);
  h << P.b(), 0.0;
  QpProblem lp;
  lp.q = VectorXd::Zero(n + 1);
  lp.q[n] = -1.0;
  lp.G = G.sparseView();
  lp.h = h;
  const QpResult res = solver.solve(lp);
  if (res.status == SolveStatus::Infeasible) return std::nullopt;
  if (res.status != SolveStatus::Optimal) throw SolverFailure("Chebyshev-center LP: " + to_string(res.status));
  ChebyshevBall ball{res.x.head(n), std::max(0.0, res.x[n])};
  if (!contains(P, ball.center, 1e-7)) return std::nullopt;
  return ball;
}

std::pair<VectorXd, VectorXd> bounding_box(const Polytope& P, const ConvexSolver& solver) {
  const int n = P.dim();
  VectorXd lo = VectorXd::Constant(n, -kInf), hi = VectorXd::Constant(n, kInf);
  for (int i = 0; i < P.rows(); ++i) {
    int nonzeros = 0;
    int col = 0;
    for (int j = 0; j < n; ++j)
      if (P.A()(i, j) != 0.0) {
        ++nonzeros;
        col = j;
      }
    if (nonzeros != 1) continue;
    const double coef = P.A()(i, col);
    if (coef > 0) hi[col] = std::min(hi[col], P.b()[i] / coef);
    else lo[col] = std::max(lo[col], P.b()[i] / coef);
  }
  QpProblem lp;
  lp.G = P.A().sparseView();
  lp.h = P.b();
  for (int j = 0; j < n; ++j) {
    for (double sign : {1.0, -1.0}) {
      double& bound = sign > 0 ? hi[j] : lo[j];
      if (std::isfinite(bound)) continue;
      lp.q = VectorXd::Zero(n);
      lp.q[j] = -sign;
      const QpResult res = solver.solve(lp);
      if (res.status == SolveStatus::Infeasible) throw EmptySet("bounding box of an empty polytope");
      if (res.status != SolveStatus::Optimal) throw SolverFailure("bounding-box LP: " + to_string(res.status));
      bound = res.x[j];
    }
  }
  return {lo, hi};
}

VectorXd sample_uniform(const Polytope& P, Rng& rng, const ConvexSolver& solver, const SamplerSettings& settings) {
  const int n = P.dim();
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const auto [lo, hi] = bounding_box(P, solver);
  if ((lo.array() > hi.array()).any()) throw EmptySet("polytope is empty");
  auto draw_in_box = [&]() {
    VectorXd x(n);
    for (int j = 0; j < n; ++j) x[j] = lo[j] + unit(rng) * (hi[j] - lo[j]);
    return x;
  };
  if (P.is_box()) return draw_in_box();

  for (int k = 0; k < settings.rejection_cap; ++k) {
    VectorXd x = draw_in_box();
    if (contains(P, x, 0.0)) return x;
  }

  const auto ball = chebyshev_center(P, solver);
  if (!ball) throw EmptySet("no interior point found: polytope is empty");
  VectorXd x = ball->center;
  if (ball->radius <= 1e-12) return x;

  std::normal_distribution<double> normal(0.0, 1.0);
  const int steps = settings.burn_in_per_dim * n;
  for (int k = 0; k < steps; ++k) {
    VectorXd dir(n);
    for (int j = 0; j < n; ++j) dir[j] = normal(rng);
    dir.normalize();
    double t_lo = -kInf, t_hi = kInf;
    for (int i = 0; i < P.rows(); ++i) {
      const double ad = P.A().row(i).dot(dir);
      const double slack = P.b()[i] - P.A().row(i).dot(x);
      if (ad > 1e-14) t_hi = std::min(t_hi, slack / ad);
      else if (ad < -1e-14) t_lo = std::max(t_lo, slack / ad);
    }
    if (!(t_lo <= t_hi) || !std::isfinite(t_lo) || !std::isfinite(t_hi)) continue;
    const VectorXd next = x + (t_lo + unit(rng) * (t_hi - t_lo)) * dir;
    if (contains(P, next, 0.0)) x = next;
  }
  return x;
}

VectorXd sample_uniform(const Polytope& P, Rng& rng) { return sample_uniform(P, rng, default_solver()); }

}  // namespace stlrrt
