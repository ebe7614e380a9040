#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "stlrrt/solver.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <random>

using namespace stlrrt;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

SparseMatrix sparse(const MatrixXd& M) { return M.sparseView(); }

QpProblem lp(const MatrixXd& G, const VectorXd& h, const VectorXd& q) {
  QpProblem p;
  p.P.resize(q.size(), q.size());
  p.q = q;
  p.G = sparse(G);
  p.h = h;
  p.A.resize(0, q.size());
  p.b.resize(0);
  return p;
}

struct BruteForce {
  bool feasible = false;
  double objective = std::numeric_limits<double>::infinity();
};

// Optimum of a bounded 2-D LP by enumerating every pairwise row intersection.
BruteForce brute_force_lp(const MatrixXd& G, const VectorXd& h, const VectorXd& q) {
  BruteForce out;
  for (int i = 0; i < G.rows(); ++i)
    for (int j = i + 1; j < G.rows(); ++j) {
      Eigen::Matrix2d M;
      M << G.row(i), G.row(j);
      if (std::abs(M.determinant()) < 1e-12) continue;
      const Eigen::Vector2d x = M.inverse() * (Eigen::Vector2d(h[i], h[j]));
      if (((G * x - h).array() > 1e-9).any()) continue;
      out.feasible = true;
      out.objective = std::min(out.objective, q.dot(x));
    }
  return out;
}

// Minimum-norm point of {u : C u ≥ d} in R² by checking the origin, every
// single-row projection and every two-row intersection.
std::optional<Eigen::Vector2d> brute_force_ldp(const MatrixXd& C, const VectorXd& d) {
  std::vector<Eigen::Vector2d> cands{Eigen::Vector2d::Zero()};
  for (int i = 0; i < C.rows(); ++i) {
    const Eigen::Vector2d c = C.row(i).transpose();
    cands.push_back(c * d[i] / c.squaredNorm());
    for (int j = i + 1; j < C.rows(); ++j) {
      Eigen::Matrix2d M;
      M << C.row(i), C.row(j);
      if (std::abs(M.determinant()) < 1e-12) continue;
      cands.push_back(M.inverse() * (Eigen::Vector2d(d[i], d[j])));
    }
  }
  std::optional<Eigen::Vector2d> best;
  for (const auto& u : cands) {
    if (((C * u - d).array() < -1e-9).any()) continue;
    if (!best || u.norm() < best->norm()) best = u;
  }
  return best;
}

}  // namespace

TEST_CASE("two-variable LP reaches the vertex optimum") {
  MatrixXd G(4, 2);
  G << 1, 2, 3, 1, -1, 0, 0, -1;
  VectorXd h(4);
  h << 4, 6, 0, 0;
  VectorXd q(2);
  q << -1, -1;
  const QpResult r = InteriorPointSolver().solve(lp(G, h, q));
  REQUIRE(r.status == SolveStatus::Optimal);
  // x + 2y = 4 and 3x + y = 6 meet at (1.6, 1.2).
  CHECK(r.x[0] == doctest::Approx(1.6).epsilon(1e-7));
  CHECK(r.x[1] == doctest::Approx(1.2).epsilon(1e-7));
  CHECK(r.objective == doctest::Approx(-2.8).epsilon(1e-7));
}

TEST_CASE("contradictory bounds are reported infeasible") {
  MatrixXd G(2, 1);
  G << 1, -1;
  VectorXd h(2);
  h << -1, -1;
  const QpResult r = InteriorPointSolver().solve(lp(G, h, VectorXd::Ones(1)));
  CHECK(r.status == SolveStatus::Infeasible);
}

TEST_CASE("zero row with negative right-hand side is infeasible before iterating") {
  MatrixXd G = MatrixXd::Zero(1, 2);
  VectorXd h(1);
  h << -1;
  const QpResult r = InteriorPointSolver().solve(lp(G, h, VectorXd::Ones(2)));
  CHECK(r.status == SolveStatus::Infeasible);
  CHECK(r.iterations == 0);
}

TEST_CASE("objective decreasing along a recession ray is unbounded") {
  MatrixXd G(1, 1);
  G << -1;
  VectorXd h = VectorXd::Zero(1);
  VectorXd q(1);
  q << -1;
  CHECK(InteriorPointSolver().solve(lp(G, h, q)).status == SolveStatus::Unbounded);
}

TEST_CASE("box-constrained QP equals the clipped unconstrained minimizer") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> U(-3.0, 3.0);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 4;
    VectorXd c(n);
    for (int i = 0; i < n; ++i) c[i] = U(rng);
    QpProblem p;
    p.P = sparse(MatrixXd::Identity(n, n));
    p.q = -c;
    p.G.resize(0, n);
    p.h.resize(0);
    p.A.resize(0, n);
    p.b.resize(0);
    p.lb = VectorXd::Constant(n, -1.0);
    p.ub = VectorXd::Constant(n, 1.0);
    const QpResult r = InteriorPointSolver().solve(p);
    REQUIRE(r.status == SolveStatus::Optimal);
    // Weakly active bounds converge at the rate of the complementarity gap.
    for (int i = 0; i < n; ++i) CHECK(std::abs(r.x[i] - std::clamp(c[i], -1.0, 1.0)) < 1e-5);
  }
}

TEST_CASE("equality-constrained QP matches the Lagrange solution") {
  QpProblem p;
  p.P = sparse(2.0 * MatrixXd::Identity(2, 2));
  p.q = VectorXd::Zero(2);
  p.G.resize(0, 2);
  p.h.resize(0);
  MatrixXd A(1, 2);
  A << 1, 1;
  p.A = sparse(A);
  p.b = VectorXd::Ones(1);
  const QpResult r = InteriorPointSolver().solve(p);
  REQUIRE(r.status == SolveStatus::Optimal);
  CHECK(r.x[0] == doctest::Approx(0.5).epsilon(1e-8));
  CHECK(r.x[1] == doctest::Approx(0.5).epsilon(1e-8));
}

TEST_CASE("random bounded 2-D LPs agree with vertex enumeration") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> N(0.0, 1.0);
  int infeasible = 0;
  for (int trial = 0; trial < 300; ++trial) {
    const int rows = 3 + trial % 5;
    MatrixXd G(rows + 4, 2);
    VectorXd h(rows + 4);
    for (int i = 0; i < rows; ++i) {
      G.row(i) << N(rng), N(rng);
      h[i] = N(rng);
    }
    G.bottomRows(4) << 1, 0, -1, 0, 0, 1, 0, -1;
    h.tail(4).setConstant(5.0);
    VectorXd q(2);
    q << N(rng), N(rng);
    const BruteForce bf = brute_force_lp(G, h, q);
    const QpResult r = InteriorPointSolver().solve(lp(G, h, q));
    if (!bf.feasible) {
      ++infeasible;
      CHECK(r.status == SolveStatus::Infeasible);
    } else {
      REQUIRE(r.status == SolveStatus::Optimal);
      CHECK(r.objective == doctest::Approx(bf.objective).epsilon(1e-6));
    }
  }
  CHECK(infeasible > 0);
}

TEST_CASE("least-distance program matches the 2-D brute-force minimum") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> N(0.0, 1.0);
  int feasible = 0;
  for (int trial = 0; trial < 300; ++trial) {
    const int rows = 1 + trial % 6;
    MatrixXd C(rows, 2);
    VectorXd d(rows);
    for (int i = 0; i < rows; ++i) {
      C.row(i) << N(rng), N(rng);
      d[i] = N(rng);
    }
    const auto oracle = brute_force_ldp(C, d);
    const LeastDistanceResult r = least_distance(C, d);
    if (oracle) {
      ++feasible;
      REQUIRE(r.feasible);
      CHECK((r.u - *oracle).norm() < 1e-7);
    } else {
      CHECK_FALSE(r.feasible);
    }
  }
  CHECK(feasible > 100);
}

TEST_CASE("least-distance program matches subset enumeration in 3-D") {
  // The minimizer is the min-norm point of the affine hull of some face, so
  // the smallest feasible candidate over the origin and all row subsets of size at
  // most 3 is exact.
  std::mt19937_64 rng(21);
  std::normal_distribution<double> N(0.0, 1.0);
  int multi = 0;
  for (int trial = 0; trial < 300; ++trial) {
    const int rows = 2 + trial % 6;
    MatrixXd C(rows, 3);
    VectorXd d(rows);
    for (int i = 0; i < rows; ++i) {
      C.row(i) << N(rng), N(rng), N(rng);
      d[i] = N(rng) + 0.5;
    }
    std::optional<VectorXd> best;
    if ((d.array() <= 0.0).all()) best = VectorXd::Zero(3);
    for (int mask = 1; mask < (1 << rows); ++mask) {
      std::vector<int> S;
      for (int i = 0; i < rows; ++i)
        if (mask & (1 << i)) S.push_back(i);
      if (S.size() > 3) continue;
      MatrixXd CS(static_cast<Eigen::Index>(S.size()), 3);
      VectorXd dS(CS.rows());
      for (std::size_t k = 0; k < S.size(); ++k) {
        CS.row(static_cast<Eigen::Index>(k)) = C.row(S[k]);
        dS[static_cast<Eigen::Index>(k)] = d[S[k]];
      }
      const MatrixXd G = CS * CS.transpose();
      if (std::abs(G.determinant()) < 1e-10) continue;
      const VectorXd u = CS.transpose() * G.ldlt().solve(dS);
      if (((C * u - d).array() < -1e-9).any()) continue;
      if (!best || u.norm() < best->norm()) best = u;
    }
    const LeastDistanceResult r = least_distance(C, d);
    if (!best) {
      CHECK_FALSE(r.feasible);
      continue;
    }
    REQUIRE(r.feasible);
    CHECK((r.u - *best).norm() < 1e-7);
    if (((C * r.u - d).array().abs() < 1e-9).count() >= 2) ++multi;
  }
  CHECK(multi > 30);
}

TEST_CASE("least-distance program returns zero when the origin is feasible") {
  MatrixXd C(2, 2);
  C << 1, 0, 0, 1;
  VectorXd d(2);
  d << -1, -2;
  const LeastDistanceResult r = least_distance(C, d);
  REQUIRE(r.feasible);
  CHECK(r.u.norm() == 0.0);
}

TEST_CASE("nnls solution satisfies the optimality conditions") {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> N(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    MatrixXd E(6, 4);
    VectorXd f(6);
    for (int i = 0; i < 6; ++i) {
      f[i] = N(rng);
      for (int j = 0; j < 4; ++j) E(i, j) = N(rng);
    }
    const VectorXd lam = nnls(E, f);
    const VectorXd grad = E.transpose() * (E * lam - f);
    for (int j = 0; j < 4; ++j) {
      CHECK(lam[j] >= 0.0);
      CHECK(grad[j] >= -1e-9);
      if (lam[j] > 1e-12) CHECK(std::abs(grad[j]) < 1e-8);
    }
  }
}
