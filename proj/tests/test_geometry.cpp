#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "stlrrt/error.hpp"
#include "stlrrt/geometry.hpp"

#include <algorithm>
#include <random>
#include <set>

using namespace stlrrt;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

LinearPredicate unit_box_predicate() {
  LinearPredicate h;
  h.D.resize(4, 2);
  h.D << 1, 0, -1, 0, 0, 1, 0, -1;
  h.c = VectorXd::Ones(4);
  return h;
}

VectorXd vec(std::initializer_list<double> v) {
  VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

Polytope simplex() {
  MatrixXd A(3, 2);
  A << -1, 0, 0, -1, 1, 1;
  return Polytope(A, vec({0, 0, 1}));
}

Polytope random_polygon(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> ang(0.0, 2.0 * M_PI);
  std::uniform_real_distribution<double> off(0.5, 2.0);
  const int rows = 5 + static_cast<int>(rng() % 4);
  MatrixXd A(rows + 4, 2);
  VectorXd b(rows + 4);
  for (int i = 0; i < rows; ++i) {
    const double th = ang(rng);
    A.row(i) << std::cos(th), std::sin(th);
    b[i] = off(rng);
  }
  A.bottomRows(4) << 1, 0, -1, 0, 0, 1, 0, -1;
  b.tail(4).setConstant(3.0);
  return Polytope(A, b);
}

}  // namespace

TEST_CASE("predicate value is the smallest affine row") {
  const LinearPredicate h = unit_box_predicate();
  CHECK(predicate_value(h, vec({0, 0})) == 1.0);
  CHECK(predicate_value(h, vec({1, 0})) == 0.0);
  CHECK(predicate_value(h, vec({2, 0})) == -1.0);
  CHECK_THROWS_AS(predicate_value(h, vec({0, 0, 0})), DimensionMismatch);
}

TEST_CASE("polytope construction validates shape and boundedness") {
  MatrixXd half(1, 2);
  half << 1, 0;
  CHECK_THROWS_AS(Polytope(half, vec({1})), InvalidArgument);
  MatrixXd strip(4, 2);
  strip << 1, 0, -1, 0, 1, 0, -1, 0;
  CHECK_THROWS_AS(Polytope(strip, vec({1, 1, 2, 2})), Unbounded);
  MatrixXd wedge(3, 2);
  wedge << -1, 0, 0, -1, 1, -1;
  CHECK_THROWS_AS(Polytope(wedge, vec({0, 0, 1})), Unbounded);
  CHECK_NOTHROW(simplex());
  CHECK(Polytope::box(vec({1, 2})).is_box());
  CHECK_FALSE(simplex().is_box());
}

TEST_CASE("box vertices are the corners") {
  const VertexSet V = enumerate_vertices(Polytope::box(vec({10, 10})));
  REQUIRE(V.size() == 4);
  std::set<std::pair<double, double>> got;
  for (const auto& v : V.vertices) got.insert({v[0], v[1]});
  CHECK(got == std::set<std::pair<double, double>>{{-10, -10}, {-10, 10}, {10, -10}, {10, 10}});

  const VertexSet V6 = enumerate_vertices(Polytope::box(vec({120, 120, 120, 0.5, 0.5, 0.5})));
  CHECK(V6.size() == 64);
  std::set<std::vector<double>> unique;
  for (const auto& v : V6.vertices) unique.insert(std::vector<double>(v.data(), v.data() + v.size()));
  CHECK(unique.size() == 64);
}

TEST_CASE("simplex vertices from facet intersections") {
  const VertexSet V = enumerate_vertices(simplex());
  REQUIRE(V.size() == 3);
  std::set<std::pair<double, double>> got;
  for (const auto& v : V.vertices) got.insert({v[0], v[1]});
  CHECK(got == std::set<std::pair<double, double>>{{0, 0}, {1, 0}, {0, 1}});
}

TEST_CASE("vertex enumeration rejects dimensions above eight") {
  CHECK_THROWS_AS(enumerate_vertices(Polytope::box(VectorXd::Ones(9))), DimensionTooLarge);
}

TEST_CASE("parallel and serial enumeration agree on random polygons") {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    const Polytope P = random_polygon(rng);
    const VertexSet a = enumerate_vertices(P);
    const VertexSet b = enumerate_vertices_serial(P);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a.vertices[i] == b.vertices[i]);
  }
}

TEST_CASE("enumerated vertices lie in the polytope and support every facet") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    const Polytope P = random_polygon(rng);
    const VertexSet V = enumerate_vertices(P);
    REQUIRE(V.size() >= 3);
    for (const auto& v : V.vertices) CHECK(contains(P, v, 1e-9));
    // A facet row is either redundant or attained by some vertex.
    for (int k = 0; k < P.rows(); ++k) {
      double best = -kInf;
      for (const auto& v : V.vertices) best = std::max(best, P.A().row(k).dot(v));
      CHECK(best <= P.b()[k] + 1e-9);
    }
    // Convex combinations of vertices stay inside.
    for (int s = 0; s < 20; ++s) {
      VectorXd w(static_cast<Eigen::Index>(V.size()));
      for (Eigen::Index i = 0; i < w.size(); ++i) w[i] = U(rng);
      w /= w.sum();
      VectorXd x = VectorXd::Zero(2);
      for (std::size_t i = 0; i < V.size(); ++i) x += w[static_cast<Eigen::Index>(i)] * V.vertices[i];
      CHECK(contains(P, x, 1e-9));
    }
  }
}

TEST_CASE("every facet of a 3-D polytope is supported by a vertex") {
  MatrixXd A(7, 3);
  A << 1, 0, 0, -1, 0, 0, 0, 1, 0, 0, -1, 0, 0, 0, 1, 0, 0, -1, 1, 1, 1;
  const Polytope P(A, vec({1, 1, 1, 1, 1, 1, 1.5}));
  const VertexSet V = enumerate_vertices(P);
  // Seven corners survive the cut and it adds (1,1,-0.5) and its two permutations.
  CHECK(V.size() == 10);
  for (int k = 0; k < P.rows(); ++k) {
    int on = 0;
    for (const auto& v : V.vertices) on += std::abs(P.A().row(k).dot(v) - P.b()[k]) < 1e-9;
    CHECK(on >= 3);
  }
}

TEST_CASE("space-time vertices pair each vertex with both times") {
  const VertexSet V = enumerate_vertices(Polytope::box(vec({1, 1})));
  const VertexSet Z = space_time_vertices(V, 0.0, 5.0);
  REQUIRE(Z.size() == 8);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(Z.vertices[i][2] == 0.0);
    CHECK(Z.vertices[i + 4][2] == 5.0);
    CHECK(Z.vertices[i].head(2) == V.vertices[i]);
  }
  CHECK(space_time_vertices(enumerate_vertices(Polytope::box(VectorXd::Ones(6))), 1, 2).size() == 128);
  CHECK_THROWS_AS(space_time_vertices(V, 1.0, 1.0), EmptyInterval);
}

TEST_CASE("membership honours the tolerance") {
  const Polytope P = Polytope::box(vec({1, 1}));
  CHECK(contains(P, vec({0, 0}), 0.0));
  CHECK(contains(P, vec({1, 0}), 1e-9));
  CHECK_FALSE(contains(P, vec({2, 0}), 1e-9));
  CHECK_THROWS_AS(contains(P, vec({0}), 0.0), DimensionMismatch);
}

TEST_CASE("predicate threshold agrees with superlevel-set membership") {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> U(-2.0, 2.0);
  const LinearPredicate h = unit_box_predicate();
  const Polytope X = Polytope::box(vec({3, 3}));
  for (int trial = 0; trial < 1000; ++trial) {
    const VectorXd x = vec({U(rng), U(rng)});
    const double r = U(rng) / 4.0;
    CHECK((predicate_value(h, x) >= r) == contains(superlevel_set(h, r, X), x, 0.0));
  }
}

TEST_CASE("sampler stays inside and is centred on the unit square") {
  Rng rng(7);
  const Polytope P = Polytope::box(vec({1, 1}));
  const VectorXd x = sample_uniform(P, rng);
  CHECK(x.cwiseAbs().maxCoeff() <= 1.0);

  VectorXd mean = VectorXd::Zero(2);
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    const VectorXd s = sample_uniform(P, rng);
    CHECK(contains(P, s, 1e-12));
    mean += s;
  }
  mean /= n;
  CHECK(std::abs(mean[0]) < 0.05);
  CHECK(std::abs(mean[1]) < 0.05);
}

TEST_CASE("hit-and-run fallback samples thin sets") {
  Rng rng(12);
  MatrixXd A(4, 2);
  A << 1, -1, -1, 1, 1, 1, -1, -1;
  const Polytope sliver(A, vec({1e-4, 1e-4, 1, 1}));
  SamplerSettings s;
  s.rejection_cap = 10;
  for (int i = 0; i < 200; ++i) CHECK(contains(sliver, sample_uniform(sliver, rng, InteriorPointSolver(), s), 1e-12));
}

TEST_CASE("empty polytopes cannot be sampled") {
  Rng rng(1);
  const Polytope empty = Polytope::box(vec({1, 1}), vec({0, 0}));
  CHECK_THROWS_AS(sample_uniform(empty, rng), EmptySet);
  MatrixXd A(4, 2);
  A << 1, 0, -1, 0, 0, 1, 0, -1;
  const Polytope crossed(A, vec({-1, -1, 1, 1}));
  CHECK_THROWS_AS(sample_uniform(crossed, rng), EmptySet);
}

TEST_CASE("Chebyshev ball of a box") {
  const auto ball = chebyshev_center(Polytope::box(vec({-1, 0}), vec({3, 1})), InteriorPointSolver());
  REQUIRE(ball);
  CHECK(ball->radius == doctest::Approx(0.5).epsilon(1e-7));
  CHECK(ball->center[1] == doctest::Approx(0.5).epsilon(1e-7));
  const auto [lo, hi] = bounding_box(simplex(), InteriorPointSolver());
  CHECK(lo.norm() < 1e-7);
  CHECK(hi[0] == doctest::Approx(1.0).epsilon(1e-7));
}
