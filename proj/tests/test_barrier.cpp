#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "stlrrt/barrier.hpp"
#include "stlrrt/error.hpp"

#include <random>

using namespace stlrrt;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

VectorXd vec(std::initializer_list<double> v) {
  VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

// lo ≤ x ≤ hi as a predicate.
LinearPredicate box_predicate(const VectorXd& lo, const VectorXd& hi) {
  const int n = static_cast<int>(lo.size());
  LinearPredicate h;
  h.D = MatrixXd::Zero(2 * n, n);
  h.c.resize(2 * n);
  for (int i = 0; i < n; ++i) {
    h.D(2 * i, i) = 1.0;
    h.c[2 * i] = -lo[i];
    h.D(2 * i + 1, i) = -1.0;
    h.c[2 * i + 1] = hi[i];
  }
  return h;
}

TaskBarrier bound(TaskBarrier tb, double gamma_bar, double r) {
  tb.theta = Theta{gamma_bar, r};
  return tb;
}

AtomicTask task(TaskKind k, Interval o, std::optional<Interval> inner = std::nullopt) {
  return {k, o, inner, "p"};
}

const Polytope kX = Polytope::box(vec({10, 10}));
const LinearPredicate kBox = box_predicate(vec({-1, -1}), vec({1, 1}));

}  // namespace

TEST_CASE("switching times follow the task kind") {
  const TaskBarrier g = make_task_barrier(task(TaskKind::G, {255, 265}), kBox);
  CHECK(g.alpha == 255.0);
  CHECK(g.beta == 265.0);
  const TaskBarrier f = make_task_barrier(task(TaskKind::F, {20, 25}), kBox);
  CHECK(f.alpha == 22.5);
  CHECK(f.beta == 22.5);
  const TaskBarrier fg = make_task_barrier(task(TaskKind::FG, {16.7, 23.3}, Interval{0, 6.7}), kBox, 20.0);
  CHECK(fg.alpha == 20.0);
  CHECK(fg.beta == doctest::Approx(26.7).epsilon(1e-12));
  CHECK_THROWS_AS(make_task_barrier(task(TaskKind::F, {20, 25}), kBox, 26.0), FreeTimeOutOfRange);
  CHECK_THROWS_AS(make_task_barrier(task(TaskKind::FG, {1, 2}, Interval{1, 3}), kBox, 1.5), FreeTimeOutOfRange);
}

TEST_CASE("gamma is piecewise linear with the documented values") {
  TaskBarrier tb = make_task_barrier(task(TaskKind::G, {4, 10}), kBox);
  CHECK_THROWS_AS(gamma_eval(tb, 0.0), ParametersUnbound);
  tb = bound(tb, 2.0, 1.0);
  CHECK(gamma_eval(tb, 0.0) == 1.0);
  CHECK(gamma_eval(tb, 4.0) == -1.0);
  CHECK(gamma_eval(tb, 2.0) == 0.0);
  CHECK(gamma_eval(tb, 10.0) == -1.0);
  CHECK_THROWS_AS(gamma_eval(tb, 10.5), OutOfDomain);
  CHECK_THROWS_AS(gamma_eval(tb, -0.5), OutOfDomain);
}

TEST_CASE("gamma is continuous and nonincreasing") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const double a = 1.0 + 10.0 * U(rng), b = a + 10.0 * U(rng);
    const TaskBarrier tb = bound(make_task_barrier(task(TaskKind::G, {a, b}), kBox), 5.0 * U(rng), 0.01 + U(rng));
    double prev = gamma_eval(tb, 0.0);
    for (int k = 1; k <= 400; ++k) {
      const double t = b * k / 400.0;
      const double g = gamma_eval(tb, t);
      CHECK(g <= prev + 1e-12);
      CHECK(prev - g <= tb.theta->gamma_bar / a * (b / 400.0) + 1e-12);
      prev = g;
    }
    const double eps = 1e-9;
    CHECK(std::abs(gamma_eval(tb, a - eps) - gamma_eval(tb, a)) < 1e-6);
  }
}

TEST_CASE("segment index switches at alpha") {
  const TaskBarrier tb = make_task_barrier(task(TaskKind::G, {4, 10}), kBox);
  CHECK(upsilon(tb, 3.9) == 1);
  CHECK(upsilon(tb, 4.0) == 2);
  const TaskBarrier flat = make_task_barrier(task(TaskKind::G, {0, 10}), kBox);
  CHECK(upsilon(flat, 0.0) == 2);
  CHECK(flat.single_segment());
  CHECK_THROWS_AS(upsilon(tb, 11.0), OutOfDomain);
}

TEST_CASE("matrix form columns and offsets") {
  LinearPredicate h;
  h.D = MatrixXd::Identity(2, 2);
  h.c = vec({1, 1});
  const TaskBarrier tb = make_task_barrier(task(TaskKind::G, {4, 10}), h);
  const Theta th{2.0, 1.0};
  const MatrixForm m2 = matrix_form(tb, 2);
  CHECK(m2.E.eval(th).col(2).isZero());
  CHECK(m2.g.eval(th).isZero());
  const MatrixForm m1 = matrix_form(tb, 1);
  CHECK(m1.E.eval(th).col(2) == VectorXd::Constant(2, -0.5));
  CHECK(m1.E.eval(th).leftCols(2) == h.D);
  CHECK(m1.g.eval(th) == VectorXd::Constant(2, 2.0));
  CHECK_THROWS_AS(matrix_form(tb, 3), InvalidArgument);
}

TEST_CASE("matrix form reproduces predicate plus gamma") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> U(-5.0, 5.0);
  const TaskBarrier tb = bound(make_task_barrier(task(TaskKind::G, {4, 10}), kBox), 3.0, 0.2);
  for (int trial = 0; trial < 200; ++trial) {
    const double t = std::abs(U(rng)) * 2.0;
    const VectorXd x = vec({U(rng), U(rng)});
    const MatrixForm mf = matrix_form(tb, upsilon(tb, t));
    VectorXd z(3);
    z << x, t;
    const VectorXd rows = mf.E.eval(*tb.theta) * z + mf.g.eval(*tb.theta);
    CHECK(rows.minCoeff() == doctest::Approx(predicate_value(kBox, x) + gamma_eval(tb, t)).epsilon(1e-12));
  }
}

TEST_CASE("switch map keeps tasks with later deadlines") {
  std::vector<TaskBarrier> tasks;
  for (double b : {5.0, 10.0, 10.0}) tasks.push_back(make_task_barrier(task(TaskKind::G, {0, b}), kBox));
  const ConjunctionBarrier cb(tasks, kX, 10.0);
  CHECK(cb.switch_map(3.0) == std::vector<int>{0, 1, 2});
  CHECK(cb.switch_map(5.0) == std::vector<int>{1, 2});
  CHECK(cb.switch_map(10.0).empty());
  CHECK(cb.closure_map(5.0) == std::vector<int>{0, 1, 2});
  CHECK(cb.switch_times() == std::vector<double>{0.0, 5.0, 10.0});
  CHECK(cb.beta_phi() == 10.0);
  CHECK(cb.interval_index(7.0) == 1);
  CHECK(cb.interval_index(10.0) == -1);
}

TEST_CASE("switch times are sorted, unique and bracket the active sets") {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> tick(0, 20);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<TaskBarrier> tasks;
    for (int l = 0; l < 4; ++l) {
      const double a = tick(rng), b = a + tick(rng);
      tasks.push_back(make_task_barrier(task(l % 2 ? TaskKind::G : TaskKind::F, {a, b}), kBox));
    }
    const ConjunctionBarrier cb(tasks, kX, 50.0);
    const auto& s = cb.switch_times();
    CHECK(s.front() == 0.0);
    CHECK(s.back() == cb.beta_phi());
    for (std::size_t j = 1; j < s.size(); ++j) CHECK(s[j - 1] < s[j]);
    std::size_t prev = tasks.size() + 1;
    for (std::size_t j = 0; j + 1 < s.size(); ++j) {
      const auto at = cb.switch_map(s[j]);
      CHECK(at.size() <= prev);
      prev = at.size();
      const double mid = 0.5 * (s[j] + s[j + 1]);
      CHECK(cb.switch_map(mid) == at);
      for (int l : at) CHECK(upsilon(tasks[static_cast<std::size_t>(l)], mid) ==
                             upsilon(tasks[static_cast<std::size_t>(l)], s[j]));
    }
  }
}

TEST_CASE("set queries need bound parameters") {
  const ConjunctionBarrier cb({make_task_barrier(task(TaskKind::G, {0, 10}), kBox)}, kX, 10.0);
  CHECK_FALSE(cb.is_bound());
  CHECK_THROWS_AS(cb.set_at(1.0), ParametersUnbound);
  CHECK_THROWS_AS(cb.bind({}), DimensionMismatch);
}

TEST_CASE("single G task set is the robust superlevel set") {
  const ConjunctionBarrier cb =
      ConjunctionBarrier({make_task_barrier(task(TaskKind::G, {0, 10}), kBox)}, kX, 10.0).bind({{0.0, 0.25}});
  const Polytope S = cb.set_at(5.0);
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> U(-2.0, 2.0);
  for (int i = 0; i < 500; ++i) {
    const VectorXd x = vec({U(rng), U(rng)});
    CHECK(contains(S, x, 0.0) == (predicate_value(kBox, x) >= 0.25));
  }
  const Polytope end = cb.set_at(10.0);
  CHECK(end.A() == kX.A());
  CHECK(end.b() == kX.b());
}

TEST_CASE("tasks drop out of the set after their deadline") {
  const LinearPredicate right = box_predicate(vec({2, -1}), vec({4, 1}));
  const ConjunctionBarrier cb =
      ConjunctionBarrier({make_task_barrier(task(TaskKind::G, {0, 5}), kBox),
                          make_task_barrier(task(TaskKind::G, {6, 10}), right)},
                         kX, 10.0)
          .bind({{0.0, 0.1}, {50.0, 0.1}});
  CHECK(cb.set_at(5.5).rows() == kX.rows() + right.rows());
  CHECK(cb.set_at(1.0).rows() == kX.rows() + kBox.rows() + right.rows());
}

TEST_CASE("left limits freeze the preceding active set") {
  const LinearPredicate right = box_predicate(vec({2, -1}), vec({4, 1}));
  const ConjunctionBarrier cb =
      ConjunctionBarrier({make_task_barrier(task(TaskKind::F, {4, 4}), kBox),
                          make_task_barrier(task(TaskKind::G, {6, 10}), right)},
                         kX, 10.0)
          .bind({{3.0, 0.1}, {50.0, 0.1}});
  const Polytope L = cb.limit_from_left(4.0);
  CHECK(L.rows() == kX.rows() + kBox.rows() + right.rows());
  CHECK(contains(L, vec({0, 0}), 0.0));
  CHECK_FALSE(contains(L, vec({0.95, 0}), 0.0));
  CHECK_THROWS_AS(cb.limit_from_left(0.0), NotASwitchTime);
  CHECK_THROWS_AS(cb.limit_from_left(3.0), NotASwitchTime);

  const ConjunctionBarrier single =
      ConjunctionBarrier({make_task_barrier(task(TaskKind::G, {2, 6}), kBox)}, kX, 6.0).bind({{1.0, 0.3}});
  const Polytope Hr = superlevel_set(kBox, 0.3, kX);
  const Polytope atb = single.limit_from_left(6.0);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> U(-1.5, 1.5);
  for (int i = 0; i < 500; ++i) {
    const VectorXd x = vec({U(rng), U(rng)});
    CHECK(contains(atb, x, 0.0) == contains(Hr, x, 0.0));
  }
}

TEST_CASE("barrier value sign matches set membership") {
  const LinearPredicate right = box_predicate(vec({2, -1}), vec({4, 1}));
  const ConjunctionBarrier cb =
      ConjunctionBarrier({make_task_barrier(task(TaskKind::F, {3, 5}), kBox),
                          make_task_barrier(task(TaskKind::G, {6, 10}), right)},
                         kX, 10.0)
          .bind({{4.0, 0.2}, {12.0, 0.3}});
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> U(-6.0, 6.0);
  std::uniform_real_distribution<double> T(0.0, 9.999);
  int inside = 0;
  for (int i = 0; i < 3000; ++i) {
    const VectorXd x = vec({U(rng), U(rng)});
    const double t = T(rng);
    const bool in = contains(cb.set_at(t), x, 0.0);
    inside += in;
    CHECK((cb.value(x, t) >= 0.0) == in);
  }
  CHECK(inside > 100);
}

TEST_CASE("each task set shrinks over time") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  Rng srng(8);
  const TaskKind kinds[] = {TaskKind::F, TaskKind::G, TaskKind::FG};
  int checked = 0;
  for (TaskKind k : kinds) {
    const AtomicTask t = k == TaskKind::FG ? task(k, {5, 8}, Interval{0, 2}) : task(k, {5, 8});
    TaskBarrier tb = make_task_barrier(t, kBox);
    const ConjunctionBarrier cb = ConjunctionBarrier({tb}, kX, 12.0).bind({{6.0, 0.2}});
    for (int i = 0; i < 1000; ++i) {
      const double tau = cb.beta_phi() * U(rng);
      const double t0 = tau * U(rng);
      const Polytope at_tau = cb.set_at(tau);
      const VectorXd x = sample_uniform(at_tau, srng);
      CHECK(contains(cb.set_at(t0), x, 1e-9));
      ++checked;
    }
  }
  CHECK(checked == 3000);
}

TEST_CASE("the target set is reached exactly on [alpha, beta]") {
  const TaskBarrier tb = make_task_barrier(task(TaskKind::G, {3, 7}), kBox);
  const ConjunctionBarrier cb = ConjunctionBarrier({tb}, kX, 7.0).bind({{5.0, 0.4}});
  const Polytope Hr = superlevel_set(kBox, 0.4, kX);
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> U(-1.5, 1.5);
  for (double t : {3.0, 4.5, 6.99}) {
    const Polytope S = cb.set_at(t);
    for (int i = 0; i < 300; ++i) {
      const VectorXd x = vec({U(rng), U(rng)});
      CHECK(contains(S, x, 0.0) == contains(Hr, x, 0.0));
    }
  }
}
