#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "oracles.hpp"
#include "stlrrt/encoder.hpp"
#include "stlrrt/error.hpp"
#include "stlrrt/scenario.hpp"

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

Dynamics single_integrator(int n, double x_max, double u_max) {
  Dynamics d;
  d.A = MatrixXd::Zero(n, n);
  d.B = MatrixXd::Identity(n, n);
  d.p = VectorXd::Zero(n);
  d.state_set = Polytope::box(VectorXd::Constant(n, x_max));
  d.input_set = Polytope::box(VectorXd::Constant(n, u_max));
  return d;
}

ConjunctionBarrier one_task(const AtomicTask& t, const LinearPredicate& h, const Polytope& X, double horizon) {
  return ConjunctionBarrier({make_task_barrier(t, h)}, X, horizon);
}

oracle::ScalarTask to_oracle(const Dynamics& d, const LinearPredicate& h, const TaskBarrier& tb, double x0,
                             double kappa) {
  oracle::ScalarTask s;
  s.a = d.A(0, 0);
  s.p = d.p[0];
  s.x_hi = d.state_set.b()[0];
  s.x_lo = -d.state_set.b()[1];
  s.u_hi = d.input_set.b()[0];
  s.u_lo = -d.input_set.b()[1];
  for (int k = 0; k < h.rows(); ++k) {
    s.d.push_back(h.D(k, 0));
    s.c.push_back(h.c[k]);
  }
  s.alpha = tb.alpha;
  s.beta = tb.beta;
  s.x0 = x0;
  s.kappa = kappa;
  return s;
}

}  // namespace

TEST_CASE("variable count follows the layout formula") {
  const Dynamics dyn = single_integrator(2, 10, 5);
  const LinearPredicate h = box_predicate(vec({1, 1}), vec({3, 3}));
  const ConjunctionBarrier cb = one_task({TaskKind::G, {4, 10}, std::nullopt, "p"}, h, dyn.state_set, 10);
  const LpLayout L = build_lp(cb, dyn, vec({0, 0}));
  REQUIRE(L.intervals.size() == 2);
  CHECK(L.num_vars == 2 + 2 * 8 * 2 + 2 + 2);
  CHECK(L.row_counts() == L.expected_row_counts());
  CHECK(static_cast<int>(L.row_tags.size()) == L.lp.G.rows());
}

TEST_CASE("invariance rows scale with vertices and active rows in six dimensions") {
  Dynamics dyn = build_clohessy_wiltshire();
  LinearPredicate h;
  h.D = MatrixXd::Zero(6, 6);
  h.c = VectorXd::Constant(6, 10.0);
  for (int i = 0; i < 3; ++i) {
    h.D(2 * i, i) = 1.0;
    h.D(2 * i + 1, i) = -1.0;
  }
  std::vector<TaskBarrier> tasks;
  for (double a : {100.0, 300.0, 500.0, 700.0})
    tasks.push_back(make_task_barrier({TaskKind::G, {a, a + 50}, std::nullopt, "p"}, h));
  const ConjunctionBarrier cb(tasks, dyn.state_set, 750);
  const LpLayout L = build_lp(cb, dyn, VectorXd::Zero(6));
  int invariance = 0;
  for (const auto& iv : L.intervals) invariance += 128 * 6 * static_cast<int>(iv.active.size());
  CHECK(L.row_counts().at(RowTag::Invariance) == invariance);
  CHECK(L.row_counts() == L.expected_row_counts());
  CHECK(L.num_vars == 2 * 4 + static_cast<int>(L.intervals.size()) * 128 * 3 + 4 * 6 + 4 * 6);
}

TEST_CASE("row audit matches the closed form on the shipped scenarios") {
  for (const char* name : {"room_service.json", "iss_inspection.json"}) {
    const Scenario sc = load_scenario(std::string(STLRRT_SOURCE_DIR) + "/scenarios/" + name);
    for (const auto& tasks : to_conjunctions(sc.formula)) {
      const ConjunctionBarrier cb = make_conjunction(tasks, sc.predicates, sc.dynamics.state_set, sc.horizon());
      const LpLayout L = build_lp(cb, sc.dynamics, sc.x0, ClassKGain{sc.kappa_gain}, sc.r_min);
      CHECK(L.row_counts() == L.expected_row_counts());
    }
  }
}

TEST_CASE("invalid LP settings are rejected") {
  const Dynamics dyn = single_integrator(2, 10, 5);
  const ConjunctionBarrier cb =
      one_task({TaskKind::G, {0, 10}, std::nullopt, "p"}, box_predicate(vec({-1, -1}), vec({1, 1})), dyn.state_set, 10);
  CHECK_THROWS_AS(build_lp(cb, dyn, vec({0, 0}), ClassKGain{1.0}, 0.0), InvalidArgument);
  CHECK_THROWS_AS(build_lp(cb, dyn, vec({0, 0}), ClassKGain{0.0}), InvalidArgument);
  CHECK_THROWS_AS(build_lp(cb, dyn, vec({20, 0})), PreconditionViolation);
  CHECK_THROWS_AS(build_lp(cb, dyn, vec({0, 0, 0})), DimensionMismatch);
}

TEST_CASE("bound result contains x0 and every viability witness") {
  const Scenario sc = load_scenario(std::string(STLRRT_SOURCE_DIR) + "/scenarios/room_service.json");
  const Encoding enc = encode_scenario(sc);
  for (const auto& res : enc.result.results) {
    REQUIRE(res.optimal());
    const ConjunctionBarrier& cb = *res.barrier;
    CHECK(contains(cb.set_at(0.0), sc.x0, 1e-7));
    for (std::size_t l = 0; l < cb.tasks().size(); ++l) {
      const TaskBarrier& tb = cb.tasks()[l];
      CHECK(res.r[l] >= sc.r_min - 1e-9);
      CHECK(contains(cb.limit_from_left(tb.beta), res.viability_witnesses[l], 1e-7));
      CHECK(predicate_value(tb.predicate, res.hr_witnesses[l]) >= res.r[l] - 1e-7);
      CHECK(contains(sc.dynamics.state_set, res.hr_witnesses[l], 1e-7));
    }
  }
}

TEST_CASE("single always-task optimum matches the closed-form margin") {
  // With α = 0 the barrier is h(x) − r; r is limited by h(x0) = 1 at x0 = 0,
  // the half-width 1 of the box, and at the far vertex x = −10 by the input
  // needed to satisfy u ≥ κ(9 + r) with u ≤ 5, i.e. r ≤ 5/κ − 9.
  const Dynamics dyn = single_integrator(1, 10, 5);
  const LinearPredicate h = box_predicate(vec({-1}), vec({1}));
  for (double kappa : {0.1, 0.5, 0.52}) {
    const ConjunctionBarrier cb = one_task({TaskKind::G, {0, 10}, std::nullopt, "p"}, h, dyn.state_set, 10);
    const EncodingResult res = solve_lp(build_lp(cb, dyn, vec({0}), ClassKGain{kappa}), default_lp_solver());
    REQUIRE(res.optimal());
    const double expected = std::min(1.0, 5.0 / kappa - 9.0);
    CHECK(res.robustness() == doctest::Approx(expected).epsilon(1e-7));
    CHECK(res.barrier->tasks()[0].theta->gamma_bar == 0.0);
  }
}

TEST_CASE("scalar LP optimum agrees with a grid search over parameters") {
  Dynamics dyn = single_integrator(1, 4, 3);
  dyn.A(0, 0) = -0.1;
  dyn.p[0] = 0.2;
  const LinearPredicate h = box_predicate(vec({0.5}), vec({4}));
  for (double kappa : {0.2, 0.3, 0.5}) {
    const ConjunctionBarrier cb = one_task({TaskKind::G, {2, 6}, std::nullopt, "p"}, h, dyn.state_set, 6);
    const EncodingResult res = solve_lp(build_lp(cb, dyn, vec({0}), ClassKGain{kappa}), default_lp_solver());
    REQUIRE(res.optimal());
    const double grid = oracle::grid_search_r(to_oracle(dyn, h, cb.tasks()[0], 0.0, kappa), 1e-3, 20.0);
    CHECK(std::abs(res.robustness() - grid) <= 2e-3);
    // The LP parameters themselves pass the direct check.
    const Theta th = *res.barrier->tasks()[0].theta;
    auto relaxed = to_oracle(dyn, h, cb.tasks()[0], 0.0, kappa);
    CHECK(oracle::feasible(relaxed, th.gamma_bar, th.r - 1e-7));
  }
}

TEST_CASE("unreachable targets are diagnosed in the invariance block") {
  // Reaching [8, 9] from 0 within 2 s would need speed 4 with |u| ≤ 1.
  const Dynamics dyn = single_integrator(1, 10, 1);
  const LinearPredicate h = box_predicate(vec({8}), vec({9}));
  const ConjunctionBarrier cb = one_task({TaskKind::F, {2, 2}, std::nullopt, "p"}, h, dyn.state_set, 2);
  const EncodingResult res = solve_lp(build_lp(cb, dyn, vec({0}), ClassKGain{1.0}), default_lp_solver());
  CHECK(res.status == SolveStatus::Infeasible);
  REQUIRE(res.infeasible_block.has_value());
  CHECK(*res.infeasible_block == RowTag::Invariance);
  CHECK_FALSE(res.barrier.has_value());
}

TEST_CASE("an empty conjunction is vacuously optimal") {
  const Dynamics dyn = single_integrator(2, 10, 5);
  const ConjunctionBarrier cb({}, dyn.state_set, 0.0);
  const EncodingResult res = solve_lp(build_lp(cb, dyn, vec({0, 0})), default_lp_solver());
  CHECK(res.optimal());
  CHECK(res.objective == 0.0);
}

TEST_CASE("disjunction selects the feasible disjunct") {
  const Dynamics dyn = single_integrator(1, 10, 1);
  const LinearPredicate far = box_predicate(vec({8}), vec({9}));
  const LinearPredicate near = box_predicate(vec({-1}), vec({1}));
  const ConjunctionBarrier bad = one_task({TaskKind::F, {2, 2}, std::nullopt, "p"}, far, dyn.state_set, 2);
  const ConjunctionBarrier good = one_task({TaskKind::G, {0, 2}, std::nullopt, "p"}, near, dyn.state_set, 2);
  const DisjunctionResult d = encode_disjunction({bad, good}, dyn, vec({0}), ClassKGain{0.05}, 1e-3, default_lp_solver());
  CHECK(d.selected == 1);
  CHECK(d.results[0].status == SolveStatus::Infeasible);
  CHECK_THROWS_AS(encode_disjunction({bad, bad}, dyn, vec({0}), ClassKGain{0.05}, 1e-3, default_lp_solver()),
                  AllInfeasible);
  CHECK_THROWS_AS(encode_disjunction({}, dyn, vec({0}), ClassKGain{0.05}, 1e-3, default_lp_solver()), InvalidArgument);
}

TEST_CASE("equal disjuncts resolve to the lowest index") {
  const Dynamics dyn = single_integrator(1, 10, 1);
  const ConjunctionBarrier cb =
      one_task({TaskKind::G, {0, 2}, std::nullopt, "p"}, box_predicate(vec({-1}), vec({1})), dyn.state_set, 2);
  const DisjunctionResult d = encode_disjunction({cb, cb, cb}, dyn, vec({0}), ClassKGain{0.05}, 1e-3, default_lp_solver());
  CHECK(d.selected == 0);
}

TEST_CASE("parallel and serial disjunction encodings agree") {
  const Scenario sc = load_scenario(std::string(STLRRT_SOURCE_DIR) + "/scenarios/room_service.json");
  std::vector<ConjunctionBarrier> ds;
  for (const auto& tasks : to_conjunctions(sc.formula))
    ds.push_back(make_conjunction(tasks, sc.predicates, sc.dynamics.state_set, sc.horizon()));
  const auto par = encode_disjunction(ds, sc.dynamics, sc.x0, ClassKGain{sc.kappa_gain}, sc.r_min, default_lp_solver());
  const auto ser =
      encode_disjunction_serial(ds, sc.dynamics, sc.x0, ClassKGain{sc.kappa_gain}, sc.r_min, default_lp_solver());
  CHECK(par.selected == ser.selected);
  REQUIRE(par.results.size() == ser.results.size());
  for (std::size_t i = 0; i < par.results.size(); ++i) {
    CHECK(par.results[i].status == ser.results[i].status);
    CHECK(par.results[i].r == ser.results[i].r);
  }
}

TEST_CASE("free times move the switching times") {
  const Dynamics dyn = single_integrator(2, 10, 5);
  PredicateMap preds{{"p", box_predicate(vec({1, 1}), vec({3, 3}))}};
  const std::vector<AtomicTask> tasks{{TaskKind::F, {2, 8}, std::nullopt, "p"}};
  CHECK(make_conjunction(tasks, preds, dyn.state_set, 8).tasks()[0].alpha == 5.0);
  CHECK(make_conjunction(tasks, preds, dyn.state_set, 8, {{0, 3.0}}).tasks()[0].alpha == 3.0);
}
