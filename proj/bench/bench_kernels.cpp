#include "stlrrt/scenario.hpp"

#include <benchmark/benchmark.h>

#include <random>

using namespace stlrrt;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

const std::string kRoom = std::string(STLRRT_SOURCE_DIR) + "/scenarios/room_service.json";

struct Room {
  Scenario sc;
  Encoding enc;
  std::vector<ConjunctionBarrier> disjuncts;
};

const Room& room() {
  static const Room r = [] {
    Room out;
    out.sc = load_scenario(kRoom);
    out.enc = encode_scenario(out.sc);
    for (const auto& tasks : to_conjunctions(out.sc.formula))
      out.disjuncts.push_back(make_conjunction(tasks, out.sc.predicates, out.sc.dynamics.state_set, out.sc.horizon()));
    return out;
  }();
  return r;
}

// Random facets tangent to the unit sphere, boxed in to stay bounded.
Polytope random_polytope(int dim, int facets) {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> N(0.0, 1.0);
  MatrixXd A(facets + 2 * dim, dim);
  VectorXd b(facets + 2 * dim);
  for (int i = 0; i < facets; ++i) {
    VectorXd a(dim);
    for (int j = 0; j < dim; ++j) a[j] = N(rng);
    A.row(i) = a.normalized().transpose();
    b[i] = 1.0;
  }
  A.bottomRows(2 * dim) << MatrixXd::Identity(dim, dim), -MatrixXd::Identity(dim, dim);
  b.tail(2 * dim).setConstant(1.2);
  return Polytope(A, b);
}

SampledSignal long_signal(std::size_t knots) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  SampledSignal sig(1);
  for (std::size_t k = 0; k < knots; ++k) sig.push_back(0.1 * static_cast<double>(k), VectorXd::Constant(1, U(rng)));
  return sig;
}

void BM_VertexEnumeration(benchmark::State& st) {
  const Polytope P = random_polytope(static_cast<int>(st.range(0)), 24);
  for (auto _ : st) benchmark::DoNotOptimize(enumerate_vertices(P));
}
void BM_VertexEnumerationSerial(benchmark::State& st) {
  const Polytope P = random_polytope(static_cast<int>(st.range(0)), 24);
  for (auto _ : st) benchmark::DoNotOptimize(enumerate_vertices_serial(P));
}

void BM_DisjunctFanOut(benchmark::State& st) {
  const Room& r = room();
  for (auto _ : st)
    benchmark::DoNotOptimize(encode_disjunction(r.disjuncts, r.sc.dynamics, r.sc.x0, ClassKGain{r.sc.kappa_gain},
                                                r.sc.r_min, default_lp_solver()));
}
void BM_DisjunctFanOutSerial(benchmark::State& st) {
  const Room& r = room();
  for (auto _ : st)
    benchmark::DoNotOptimize(encode_disjunction_serial(r.disjuncts, r.sc.dynamics, r.sc.x0,
                                                       ClassKGain{r.sc.kappa_gain}, r.sc.r_min, default_lp_solver()));
}

void BM_QpSweep(benchmark::State& st) {
  const Room& r = room();
  const CbfQpKernel k(r.enc.barrier(), r.sc.dynamics, ClassKGain{r.sc.kappa_gain});
  for (auto _ : st) benchmark::DoNotOptimize(qp_feasibility_sweep(k, static_cast<int>(st.range(0)), 1));
}
void BM_QpSweepSerial(benchmark::State& st) {
  const Room& r = room();
  const CbfQpKernel k(r.enc.barrier(), r.sc.dynamics, ClassKGain{r.sc.kappa_gain});
  for (auto _ : st) benchmark::DoNotOptimize(qp_feasibility_sweep_serial(k, static_cast<int>(st.range(0)), 1));
}

void BM_Monitor(benchmark::State& st) {
  const SampledSignal sig = long_signal(static_cast<std::size_t>(st.range(0)));
  const PredicateMap m{{"p", LinearPredicate{MatrixXd::Ones(1, 1), VectorXd::Zero(1)}}};
  const double T = sig.back_time();
  const Formula f = Formula::always({0.0, T - 20.0}, Formula::eventually({0.0, 20.0}, Formula::pred("p")));
  for (auto _ : st) benchmark::DoNotOptimize(robustness(f, m, sig, 0.0, 0.05));
}
void BM_MonitorReference(benchmark::State& st) {
  const SampledSignal sig = long_signal(static_cast<std::size_t>(st.range(0)));
  const PredicateMap m{{"p", LinearPredicate{MatrixXd::Ones(1, 1), VectorXd::Zero(1)}}};
  const double T = sig.back_time();
  const Formula f = Formula::always({0.0, T - 20.0}, Formula::eventually({0.0, 20.0}, Formula::pred("p")));
  for (auto _ : st) benchmark::DoNotOptimize(robustness_reference(f, m, sig, 0.0, 0.05));
}

}  // namespace

BENCHMARK(BM_VertexEnumeration)->Arg(4)->Arg(6)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_VertexEnumerationSerial)->Arg(4)->Arg(6)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_DisjunctFanOut)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_DisjunctFanOutSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_QpSweep)->Arg(100)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_QpSweepSerial)->Arg(100)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Monitor)->Arg(500)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_MonitorReference)->Arg(500)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
