#include "stlrrt/encoder.hpp"

#include "stlrrt/error.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

namespace stlrrt {

using Eigen::MatrixXd;
using Eigen::VectorXd;

std::string to_string(RowTag tag) {
  switch (tag) {
    case RowTag::Param: return "param";
    case RowTag::PredicateNonempty: return "predicate-nonempty";
    case RowTag::Input: return "input";
    case RowTag::Initial: return "initial";
    case RowTag::Viability: return "viability";
    case RowTag::Invariance: return "invariance";
  }
  return "?";
}

namespace {

class RowBuilder {
 public:
  explicit RowBuilder(LpLayout& layout) : layout_(layout) {}

  /// Starts a row Σ coef·x_var ≤ rhs.
  void begin() { current_.clear(); }
  void add(int var, double coef) {
    if (coef != 0.0) current_.emplace_back(var, coef);
  }
  void add_theta(int task, const AffineTheta& a, double sign) {
    add(layout_.gamma_bar_var[static_cast<std::size_t>(task)], sign * a.gamma_bar);
    add(layout_.r_var[static_cast<std::size_t>(task)], sign * a.r);
  }
  void end(double rhs, RowTag tag) {
    const int row = static_cast<int>(rhs_.size());
    for (const auto& [var, coef] : current_) trip_.emplace_back(row, var, coef);
    rhs_.push_back(rhs);
    layout_.row_tags.push_back(tag);
  }

  void finish() {
    layout_.lp.G.resize(static_cast<int>(rhs_.size()), layout_.num_vars);
    layout_.lp.G.setFromTriplets(trip_.begin(), trip_.end());
    layout_.lp.h = Eigen::Map<VectorXd>(rhs_.data(), static_cast<Eigen::Index>(rhs_.size()));
  }

 private:
  LpLayout& layout_;
  std::vector<std::pair<int, double>> current_;
  std::vector<Triplet> trip_;
  std::vector<double> rhs_;
};

// Rows D_x v ≤ c_x for a state-sized variable block.
void add_state_set_rows(RowBuilder& rb, const Polytope& X, int offset, RowTag tag) {
  for (int i = 0; i < X.rows(); ++i) {
    rb.begin();
    for (int j = 0; j < X.dim(); ++j) rb.add(offset + j, X.A()(i, j));
    rb.end(X.b()[i], tag);
  }
}

QpProblem without_block(const LpLayout& layout, RowTag tag) {
  QpProblem lp = layout.lp;
  std::vector<Triplet> trip;
  std::vector<double> rhs;
  Eigen::SparseMatrix<double, Eigen::RowMajor, int> G = layout.lp.G;
  for (int i = 0; i < G.rows(); ++i) {
    if (layout.row_tags[static_cast<std::size_t>(i)] == tag) continue;
    const int row = static_cast<int>(rhs.size());
    for (decltype(G)::InnerIterator it(G, i); it; ++it) trip.emplace_back(row, it.col(), it.value());
    rhs.push_back(layout.lp.h[i]);
  }
  lp.G.resize(static_cast<int>(rhs.size()), layout.num_vars);
  lp.G.setFromTriplets(trip.begin(), trip.end());
  lp.h = Eigen::Map<VectorXd>(rhs.data(), static_cast<Eigen::Index>(rhs.size()));
  return lp;
}

}  // namespace

LpLayout build_lp(const ConjunctionBarrier& barrier, const Dynamics& dyn, const VectorXd& x0, ClassKGain kappa,
                  double r_min) {
  dyn.validate();
  if (!(kappa.kappa_gain > 0.0)) throw InvalidArgument("class-K gain must be strictly positive");
  if (!(r_min > 0.0)) throw InvalidArgument("r_min must be strictly positive (r > 0 is required)");
  if (x0.size() != dyn.n()) throw DimensionMismatch("x0 has the wrong dimension");
  if (!contains(dyn.state_set, x0, 1e-7)) throw PreconditionViolation("x0 lies outside the state set");
  if (barrier.dim() != dyn.n()) throw DimensionMismatch("barrier and dynamics dimensions differ");

  LpLayout L;
  L.barrier = barrier;
  L.dyn = dyn;
  L.x0 = x0;
  L.kappa = kappa;
  L.r_min = r_min;

  const auto& tasks = barrier.tasks();
  const int nphi = static_cast<int>(tasks.size());
  const int n = dyn.n();
  const int m = dyn.m();
  const double k = kappa.kappa_gain;

  L.state_vertices = enumerate_vertices(dyn.state_set);
  const int nvx = static_cast<int>(L.state_vertices.size());

  int next = 0;
  for (int l = 0; l < nphi; ++l) {
    L.gamma_bar_var.push_back(next++);
    L.r_var.push_back(next++);
  }
  const auto& S = barrier.switch_times();
  for (std::size_t j = 0; j + 1 < S.size(); ++j) {
    LpInterval iv;
    iv.s_lo = S[j];
    iv.s_hi = S[j + 1];
    iv.active = barrier.switch_map(iv.s_lo);
    for (int l : iv.active) iv.segments.push_back(upsilon(tasks[static_cast<std::size_t>(l)], iv.s_lo));
    iv.u_offset = next;
    next += 2 * nvx * m;
    L.intervals.push_back(std::move(iv));
  }
  for (int l = 0; l < nphi; ++l) {
    L.xi_offset.push_back(next);
    next += n;
  }
  for (int l = 0; l < nphi; ++l) {
    L.w_offset.push_back(next);
    next += n;
  }
  L.num_vars = next;

  L.lp.q = VectorXd::Zero(L.num_vars);
  for (int l = 0; l < nphi; ++l) L.lp.q[L.r_var[static_cast<std::size_t>(l)]] = -1.0;

  RowBuilder rb(L);

  // (a) parameter domain.
  for (int l = 0; l < nphi; ++l) {
    const auto& tb = tasks[static_cast<std::size_t>(l)];
    rb.begin();
    rb.add(L.gamma_bar_var[static_cast<std::size_t>(l)], -1.0);
    rb.end(0.0, RowTag::Param);
    rb.begin();
    rb.add(L.r_var[static_cast<std::size_t>(l)], -1.0);
    rb.end(-r_min, RowTag::Param);
    if (tb.single_segment()) {
      rb.begin();
      rb.add(L.gamma_bar_var[static_cast<std::size_t>(l)], 1.0);
      rb.end(0.0, RowTag::Param);
    }
  }

  // (b) H^r nonempty: D w + c ≥ r·1 and w ∈ X.
  for (int l = 0; l < nphi; ++l) {
    const auto& h = tasks[static_cast<std::size_t>(l)].predicate;
    const int w = L.w_offset[static_cast<std::size_t>(l)];
    for (int kk = 0; kk < h.rows(); ++kk) {
      rb.begin();
      for (int j = 0; j < n; ++j) rb.add(w + j, -h.D(kk, j));
      rb.add(L.r_var[static_cast<std::size_t>(l)], 1.0);
      rb.end(h.c[kk], RowTag::PredicateNonempty);
    }
    add_state_set_rows(rb, dyn.state_set, w, RowTag::PredicateNonempty);
  }

  // (c) vertex inputs in U.
  const Polytope& U = dyn.input_set;
  for (const auto& iv : L.intervals)
    for (int q = 0; q < 2 * nvx; ++q)
      for (int i = 0; i < U.rows(); ++i) {
        rb.begin();
        for (int j = 0; j < m; ++j) rb.add(iv.u_offset + q * m + j, U.A()(i, j));
        rb.end(U.b()[i], RowTag::Input);
      }

  // (d) x0 in the set at t = 0.
  for (int l = 0; l < nphi; ++l) {
    const auto& tb = tasks[static_cast<std::size_t>(l)];
    const AffineTheta g0 = gamma_affine(tb, 0.0, upsilon(tb, 0.0));
    const VectorXd hx0 = tb.predicate.D * x0 + tb.predicate.c;
    for (int kk = 0; kk < tb.predicate.rows(); ++kk) {
      rb.begin();
      rb.add_theta(l, g0, -1.0);
      rb.end(hx0[kk] + g0.constant, RowTag::Initial);
    }
  }

  // (e) viability: the left limit at each β_l contains a witness ξ_l ∈ X.
  for (int l = 0; l < nphi; ++l) {
    const double beta = tasks[static_cast<std::size_t>(l)].beta;
    const int xi = L.xi_offset[static_cast<std::size_t>(l)];
    add_state_set_rows(rb, dyn.state_set, xi, RowTag::Viability);
    if (beta <= 0.0) continue;
    for (int lt : barrier.closure_map(beta)) {
      const auto& tb = tasks[static_cast<std::size_t>(lt)];
      const AffineTheta g = gamma_affine(tb, beta, upsilon(tb, beta));
      for (int kk = 0; kk < tb.predicate.rows(); ++kk) {
        rb.begin();
        for (int j = 0; j < n; ++j) rb.add(xi + j, -tb.predicate.D(kk, j));
        rb.add_theta(lt, g, -1.0);
        rb.end(tb.predicate.c[kk] + g.constant, RowTag::Viability);
      }
    }
  }

  // (f) invariance at every space-time vertex of every interval:
  //   d_kᵀ(A η + B u + p) + e_i ≥ −κ (d_kᵀ η + c_k + γ_i(η_t)).
  for (const auto& iv : L.intervals) {
    for (int q = 0; q < 2 * nvx; ++q) {
      const VectorXd& eta = L.state_vertices.vertices[static_cast<std::size_t>(q % nvx)];
      const double eta_t = q < nvx ? iv.s_lo : iv.s_hi;
      const VectorXd drift = dyn.A * eta + dyn.p;
      for (std::size_t a = 0; a < iv.active.size(); ++a) {
        const int l = iv.active[a];
        const auto& tb = tasks[static_cast<std::size_t>(l)];
        const AffineTheta e = gamma_slope_affine(tb, iv.segments[a]);
        const AffineTheta g = gamma_affine(tb, eta_t, iv.segments[a]);
        const AffineTheta theta_part{e.constant + k * g.constant, e.gamma_bar + k * g.gamma_bar, e.r + k * g.r};
        const MatrixXd DB = tb.predicate.D * dyn.B;
        for (int kk = 0; kk < tb.predicate.rows(); ++kk) {
          const auto d = tb.predicate.D.row(kk);
          rb.begin();
          for (int j = 0; j < m; ++j) rb.add(iv.u_offset + q * m + j, -DB(kk, j));
          rb.add_theta(l, theta_part, -1.0);
          rb.end(d.dot(drift) + k * (d.dot(eta) + tb.predicate.c[kk]) + theta_part.constant, RowTag::Invariance);
        }
      }
    }
  }
  rb.finish();
  return L;
}

std::map<RowTag, int> LpLayout::row_counts() const {
  std::map<RowTag, int> out;
  for (RowTag t : {RowTag::Param, RowTag::PredicateNonempty, RowTag::Input, RowTag::Initial, RowTag::Viability,
                   RowTag::Invariance})
    out[t] = 0;
  for (RowTag t : row_tags) ++out[t];
  return out;
}

std::map<RowTag, int> LpLayout::expected_row_counts() const {
  const auto& tasks = barrier.tasks();
  const int px = dyn.state_set.rows();
  const int pu = dyn.input_set.rows();
  const int nvz = 2 * static_cast<int>(state_vertices.size());
  std::map<RowTag, int> out;
  int param = 0, nonempty = 0, initial = 0, viability = 0, invariance = 0;
  for (const auto& tb : tasks) {
    param += tb.single_segment() ? 3 : 2;
    nonempty += tb.predicate.rows() + px;
    initial += tb.predicate.rows();
    viability += px;
    if (tb.beta > 0.0)
      for (const auto& other : tasks)
        if (other.beta >= tb.beta) viability += other.predicate.rows();
  }
  for (const auto& iv : intervals)
    for (int l : iv.active) invariance += nvz * tasks[static_cast<std::size_t>(l)].predicate.rows();
  out[RowTag::Param] = param;
  out[RowTag::PredicateNonempty] = nonempty;
  out[RowTag::Input] = static_cast<int>(intervals.size()) * nvz * pu;
  out[RowTag::Initial] = initial;
  out[RowTag::Viability] = viability;
  out[RowTag::Invariance] = invariance;
  return out;
}

double EncodingResult::robustness() const {
  double v = std::numeric_limits<double>::infinity();
  for (double x : r) v = std::min(v, x);
  return v;
}

VectorXd EncodingResult::vertex_input(int interval, int vertex) const {
  const auto& iv = layout->intervals.at(static_cast<std::size_t>(interval));
  const int m = layout->dyn.m();
  return solution.segment(iv.u_offset + vertex * m, m);
}

const ConvexSolver& default_lp_solver() {
  static const InteriorPointSolver solver([] {
    InteriorPointSettings s;
    s.feasibility_tol = 1e-11;
    s.gap_tol = 1e-10;
    s.max_iterations = 200;
    return s;
  }());
  return solver;
}

EncodingResult solve_lp(const LpLayout& layout, const ConvexSolver& solver) {
  EncodingResult out;
  out.layout = std::make_shared<LpLayout>(layout);
  const auto start = std::chrono::steady_clock::now();
  const int nphi = static_cast<int>(layout.barrier.tasks().size());

  QpResult res;
  if (layout.num_vars == 0) {
    res.status = SolveStatus::Optimal;
    res.x = VectorXd::Zero(0);
  } else {
    res = solver.solve(layout.lp);
  }
  out.status = res.status;

  if (res.status == SolveStatus::Infeasible) {
    for (RowTag tag : {RowTag::Invariance, RowTag::Viability, RowTag::Initial, RowTag::PredicateNonempty,
                       RowTag::Input, RowTag::Param}) {
      const QpResult probe = solver.solve(without_block(layout, tag));
      if (probe.status == SolveStatus::Optimal || probe.status == SolveStatus::Unbounded) {
        out.infeasible_block = tag;
        break;
      }
    }
  } else if (res.status != SolveStatus::Optimal) {
    throw SolverFailure("parameter LP: " + to_string(res.status));
  }
  out.solve_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (!out.optimal()) return out;

  out.solution = res.x;
  out.objective = res.objective;
  std::vector<Theta> thetas;
  const int n = layout.dyn.n();
  for (int l = 0; l < nphi; ++l) {
    const auto& tb = layout.barrier.tasks()[static_cast<std::size_t>(l)];
    Theta th;
    th.gamma_bar = tb.single_segment() ? 0.0 : std::max(0.0, res.x[layout.gamma_bar_var[static_cast<std::size_t>(l)]]);
    th.r = res.x[layout.r_var[static_cast<std::size_t>(l)]];
    thetas.push_back(th);
    out.r.push_back(th.r);
    out.viability_witnesses.push_back(res.x.segment(layout.xi_offset[static_cast<std::size_t>(l)], n));
    out.hr_witnesses.push_back(res.x.segment(layout.w_offset[static_cast<std::size_t>(l)], n));
  }
  out.barrier = layout.barrier.bind(thetas);
  return out;
}

namespace {

int select_best(const std::vector<EncodingResult>& results) {
  int best = -1;
  for (std::size_t i = 0; i < results.size(); ++i) {
    if (!results[i].optimal()) continue;
    if (best < 0) {
      best = static_cast<int>(i);
      continue;
    }
    // Differences below the LP tolerance count as ties.
    const double incumbent = results[static_cast<std::size_t>(best)].robustness();
    if (results[i].robustness() > incumbent + kSelectionTieTol * (1.0 + std::abs(incumbent)))
      best = static_cast<int>(i);
  }
  if (best < 0) throw AllInfeasible("no disjunct admits a feasible encoding");
  return best;
}

}  // namespace

DisjunctionResult encode_disjunction(const std::vector<ConjunctionBarrier>& disjuncts, const Dynamics& dyn,
                                     const VectorXd& x0, ClassKGain kappa, double r_min, const ConvexSolver& solver) {
  if (disjuncts.empty()) throw InvalidArgument("at least one disjunct is required");
  DisjunctionResult out;
  out.results.resize(disjuncts.size());
  std::vector<std::string> errors(disjuncts.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(disjuncts.size()); ++i) {
    try {
      const auto idx = static_cast<std::size_t>(i);
      out.results[idx] = solve_lp(build_lp(disjuncts[idx], dyn, x0, kappa, r_min), solver);
    } catch (const std::exception& e) {
      errors[static_cast<std::size_t>(i)] = e.what();
    }
  }
  for (const auto& e : errors)
    if (!e.empty()) throw SolverFailure(e);
  out.selected = select_best(out.results);
  return out;
}

DisjunctionResult encode_disjunction_serial(const std::vector<ConjunctionBarrier>& disjuncts, const Dynamics& dyn,
                                            const VectorXd& x0, ClassKGain kappa, double r_min,
                                            const ConvexSolver& solver) {
  if (disjuncts.empty()) throw InvalidArgument("at least one disjunct is required");
  DisjunctionResult out;
  for (const auto& d : disjuncts) out.results.push_back(solve_lp(build_lp(d, dyn, x0, kappa, r_min), solver));
  out.selected = select_best(out.results);
  return out;
}

ConjunctionBarrier make_conjunction(const std::vector<AtomicTask>& tasks,
                                    const std::map<std::string, LinearPredicate>& predicates, const Polytope& state_set,
                                    double horizon, const std::map<std::size_t, double>& free_times) {
  std::vector<TaskBarrier> barriers;
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    const auto it = predicates.find(tasks[i].predicate);
    if (it == predicates.end()) throw InvalidArgument("unknown predicate '" + tasks[i].predicate + "'");
    std::optional<double> ft;
    if (auto f = free_times.find(i); f != free_times.end()) ft = f->second;
    barriers.push_back(make_task_barrier(tasks[i], it->second, ft));
  }
  return ConjunctionBarrier(std::move(barriers), state_set, horizon);
}

}  // namespace stlrrt
