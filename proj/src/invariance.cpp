#include "stlrrt/invariance.hpp"

#include "stlrrt/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace stlrrt {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

constexpr double kInfinity = std::numeric_limits<double>::infinity();

// γ_l(t) = g0 + g1·t on the segment containing s.
std::pair<double, double> gamma_line(const TaskBarrier& tb, int segment) {
  const AffineTheta at0 = gamma_affine(tb, 0.0, segment);
  const AffineTheta slope = gamma_slope_affine(tb, segment);
  return {at0.eval(*tb.theta), slope.eval(*tb.theta)};
}

}  // namespace

CbfQpKernel::CbfQpKernel(const ConjunctionBarrier& cb, const Dynamics& dyn, ClassKGain kappa)
    : cb_(cb), dyn_(dyn), kappa_(kappa) {
  dyn_.validate();
  if (!cb_.is_bound()) throw ParametersUnbound("CBF-QP needs a bound barrier");
  if (cb_.dim() != dyn_.n()) throw DimensionMismatch("barrier and dynamics dimensions differ");
  if (!(kappa_.kappa_gain > 0.0)) throw InvalidArgument("class-K gain must be strictly positive");
  const double k = kappa_.kappa_gain;
  const auto& S = cb_.switch_times();
  for (std::size_t j = 0; j + 1 < S.size(); ++j) {
    const std::vector<int> active = cb_.switch_map(S[j]);
    int rows = 0;
    for (int l : active) rows += cb_.tasks()[static_cast<std::size_t>(l)].predicate.rows();
    Block blk;
    blk.D.resize(rows, dyn_.n());
    blk.h0.resize(rows);
    blk.h1.resize(rows);
    VectorXd slope(rows);
    int r = 0;
    for (int l : active) {
      const auto& tb = cb_.tasks()[static_cast<std::size_t>(l)];
      const int seg = upsilon(tb, S[j]);
      const auto [g0, g1] = gamma_line(tb, seg);
      const int nh = tb.predicate.rows();
      blk.D.middleRows(r, nh) = tb.predicate.D;
      blk.h0.segment(r, nh) = tb.predicate.c.array() + g0;
      blk.h1.segment(r, nh).setConstant(g1);
      slope.segment(r, nh).setConstant(g1);
      r += nh;
    }
    blk.DB = blk.D * dyn_.B;
    blk.M = k * blk.D + blk.D * dyn_.A;
    blk.offset = k * blk.h0 + blk.D * dyn_.p + slope;
    blk.gamma_t = k * blk.h1;
    blocks_.push_back(std::move(blk));
  }
}

const CbfQpKernel::Block* CbfQpKernel::block_at(double t) const {
  const int j = cb_.interval_index(t);
  return j < 0 ? nullptr : &blocks_[static_cast<std::size_t>(j)];
}

void CbfQpKernel::rows(const VectorXd& x, double t, MatrixXd& C, VectorXd& d) const {
  const Polytope& U = dyn_.input_set;
  const Block* blk = block_at(t);
  const int nb = blk ? static_cast<int>(blk->D.rows()) : 0;
  C.resize(nb + U.rows(), dyn_.m());
  d.resize(nb + U.rows());
  if (blk) {
    C.topRows(nb) = blk->DB;
    d.head(nb).noalias() = -blk->M * x;
    d.head(nb) -= blk->offset + t * blk->gamma_t;
  }
  C.bottomRows(U.rows()) = -U.A();
  d.tail(U.rows()) = -U.b();
}

std::optional<VectorXd> CbfQpKernel::try_control(const VectorXd& x, double t, double tol) const {
  thread_local MatrixXd C;
  thread_local VectorXd d;
  rows(x, t, C, d);
  if ((d.array() <= 0.0).all()) return VectorXd::Zero(dyn_.m());
  const LeastDistanceResult res = least_distance(C, d, tol);
  if (!res.feasible) return std::nullopt;
  return res.u;
}

VectorXd CbfQpKernel::control(const VectorXd& x, double t, double tol) const {
  thread_local MatrixXd C;
  thread_local VectorXd d;
  rows(x, t, C, d);
  if ((d.array() <= 0.0).all()) return VectorXd::Zero(dyn_.m());
  const LeastDistanceResult res = least_distance(C, d, tol);
  if (!res.feasible)
    throw QpInfeasible("CBF-QP infeasible at t=" + std::to_string(t) + ", worst row " +
                       std::to_string(res.worst_row) + " violated by " + std::to_string(res.max_violation));
  return res.u;
}

double CbfQpKernel::barrier_value(const VectorXd& x, double t) const {
  if (t > cb_.beta_phi()) return kInfinity;
  const auto& S = cb_.switch_times();
  if (std::binary_search(S.begin(), S.end(), t)) {
    double v = kInfinity;
    for (int l : cb_.closure_map(t)) {
      const auto& tb = cb_.tasks()[static_cast<std::size_t>(l)];
      v = std::min(v, predicate_value(tb.predicate, x) + gamma_eval(tb, t));
    }
    return v;
  }
  const Block* blk = block_at(t);
  if (!blk || blk->D.rows() == 0) return kInfinity;
  return (blk->D * x + blk->h0 + t * blk->h1).minCoeff();
}

VectorXd cbf_qp_control(const ConjunctionBarrier& cb, const Dynamics& dyn, ClassKGain kappa, const VectorXd& x,
                        double t) {
  return CbfQpKernel(cb, dyn, kappa).control(x, t);
}

VectorXd cbf_qp_control(const ConjunctionBarrier& cb, const Dynamics& dyn, ClassKGain kappa, const VectorXd& x,
                        double t, const ConvexSolver& qp) {
  const CbfQpKernel kernel(cb, dyn, kappa);
  MatrixXd C;
  VectorXd d;
  kernel.rows(x, t, C, d);
  const int m = dyn.m();
  QpProblem prob;
  prob.P.resize(m, m);
  for (int i = 0; i < m; ++i) prob.P.insert(i, i) = 2.0;
  prob.q = VectorXd::Zero(m);
  prob.G = (-C).sparseView();
  prob.h = -d;
  prob.A.resize(0, m);
  prob.b.resize(0);
  const QpResult res = qp.solve(prob);
  if (res.status != SolveStatus::Optimal) throw QpInfeasible("CBF-QP: " + to_string(res.status));
  return res.x;
}

LieCheck check_lie_condition(const ConjunctionBarrier& cb, const Dynamics& dyn, ClassKGain kappa, const VectorXd& x,
                             double t, const VectorXd& u) {
  if (!cb.is_bound()) throw ParametersUnbound("Lie check needs a bound barrier");
  LieCheck out;
  out.sample.t = t;
  out.sample.x = x;
  out.sample.u = u;
  out.min_margin = kInfinity;
  out.sample.slack = kInfinity;
  const std::vector<int> active = cb.switch_map(t);
  const VectorXd flow = dyn.A * x + dyn.B * u + dyn.p;

  std::vector<double> b(active.size());
  double bmin = kInfinity;
  for (std::size_t a = 0; a < active.size(); ++a) {
    const auto& tb = cb.tasks()[static_cast<std::size_t>(active[a])];
    b[a] = predicate_value(tb.predicate, x) + gamma_eval(tb, t);
    bmin = std::min(bmin, b[a]);
  }
  for (std::size_t a = 0; a < active.size(); ++a) {
    const auto& tb = cb.tasks()[static_cast<std::size_t>(active[a])];
    const double e = gamma_slope_affine(tb, upsilon(tb, t)).eval(*tb.theta);
    const double gamma = gamma_eval(tb, t);
    const VectorXd hx = tb.predicate.D * x + tb.predicate.c;
    const double hmin = hx.minCoeff();
    std::vector<int> rows;
    for (int k = 0; k < tb.predicate.rows(); ++k) {
      const double row_margin = tb.predicate.D.row(k).dot(flow) + e + kappa(hx[k] + gamma);
      out.sample.slack = std::min(out.sample.slack, row_margin);
      if (b[a] > bmin + 1e-8 || hx[k] > hmin + 1e-8) continue;
      rows.push_back(k);
      out.min_margin = std::min(out.min_margin, tb.predicate.D.row(k).dot(flow) + e + kappa(b[a]));
    }
    out.sample.active_rows.push_back(std::move(rows));
  }
  out.holds = out.min_margin >= -1e-9;
  return out;
}

Rollout rollout(const CbfQpKernel& kernel, const VectorXd& x0, double dt, std::optional<double> t_end) {
  if (!(dt > 0.0)) throw InvalidArgument("dt must be positive");
  const ConjunctionBarrier& cb = kernel.barrier();
  const Dynamics& dyn = kernel.dynamics();
  if (x0.size() != dyn.n()) throw DimensionMismatch("x0 has the wrong dimension");
  if (!contains(cb.set_at(0.0), x0, 1e-7)) throw PreconditionViolation("x0 lies outside the barrier set at t = 0");
  const double beta = cb.beta_phi();
  const double end = t_end.value_or(beta);
  if (!(end > 0.0)) throw InvalidArgument("rollout end time must be positive");

  // Grid {k·dt} ∪ switch times, switch times winning near-ties.
  std::vector<double> grid;
  const auto steps = static_cast<long long>(std::floor(end / dt + 1e-9));
  grid.reserve(static_cast<std::size_t>(steps) + cb.switch_times().size() + 2);
  for (long long k = 0; k <= steps; ++k) grid.push_back(static_cast<double>(k) * dt);
  for (double s : cb.switch_times())
    if (s <= end) grid.push_back(s);
  grid.push_back(end);
  std::sort(grid.begin(), grid.end());
  std::vector<double> merged;
  merged.reserve(grid.size());
  const auto& S = cb.switch_times();
  auto is_switch = [&](double t) { return std::binary_search(S.begin(), S.end(), t) || t == end; };
  for (double t : grid) {
    if (t > end) break;
    if (!merged.empty() && t - merged.back() <= 1e-9 * std::max(1.0, t)) {
      if (is_switch(t) && !is_switch(merged.back())) merged.back() = t;
      continue;
    }
    merged.push_back(t);
  }

  DiscretizationCache cache(dyn);
  const Discretization& regular = cache.get(dt);
  Rollout out;
  out.trajectory = Trajectory(dyn.n(), dyn.m());
  out.trajectory.states.reserve(merged.size());
  out.trajectory.inputs.reserve(merged.size() * static_cast<std::size_t>(dyn.m()));
  out.barrier_values.reserve(merged.size());
  out.min_barrier = kInfinity;

  VectorXd x = x0;
  VectorXd next(dyn.n());
  const VectorXd zero = VectorXd::Zero(dyn.m());
  for (std::size_t k = 0; k < merged.size(); ++k) {
    const double t = merged[k];
    out.trajectory.push_back(t, x);
    const double b = kernel.barrier_value(x, t);
    out.barrier_values.push_back(b);
    if (t <= beta) out.min_barrier = std::min(out.min_barrier, b);
    if (k + 1 == merged.size()) break;
    VectorXd u;
    if (t < beta) {
      try {
        u = kernel.control(x, t);
      } catch (const QpInfeasible& e) {
        throw QpInfeasible(std::string("rollout: ") + e.what());
      }
    } else {
      u = zero;
    }
    out.trajectory.push_input(u);
    const double h = merged[k + 1] - t;
    const Discretization& disc = std::abs(h - dt) <= 1e-12 * std::max(1.0, t) ? regular : cache.get(h);
    next.noalias() = disc.Ad * x;
    next.noalias() += disc.Bd * u;
    next += disc.pd;
    x.swap(next);
  }
  return out;
}

Rollout rollout(const ConjunctionBarrier& cb, const Dynamics& dyn, ClassKGain kappa, const VectorXd& x0, double dt,
                std::optional<double> t_end) {
  return rollout(CbfQpKernel(cb, dyn, kappa), x0, dt, t_end);
}

namespace {

std::vector<std::pair<VectorXd, double>> sweep_samples(const CbfQpKernel& kernel, int per_interval,
                                                       std::uint64_t seed) {
  if (per_interval < 1) throw InvalidArgument("per_interval must be positive");
  Rng rng(seed);
  const auto& S = kernel.barrier().switch_times();
  const Polytope& X = kernel.dynamics().state_set;
  std::vector<std::pair<VectorXd, double>> out;
  for (std::size_t j = 0; j + 1 < S.size(); ++j) {
    std::uniform_real_distribution<double> time(S[j], S[j + 1]);
    for (int i = 0; i < per_interval; ++i) {
      double t = time(rng);
      if (t <= S[j]) t = std::nextafter(S[j], S[j + 1]);
      out.emplace_back(sample_uniform(X, rng), t);
    }
  }
  return out;
}

double worst_violation(const CbfQpKernel& kernel, const VectorXd& x, double t) {
  MatrixXd C;
  VectorXd d;
  kernel.rows(x, t, C, d);
  const LeastDistanceResult res = least_distance(C, d, 1e-7);
  return res.max_violation;
}

}  // namespace

SweepResult qp_feasibility_sweep(const CbfQpKernel& kernel, int per_interval, std::uint64_t seed, double tol) {
  const auto samples = sweep_samples(kernel, per_interval, seed);
  std::vector<char> failed(samples.size(), 0);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(samples.size()); ++i) {
    const auto& [x, t] = samples[static_cast<std::size_t>(i)];
    failed[static_cast<std::size_t>(i)] = kernel.try_control(x, t, tol) ? 0 : 1;
  }
  SweepResult out;
  out.samples = samples.size();
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (!failed[i]) continue;
    ++out.failures;
    out.worst_violation = std::max(out.worst_violation, worst_violation(kernel, samples[i].first, samples[i].second));
  }
  return out;
}

SweepResult qp_feasibility_sweep_serial(const CbfQpKernel& kernel, int per_interval, std::uint64_t seed, double tol) {
  const auto samples = sweep_samples(kernel, per_interval, seed);
  SweepResult out;
  out.samples = samples.size();
  for (const auto& [x, t] : samples) {
    if (kernel.try_control(x, t, tol)) continue;
    ++out.failures;
    out.worst_violation = std::max(out.worst_violation, worst_violation(kernel, x, t));
  }
  return out;
}

}  // namespace stlrrt
