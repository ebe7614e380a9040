#include "stlrrt/barrier.hpp"

#include "stlrrt/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace stlrrt {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

std::string fmt(double v) { return std::to_string(v); }

void check_domain(const TaskBarrier& tb, double t) {
  const double slack = 1e-12 * std::max(1.0, tb.beta);
  if (t < -slack || t > tb.beta + slack)
    throw OutOfDomain("time " + fmt(t) + " outside [0, " + fmt(tb.beta) + "]");
}

}  // namespace

TaskBarrier make_task_barrier(const AtomicTask& task, const LinearPredicate& predicate, std::optional<double> free_time) {
  if (predicate.rows() < 1) throw InvalidArgument("predicate '" + task.predicate + "' has no rows");
  TaskBarrier tb;
  tb.task = task;
  tb.predicate = predicate;
  const Interval o = task.outer;
  auto pick = [&](double lo, double hi) {
    const double alpha = free_time.value_or(0.5 * (lo + hi));
    if (alpha < lo || alpha > hi)
      throw FreeTimeOutOfRange("free time " + fmt(alpha) + " outside [" + fmt(lo) + ", " + fmt(hi) + "]");
    return alpha;
  };
  switch (task.kind) {
    case TaskKind::F:
      tb.alpha = pick(o.a, o.b);
      tb.beta = tb.alpha;
      break;
    case TaskKind::G:
      tb.alpha = o.a;
      tb.beta = o.b;
      break;
    case TaskKind::FG:
      tb.alpha = pick(o.a + task.inner->a, o.b + task.inner->a);
      tb.beta = tb.alpha + (task.inner->b - task.inner->a);
      break;
    case TaskKind::GF:
      throw InvalidArgument("GF tasks must be decomposed before building a barrier");
  }
  return tb;
}

int upsilon(const TaskBarrier& tb, double t) {
  check_domain(tb, t);
  return (tb.single_segment() || t >= tb.alpha) ? 2 : 1;
}

AffineTheta gamma_slope_affine(const TaskBarrier& tb, int segment) {
  if (segment == 1 && !tb.single_segment()) return {0.0, -1.0 / tb.alpha, 0.0};
  return {};
}

AffineTheta gamma_affine(const TaskBarrier& tb, double t, int segment) {
  if (segment == 1 && !tb.single_segment()) return {0.0, 1.0 - t / tb.alpha, -1.0};
  return {0.0, 0.0, -1.0};
}

double gamma_eval(const TaskBarrier& tb, double t) {
  if (!tb.theta) throw ParametersUnbound("task barrier has no bound parameters");
  return gamma_affine(tb, t, upsilon(tb, t)).eval(*tb.theta);
}

MatrixForm matrix_form(const TaskBarrier& tb, int segment) {
  if (segment != 1 && segment != 2) throw InvalidArgument("segment must be 1 or 2");
  const int nh = tb.predicate.rows();
  const int n = tb.predicate.dim();
  MatrixForm mf;
  mf.E.constant = MatrixXd::Zero(nh, n + 1);
  mf.E.constant.leftCols(n) = tb.predicate.D;
  mf.E.gamma_bar = MatrixXd::Zero(nh, n + 1);
  mf.E.r = MatrixXd::Zero(nh, n + 1);
  const AffineTheta e = gamma_slope_affine(tb, segment);
  mf.E.gamma_bar.col(n).setConstant(e.gamma_bar);
  // g_i(θ) is γ evaluated at t = 0 on the segment's affine extension.
  const AffineTheta g = gamma_affine(tb, 0.0, segment);
  mf.g.constant = tb.predicate.c;
  mf.g.gamma_bar = VectorXd::Constant(nh, g.gamma_bar);
  mf.g.r = VectorXd::Constant(nh, g.r);
  return mf;
}

ConjunctionBarrier::ConjunctionBarrier(std::vector<TaskBarrier> tasks, Polytope state_set, double horizon)
    : tasks_(std::move(tasks)), state_set_(std::move(state_set)), horizon_(horizon) {
  switch_times_.push_back(0.0);
  for (const auto& tb : tasks_) {
    if (tb.predicate.dim() != state_set_.dim())
      throw DimensionMismatch("predicate '" + tb.task.predicate + "' has dimension " + std::to_string(tb.predicate.dim()) +
                              ", state set has " + std::to_string(state_set_.dim()));
    if (!(0.0 <= tb.alpha && tb.alpha <= tb.beta)) throw InvalidArgument("switching times must satisfy 0 <= alpha <= beta");
    switch_times_.push_back(tb.alpha);
    switch_times_.push_back(tb.beta);
    beta_phi_ = std::max(beta_phi_, tb.beta);
  }
  std::sort(switch_times_.begin(), switch_times_.end());
  switch_times_.erase(std::unique(switch_times_.begin(), switch_times_.end()), switch_times_.end());
  horizon_ = std::max(horizon_, beta_phi_);
}

bool ConjunctionBarrier::is_bound() const {
  return std::all_of(tasks_.begin(), tasks_.end(), [](const TaskBarrier& tb) { return tb.theta.has_value(); });
}

void ConjunctionBarrier::require_bound() const {
  if (!is_bound()) throw ParametersUnbound("conjunction barrier has unbound task parameters");
}

ConjunctionBarrier ConjunctionBarrier::bind(const std::vector<Theta>& thetas) const {
  if (thetas.size() != tasks_.size()) throw DimensionMismatch("one parameter pair per task is required");
  ConjunctionBarrier out = *this;
  for (std::size_t l = 0; l < thetas.size(); ++l) out.tasks_[l].theta = thetas[l];
  return out;
}

std::vector<int> ConjunctionBarrier::switch_map(double t) const {
  std::vector<int> out;
  for (std::size_t l = 0; l < tasks_.size(); ++l)
    if (tasks_[l].beta > t) out.push_back(static_cast<int>(l));
  return out;
}

std::vector<int> ConjunctionBarrier::closure_map(double t) const {
  std::vector<int> out;
  for (std::size_t l = 0; l < tasks_.size(); ++l)
    if (tasks_[l].beta >= t) out.push_back(static_cast<int>(l));
  return out;
}

int ConjunctionBarrier::interval_index(double t) const {
  if (t >= beta_phi_) return -1;
  const auto it = std::upper_bound(switch_times_.begin(), switch_times_.end(), t);
  return std::max(0, static_cast<int>(it - switch_times_.begin()) - 1);
}

Polytope ConjunctionBarrier::rows_for(const std::vector<int>& active, double t) const {
  const int n = dim();
  int total = 0;
  for (int l : active) total += tasks_[static_cast<std::size_t>(l)].predicate.rows();
  MatrixXd A(total, n);
  VectorXd b(total);
  int row = 0;
  for (int l : active) {
    const auto& tb = tasks_[static_cast<std::size_t>(l)];
    const double g = gamma_eval(tb, std::min(t, tb.beta));
    const int nh = tb.predicate.rows();
    A.middleRows(row, nh) = -tb.predicate.D;
    b.segment(row, nh) = tb.predicate.c.array() + g;
    row += nh;
  }
  return state_set_.with_rows(A, b);
}

Polytope ConjunctionBarrier::set_at(double t) const {
  if (t < 0.0) throw OutOfDomain("negative time " + fmt(t));
  if (t >= beta_phi_) return state_set_;
  require_bound();
  return rows_for(switch_map(t), t);
}

Polytope ConjunctionBarrier::limit_from_left(double t) const {
  if (t <= 0.0 || !std::binary_search(switch_times_.begin(), switch_times_.end(), t))
    throw NotASwitchTime(fmt(t) + " is not a positive switch time");
  require_bound();
  return rows_for(closure_map(t), t);
}

Polytope ConjunctionBarrier::closure_at(double t) const {
  if (t < 0.0) throw OutOfDomain("negative time " + fmt(t));
  if (t > beta_phi_) return state_set_;
  require_bound();
  return rows_for(closure_map(t), t);
}

double ConjunctionBarrier::value(const VectorXd& x, double t) const {
  require_bound();
  double v = std::numeric_limits<double>::infinity();
  for (int l : switch_map(t)) {
    const auto& tb = tasks_[static_cast<std::size_t>(l)];
    v = std::min(v, predicate_value(tb.predicate, x) + gamma_eval(tb, t));
  }
  return v;
}

}  // namespace stlrrt
