#include "stlrrt/planner.hpp"

#include "stlrrt/error.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

namespace stlrrt {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

constexpr double kInfinity = std::numeric_limits<double>::infinity();

bool positive_definite(const MatrixXd& M) {
  if (M.rows() != M.cols() || M.rows() == 0) return false;
  if (!M.isApprox(M.transpose(), 1e-12)) return false;
  Eigen::LLT<MatrixXd> llt(M);
  return llt.info() == Eigen::Success;
}

// Calls fn(t, x) on every knot and on the interpolated points t_k + i·res
// inside each knot interval; stops early when fn returns false.
template <typename Fn>
bool for_each_dense_point(const Trajectory& traj, double resolution, Fn&& fn) {
  const auto& T = traj.times();
  for (std::size_t k = 0; k < T.size(); ++k) {
    if (!fn(T[k], VectorXd(traj.state(k)))) return false;
    if (k + 1 == T.size()) break;
    const double span = T[k + 1] - T[k];
    for (int i = 1;; ++i) {
      const double off = i * resolution;
      if (off >= span) break;
      const double s = off / span;
      const VectorXd x = traj.state(k) + s * (traj.state(k + 1) - traj.state(k));
      if (!fn(T[k] + off, x)) return false;
    }
  }
  return true;
}

Trajectory transcribe(const VectorXd& x_from, double t_from, const VectorXd& x_ref, double t_to,
                      const VectorXd* x_pin, const ConjunctionBarrier& cb, const Dynamics& dyn,
                      const PlannerParams& params, const ConvexSolver& qp) {
  const int n = dyn.n();
  const int m = dyn.m();
  if (x_from.size() != n || x_ref.size() != n) throw DimensionMismatch("planner state has the wrong dimension");
  if (t_to - t_from < params.dt * (1.0 - 1e-9))
    throw ZeroDuration("span " + std::to_string(t_to - t_from) + " is shorter than dt");
  const std::vector<double> grid = knot_grid(cb, t_from, t_to, params.dt);
  const int N = static_cast<int>(grid.size()) - 1;
  const int nx = N * n;
  const int nv = nx + N * m;
  auto xi = [&](int k) { return (k - 1) * n; };
  auto ui = [&](int k) { return nx + k * m; };

  std::vector<Discretization> disc;
  disc.reserve(static_cast<std::size_t>(N));
  std::map<double, Discretization> local;
  for (int k = 0; k < N; ++k) {
    const double h = grid[static_cast<std::size_t>(k) + 1] - grid[static_cast<std::size_t>(k)];
    auto it = local.find(h);
    if (it == local.end()) it = local.emplace(h, discretize(dyn, h)).first;
    disc.push_back(it->second);
  }

  QpProblem prob;
  prob.q = VectorXd::Zero(nv);
  std::vector<Triplet> ptrip;
  for (int k = 1; k <= N; ++k) {
    const double w = grid[static_cast<std::size_t>(k)] - grid[static_cast<std::size_t>(k) - 1];
    for (int a = 0; a < n; ++a)
      for (int b = 0; b <= a; ++b)
        if (params.Q(a, b) != 0.0) ptrip.emplace_back(xi(k) + a, xi(k) + b, 2.0 * w * params.Q(a, b));
    prob.q.segment(xi(k), n) = -2.0 * w * params.Q * x_ref;
  }
  for (int k = 0; k < N; ++k) {
    const double w = grid[static_cast<std::size_t>(k) + 1] - grid[static_cast<std::size_t>(k)];
    for (int a = 0; a < m; ++a)
      for (int b = 0; b <= a; ++b)
        if (params.R(a, b) != 0.0) ptrip.emplace_back(ui(k) + a, ui(k) + b, 2.0 * w * params.R(a, b));
  }
  prob.P.resize(nv, nv);
  prob.P.setFromTriplets(ptrip.begin(), ptrip.end());

  // Exact ZOH dynamics, plus the terminal pin for bridges.
  std::vector<Triplet> atrip;
  std::vector<double> arhs;
  for (int k = 0; k < N; ++k) {
    const Discretization& d = disc[static_cast<std::size_t>(k)];
    VectorXd rhs = d.pd;
    if (k == 0) rhs += d.Ad * x_from;
    for (int a = 0; a < n; ++a) {
      const int row = static_cast<int>(arhs.size());
      atrip.emplace_back(row, xi(k + 1) + a, 1.0);
      if (k > 0)
        for (int b = 0; b < n; ++b)
          if (d.Ad(a, b) != 0.0) atrip.emplace_back(row, xi(k) + b, -d.Ad(a, b));
      for (int b = 0; b < m; ++b)
        if (d.Bd(a, b) != 0.0) atrip.emplace_back(row, ui(k) + b, -d.Bd(a, b));
      arhs.push_back(rhs[a]);
    }
  }
  if (x_pin) {
    for (int a = 0; a < n; ++a) {
      atrip.emplace_back(static_cast<int>(arhs.size()), xi(N) + a, 1.0);
      arhs.push_back((*x_pin)[a]);
    }
  }
  prob.A.resize(static_cast<int>(arhs.size()), nv);
  prob.A.setFromTriplets(atrip.begin(), atrip.end());
  prob.b = Eigen::Map<VectorXd>(arhs.data(), static_cast<Eigen::Index>(arhs.size()));

  std::vector<Triplet> gtrip;
  std::vector<double> grhs;
  const int last_constrained = x_pin ? N - 1 : N;
  for (int k = 1; k <= last_constrained; ++k) {
    const Polytope S = cb.closure_at(grid[static_cast<std::size_t>(k)]);
    for (int i = 0; i < S.rows(); ++i) {
      const int row = static_cast<int>(grhs.size());
      for (int a = 0; a < n; ++a)
        if (S.A()(i, a) != 0.0) gtrip.emplace_back(row, xi(k) + a, S.A()(i, a));
      grhs.push_back(S.b()[i]);
    }
  }
  const Polytope& U = dyn.input_set;
  for (int k = 0; k < N; ++k)
    for (int i = 0; i < U.rows(); ++i) {
      const int row = static_cast<int>(grhs.size());
      for (int a = 0; a < m; ++a)
        if (U.A()(i, a) != 0.0) gtrip.emplace_back(row, ui(k) + a, U.A()(i, a));
      grhs.push_back(U.b()[i]);
    }
  prob.G.resize(static_cast<int>(grhs.size()), nv);
  prob.G.setFromTriplets(gtrip.begin(), gtrip.end());
  prob.h = Eigen::Map<VectorXd>(grhs.data(), static_cast<Eigen::Index>(grhs.size()));

  const QpResult res = qp.solve(prob);
  if (res.status != SolveStatus::Optimal) throw QpInfeasible("transcription QP: " + to_string(res.status));

  // States are re-propagated from the inputs so every step is an exact ZOH step.
  Trajectory traj(n, m);
  traj.states.reserve(grid.size());
  VectorXd x = x_from;
  traj.push_back(grid[0], x);
  for (int k = 0; k < N; ++k) {
    const VectorXd u = res.x.segment(ui(k), m);
    const Discretization& d = disc[static_cast<std::size_t>(k)];
    x = d.Ad * x + d.Bd * u + d.pd;
    traj.push_input(u);
    if (k + 1 == N && x_pin) {
      if ((x - *x_pin).lpNorm<Eigen::Infinity>() > 1e-6 * std::max(1.0, x_pin->lpNorm<Eigen::Infinity>()))
        throw QpInfeasible("bridge terminal state missed by the propagated inputs");
      x = *x_pin;
    }
    traj.push_back(grid[static_cast<std::size_t>(k) + 1], x);
  }
  return traj;
}

}  // namespace

void PlannerParams::validate(int n, int m) const {
  if (Q.rows() != n || R.rows() != m) throw DimensionMismatch("Q must be n×n and R m×m");
  if (!positive_definite(Q)) throw InvalidArgument("Q must be symmetric positive definite");
  if (!positive_definite(R)) throw InvalidArgument("R must be symmetric positive definite");
  if (!(delta_max > 0.0)) throw InvalidArgument("delta_max must be positive");
  if (!(eps_rewire > 0.0)) throw InvalidArgument("eps_rewire must be positive");
  if (!(dt > 0.0)) throw InvalidArgument("dt must be positive");
  if (n_max < 0) throw InvalidArgument("n_max must be nonnegative");
  if (!(goal_bias >= 0.0 && goal_bias <= 1.0)) throw InvalidArgument("goal_bias must lie in [0, 1]");
  if (rewire_cap < 0) throw InvalidArgument("rewire_cap must be nonnegative");
  if (!(time_scale >= 0.0)) throw InvalidArgument("time_scale must be nonnegative");
}

PlanTree::PlanTree(const VectorXd& x0, int input_dim) : input_dim_(input_dim) {
  PlanNode root;
  root.x = x0;
  nodes_.push_back(std::move(root));
}

int PlanTree::insert(int parent, Trajectory edge) {
  const PlanNode& p = node(parent);
  if (edge.size() < 2) throw InvalidArgument("edge needs at least two knots");
  if (edge.times().front() != p.t) throw InvalidArgument("edge does not start at the parent time");
  if (!(edge.times().back() >= p.t)) throw InvalidArgument("edge goes back in time");
  PlanNode n;
  n.x = edge.state(edge.size() - 1);
  n.t = edge.times().back();
  n.parent = parent;
  n.edge = static_cast<int>(edges_.size());
  n.cost_to_go = p.cost_to_go + edge.path_length();
  edges_.push_back(std::move(edge));
  const int id = static_cast<int>(nodes_.size());
  nodes_.push_back(std::move(n));
  nodes_[static_cast<std::size_t>(parent)].children.push_back(id);
  return id;
}

bool PlanTree::is_ancestor(int a, int of) const {
  for (int v = node(of).parent; v >= 0; v = node(v).parent)
    if (v == a) return true;
  return false;
}

bool PlanTree::rewire(int j, int r, Trajectory edge) {
  if (r == 0 || j == r || is_ancestor(r, j)) return false;
  const double candidate = node(j).cost_to_go + edge.path_length();
  if (!(candidate < node(r).cost_to_go)) return false;
  auto& old_children = nodes_[static_cast<std::size_t>(node(r).parent)].children;
  old_children.erase(std::find(old_children.begin(), old_children.end(), r));
  PlanNode& nr = nodes_[static_cast<std::size_t>(r)];
  edges_[static_cast<std::size_t>(nr.edge)] = std::move(edge);
  nr.parent = j;
  nr.cost_to_go = candidate;
  nodes_[static_cast<std::size_t>(j)].children.push_back(r);
  std::vector<int> stack{r};
  while (!stack.empty()) {
    const int v = stack.back();
    stack.pop_back();
    for (int c : nodes_[static_cast<std::size_t>(v)].children) {
      PlanNode& nc = nodes_[static_cast<std::size_t>(c)];
      nc.cost_to_go = nodes_[static_cast<std::size_t>(v)].cost_to_go + edges_[static_cast<std::size_t>(nc.edge)].path_length();
      stack.push_back(c);
    }
  }
  return true;
}

std::vector<double> PlanTree::recompute_costs() const {
  std::vector<double> cost(nodes_.size(), 0.0);
  std::vector<int> stack{0};
  while (!stack.empty()) {
    const int v = stack.back();
    stack.pop_back();
    for (int c : node(v).children) {
      cost[static_cast<std::size_t>(c)] = cost[static_cast<std::size_t>(v)] + edge(node(c).edge).path_length();
      stack.push_back(c);
    }
  }
  return cost;
}

double PlanTree::audit() const {
  const std::vector<double> cost = recompute_costs();
  double err = 0.0;
  for (std::size_t i = 0; i < nodes_.size(); ++i) err = std::max(err, std::abs(cost[i] - nodes_[i].cost_to_go));
  return err;
}

Trajectory PlanTree::path_to(int i) const {
  std::vector<int> chain;
  for (int v = i; v > 0; v = node(v).parent) chain.push_back(v);
  Trajectory out(static_cast<int>(nodes_[0].x.size()), input_dim_);
  if (chain.empty()) {
    out.push_back(0.0, nodes_[0].x);
    return out;
  }
  for (auto it = chain.rbegin(); it != chain.rend(); ++it) out.append(edge(node(*it).edge));
  return out;
}

double dist(const VectorXd& xa, double ta, const VectorXd& xb, double tb, double time_scale) {
  return (xa - xb).norm() + time_scale * std::abs(ta - tb);
}

int past_nn(const PlanTree& tree, const VectorXd& x, double t, double time_scale, double min_gap) {
  int best = -1;
  double best_d = kInfinity;
  for (std::size_t i = 0; i < tree.size(); ++i) {
    const PlanNode& n = tree.nodes()[i];
    if (n.t > t - min_gap) continue;
    const double d = dist(x, t, n.x, n.t, time_scale);
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(i);
    }
  }
  if (best < 0) throw NoEligibleNode("no node precedes t = " + std::to_string(t));
  return best;
}

std::vector<int> future_nns(const PlanTree& tree, int j, double eps, double time_scale) {
  const PlanNode& nj = tree.node(j);
  std::vector<std::pair<double, int>> found;
  for (std::size_t i = 0; i < tree.size(); ++i) {
    const int r = static_cast<int>(i);
    const PlanNode& nr = tree.nodes()[i];
    if (r == j || nr.t < nj.t) continue;
    const double d = dist(nr.x, nr.t, nj.x, nj.t, time_scale);
    if (d > eps || tree.is_ancestor(r, j)) continue;
    found.emplace_back(d, r);
  }
  std::sort(found.begin(), found.end());
  std::vector<int> out;
  out.reserve(found.size());
  for (const auto& [d, r] : found) out.push_back(r);
  return out;
}

std::vector<double> knot_grid(const ConjunctionBarrier& cb, double t_from, double t_to, double dt) {
  if (!(dt > 0.0)) throw InvalidArgument("dt must be positive");
  if (!(t_to > t_from)) throw ZeroDuration("empty knot span");
  std::vector<double> grid;
  const double span = t_to - t_from;
  for (int k = 0;; ++k) {
    const double off = k * dt;
    if (off >= span - 1e-9 * std::max(1.0, span)) break;
    grid.push_back(t_from + off);
  }
  grid.push_back(t_to);
  std::vector<double> switches;
  for (double s : cb.switch_times())
    if (s > t_from && s < t_to) switches.push_back(s);
  std::vector<double> merged;
  std::merge(grid.begin(), grid.end(), switches.begin(), switches.end(), std::back_inserter(merged));
  std::vector<double> out;
  auto pinned = [&](double t) {
    return t == t_from || t == t_to || std::binary_search(switches.begin(), switches.end(), t);
  };
  for (double t : merged) {
    if (!out.empty() && t - out.back() <= 1e-9 * std::max(1.0, std::abs(t))) {
      if (pinned(t) && !pinned(out.back())) out.back() = t;
      continue;
    }
    out.push_back(t);
  }
  return out;
}

Trajectory steer(const VectorXd& x_from, double t_from, const VectorXd& x_target, double t_target,
                 const ConjunctionBarrier& cb, const Dynamics& dyn, const PlannerParams& params,
                 const ConvexSolver& qp) {
  if (t_target < t_from) throw InvalidArgument("steer target precedes its origin");
  const double delta = std::min(t_target - t_from, params.delta_max);
  return transcribe(x_from, t_from, x_target, t_from + delta, nullptr, cb, dyn, params, qp);
}

Trajectory bridge(const VectorXd& x_from, double t_from, const VectorXd& x_to, double t_to,
                  const ConjunctionBarrier& cb, const Dynamics& dyn, const PlannerParams& params,
                  const ConvexSolver& qp) {
  if (!(t_to > t_from)) throw ZeroDuration("bridge needs t_from < t_to");
  return transcribe(x_from, t_from, VectorXd::Zero(x_from.size()), t_to, &x_to, cb, dyn, params, qp);
}

bool collision_free(const Trajectory& traj, const std::vector<Polytope>& obstacles, double resolution) {
  if (!(resolution > 0.0)) throw InvalidArgument("resolution must be positive");
  if (obstacles.empty()) return true;
  return for_each_dense_point(traj, resolution, [&](double, const VectorXd& x) {
    for (const auto& O : obstacles)
      if ((O.A() * x - O.b()).maxCoeff() <= 0.0) return false;
    return true;
  });
}

bool inside_barrier(const Trajectory& traj, const ConjunctionBarrier& cb, double resolution, double tol) {
  if (!(resolution > 0.0)) throw InvalidArgument("resolution must be positive");
  const Polytope& X = cb.state_set();
  return for_each_dense_point(traj, resolution, [&](double t, const VectorXd& x) {
    if ((X.A() * x - X.b()).maxCoeff() > tol) return false;
    for (const auto& tb : cb.tasks()) {
      if (tb.beta < t) continue;
      if (predicate_value(tb.predicate, x) + gamma_eval(tb, t) < -tol) return false;
    }
    return true;
  });
}

const ConvexSolver& default_planner_solver() {
  static const InteriorPointSolver solver;
  return solver;
}

PlanResult plan(const ConjunctionBarrier& cb, const Dynamics& dyn, const VectorXd& x0, double t_hr,
                const std::vector<Polytope>& obstacles, const PlannerParams& params, const ConvexSolver& qp) {
  using Clock = std::chrono::steady_clock;
  const auto start = Clock::now();
  auto elapsed = [&] { return std::chrono::duration<double>(Clock::now() - start).count(); };

  dyn.validate();
  params.validate(dyn.n(), dyn.m());
  if (!cb.is_bound()) throw ParametersUnbound("planning needs a bound barrier");
  if (!(t_hr > 0.0)) throw InvalidArgument("t_hr must be positive");
  if (!contains(cb.set_at(0.0), x0, params.membership_tol))
    throw PreconditionViolation("x0 lies outside the barrier set at t = 0");

  PlanResult out{Trajectory(dyn.n(), dyn.m()), PlanStats{}, PlanTree(x0, dyn.m()), -1};
  PlanTree& tree = out.tree;
  PlanStats& st = out.stats;
  st.seed = params.seed;
  Rng rng(params.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double res = params.resolution();
  std::vector<int> goals;
  double best = kInfinity;
  int ops = 0;

  auto audit_tick = [&] {
    if (++ops % 100 != 0) return;
    ++st.audits;
    st.max_audit_error = std::max(st.max_audit_error, tree.audit());
  };

  for (int it = 0; it < params.n_max; ++it) {
    st.iterations = it + 1;
    const double t_s = unit(rng) < params.goal_bias ? t_hr : t_hr * unit(rng);
    VectorXd x_s;
    try {
      x_s = sample_uniform(cb.set_at(t_s), rng);
    } catch (const EmptySet&) {
      ++st.membership_rejections;
      continue;
    }
    int i = -1;
    try {
      i = past_nn(tree, x_s, t_s, params.time_scale, params.dt);
    } catch (const NoEligibleNode&) {
      ++st.zero_duration;
      continue;
    }
    Trajectory edge;
    try {
      edge = steer(tree.node(i).x, tree.node(i).t, x_s, t_s, cb, dyn, params, qp);
    } catch (const ZeroDuration&) {
      ++st.zero_duration;
      continue;
    } catch (const QpInfeasible&) {
      ++st.steer_infeasible;
      continue;
    }
    if (!collision_free(edge, obstacles, res)) {
      ++st.collision_rejections;
      continue;
    }
    if (!inside_barrier(edge, cb, res, params.membership_tol)) {
      ++st.membership_rejections;
      continue;
    }
    const int j = tree.insert(i, std::move(edge));
    audit_tick();
    if (tree.node(j).t >= t_hr - 1e-9 * std::max(1.0, t_hr)) goals.push_back(j);

    std::vector<int> near = future_nns(tree, j, params.eps_rewire, params.time_scale);
    if (static_cast<int>(near.size()) > params.rewire_cap) near.resize(static_cast<std::size_t>(params.rewire_cap));
    for (int r : near) {
      const PlanNode& nj = tree.node(j);
      const PlanNode& nr = tree.node(r);
      if (nr.t - nj.t < params.dt) continue;
      if (nj.cost_to_go + (nr.x - nj.x).norm() >= nr.cost_to_go) {
        ++st.bridge_pruned;
        continue;
      }
      ++st.bridge_attempts;
      Trajectory link;
      try {
        link = bridge(nj.x, nj.t, nr.x, nr.t, cb, dyn, params, qp);
      } catch (const QpInfeasible&) {
        ++st.bridge_infeasible;
        continue;
      }
      if (!collision_free(link, obstacles, res) || !inside_barrier(link, cb, res, params.membership_tol)) {
        ++st.bridge_infeasible;
        continue;
      }
      if (tree.rewire(j, r, std::move(link))) {
        ++st.rewires;
        audit_tick();
      }
    }

    if (!goals.empty()) {
      double cur = kInfinity;
      for (int g : goals) cur = std::min(cur, tree.node(g).cost_to_go);
      if (st.first_iteration < 0) {
        st.first_iteration = it;
        st.first_cost = cur;
        st.first_wall_seconds = elapsed();
      }
      if (cur < best) {
        best = cur;
        st.best_cost = cur;
        st.best_iteration = it;
        st.best_wall_seconds = elapsed();
        st.best_cost_history.emplace_back(it, cur);
      }
    }
  }
  st.nodes = static_cast<int>(tree.size());
  ++st.audits;
  st.max_audit_error = std::max(st.max_audit_error, tree.audit());
  st.total_wall_seconds = elapsed();
  if (goals.empty()) throw NoSolution("no node reached t_hr = " + std::to_string(t_hr) + " within " +
                                      std::to_string(params.n_max) + " iterations");
  int g_best = goals.front();
  for (int g : goals)
    if (tree.node(g).cost_to_go < tree.node(g_best).cost_to_go) g_best = g;
  out.goal_node = g_best;
  out.trajectory = tree.path_to(g_best);
  return out;
}

}  // namespace stlrrt
