#include "stlrrt/scenario.hpp"

#include "stlrrt/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace stlrrt {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using json = nlohmann::json;

namespace {

[[noreturn]] void schema(const std::string& field, const std::string& reason) {
  throw SchemaError(field + ": " + reason);
}

const json& require(const json& obj, const std::string& key, const std::string& path) {
  if (!obj.is_object() || !obj.contains(key)) schema(path + key, "missing required field");
  return obj.at(key);
}

double number(const json& j, const std::string& field) {
  if (!j.is_number()) schema(field, "expected a number");
  return j.get<double>();
}

VectorXd vector_of(const json& j, const std::string& field) {
  if (!j.is_array()) schema(field, "expected an array of numbers");
  VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = number(j[i], field + "[" + std::to_string(i) + "]");
  return v;
}

MatrixXd matrix_of(const json& j, const std::string& field) {
  if (!j.is_array() || j.empty()) schema(field, "expected a nonempty array of rows");
  const std::size_t cols = j[0].is_array() ? j[0].size() : 0;
  if (cols == 0) schema(field, "rows must be nonempty arrays");
  MatrixXd M(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string rf = field + "[" + std::to_string(i) + "]";
    if (!j[i].is_array() || j[i].size() != cols) schema(rf, "ragged matrix row");
    for (std::size_t k = 0; k < cols; ++k) M(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = number(j[i][k], rf);
  }
  return M;
}

/// Scalar (times identity), vector (diagonal) or full matrix.
MatrixXd weight_of(const json& j, int dim, const std::string& field) {
  if (j.is_number()) return number(j, field) * MatrixXd::Identity(dim, dim);
  if (j.is_array() && !j.empty() && j[0].is_number()) {
    const VectorXd d = vector_of(j, field);
    if (d.size() != dim) schema(field, "diagonal has the wrong length");
    return d.asDiagonal();
  }
  const MatrixXd M = matrix_of(j, field);
  if (M.rows() != dim || M.cols() != dim) schema(field, "expected a " + std::to_string(dim) + "x" + std::to_string(dim) + " matrix");
  return M;
}

Polytope polytope_of(const json& j, const std::string& field) {
  if (!j.is_object()) schema(field, "expected an object with radius, lo/hi or A/b");
  try {
    if (j.contains("radius")) return Polytope::box(vector_of(j.at("radius"), field + ".radius"));
    if (j.contains("lo") || j.contains("hi"))
      return Polytope::box(vector_of(require(j, "lo", field + "."), field + ".lo"),
                           vector_of(require(j, "hi", field + "."), field + ".hi"));
    if (j.contains("A")) return Polytope(matrix_of(j.at("A"), field + ".A"), vector_of(require(j, "b", field + "."), field + ".b"));
  } catch (const SchemaError&) {
    throw;
  } catch (const Error& e) {
    throw SemanticError(field + ": " + e.what());
  }
  schema(field, "expected radius, lo/hi or A/b");
}

/// {D, c} rows, or {lo, hi} for h(x) = min(x − lo, hi − x) over the listed
/// coordinates (null entries skip a bound).
LinearPredicate predicate_of(const json& j, int n, const std::string& field) {
  LinearPredicate h;
  if (j.is_object() && j.contains("D")) {
    h.D = matrix_of(j.at("D"), field + ".D");
    h.c = vector_of(require(j, "c", field + "."), field + ".c");
  } else if (j.is_object() && (j.contains("lo") || j.contains("hi"))) {
    std::vector<std::pair<VectorXd, double>> rows;
    auto side = [&](const char* key, double sign) {
      if (!j.contains(key)) return;
      const json& arr = j.at(key);
      if (!arr.is_array() || static_cast<int>(arr.size()) != n) schema(field + "." + key, "expected " + std::to_string(n) + " entries");
      for (int i = 0; i < n; ++i) {
        if (arr[static_cast<std::size_t>(i)].is_null()) continue;
        VectorXd d = VectorXd::Zero(n);
        d[i] = sign;
        rows.emplace_back(d, -sign * number(arr[static_cast<std::size_t>(i)], field + "." + key));
      }
    };
    side("lo", 1.0);
    side("hi", -1.0);
    if (rows.empty()) schema(field, "box predicate without bounds");
    h.D.resize(static_cast<Eigen::Index>(rows.size()), n);
    h.c.resize(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
      h.D.row(static_cast<Eigen::Index>(i)) = rows[i].first.transpose();
      h.c[static_cast<Eigen::Index>(i)] = rows[i].second;
    }
  } else {
    schema(field, "expected {D, c} or {lo, hi}");
  }
  if (h.D.rows() != h.c.size()) schema(field, "D and c have different row counts");
  if (h.D.cols() != n) throw SemanticError(field + ": predicate dimension " + std::to_string(h.D.cols()) + " differs from n = " + std::to_string(n));
  return h;
}

}  // namespace

double Scenario::horizon() const { return stlrrt::horizon(formula); }

Scenario parse_scenario(const std::string& json_text, const std::string& origin) {
  json doc;
  try {
    doc = json::parse(json_text, nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw SchemaError(origin + ": invalid JSON: " + e.what());
  }
  if (!doc.is_object()) schema("<root>", "expected an object");

  Scenario sc;
  sc.name = doc.value("name", origin);

  // Dynamics: a builtin model or explicit matrices.
  if (doc.contains("builtin")) {
    const json& b = doc.at("builtin");
    const std::string name = require(b, "name", "builtin.").get<std::string>();
    const json args = b.value("args", json::object());
    if (name == "drift_integrator") {
      sc.dynamics = build_drift_integrator();
    } else if (name == "clohessy_wiltshire") {
      try {
        sc.dynamics = build_clohessy_wiltshire(args.contains("n") ? number(args.at("n"), "builtin.args.n") : 1.13e-3);
      } catch (const InvalidArgument& e) {
        throw SemanticError(std::string("builtin.args.n: ") + e.what());
      }
    } else {
      schema("builtin.name", "unknown builtin '" + name + "'");
    }
  } else if (doc.contains("dynamics")) {
    const json& d = doc.at("dynamics");
    sc.dynamics.A = matrix_of(require(d, "A", "dynamics."), "dynamics.A");
    sc.dynamics.B = matrix_of(require(d, "B", "dynamics."), "dynamics.B");
    sc.dynamics.p = d.contains("p") ? vector_of(d.at("p"), "dynamics.p") : VectorXd::Zero(sc.dynamics.A.rows());
  } else {
    schema("dynamics", "missing required field (or builtin)");
  }
  if (doc.contains("state_set")) sc.dynamics.state_set = polytope_of(doc.at("state_set"), "state_set");
  else if (!doc.contains("builtin")) schema("state_set", "missing required field");
  if (doc.contains("input_set")) sc.dynamics.input_set = polytope_of(doc.at("input_set"), "input_set");
  else if (!doc.contains("builtin")) schema("input_set", "missing required field");
  try {
    sc.dynamics.validate();
  } catch (const Error& e) {
    throw SemanticError(std::string("dynamics: ") + e.what());
  }
  const int n = sc.dynamics.n();
  const int m = sc.dynamics.m();

  const json& preds = require(doc, "predicates", "");
  if (!preds.is_object() || preds.empty()) schema("predicates", "expected a nonempty object");
  std::vector<std::string> names;
  for (const auto& [key, val] : preds.items()) {
    sc.predicates.emplace(key, predicate_of(val, n, "predicates." + key));
    names.push_back(key);
  }

  if (doc.contains("obstacles")) {
    const json& obs = doc.at("obstacles");
    if (!obs.is_array()) schema("obstacles", "expected an array");
    for (std::size_t i = 0; i < obs.size(); ++i) {
      Polytope O = polytope_of(obs[i], "obstacles[" + std::to_string(i) + "]");
      if (O.dim() != n) throw SemanticError("obstacles[" + std::to_string(i) + "]: dimension differs from n");
      sc.obstacles.push_back(std::move(O));
    }
  }

  const json& f = require(doc, "formula", "");
  if (!f.is_string()) schema("formula", "expected a string");
  sc.formula_text = f.get<std::string>();
  try {
    sc.formula = parse(sc.formula_text, names, ParseMode::Fragment);
  } catch (const Error& e) {
    throw SemanticError(std::string("formula: ") + e.what());
  }

  sc.x0 = vector_of(require(doc, "x0", ""), "x0");
  if (sc.x0.size() != n) throw SemanticError("x0: dimension " + std::to_string(sc.x0.size()) + " differs from n = " + std::to_string(n));
  if (!contains(sc.dynamics.state_set, sc.x0, 0.0)) throw SemanticError("x0: lies outside the state set");
  for (const auto& O : sc.obstacles)
    if ((O.A() * sc.x0 - O.b()).maxCoeff() <= 0.0) throw SemanticError("x0: lies inside an obstacle");

  sc.kappa_gain = doc.contains("kappa_gain") ? number(doc.at("kappa_gain"), "kappa_gain") : 1.0;
  sc.r_min = doc.contains("r_min") ? number(doc.at("r_min"), "r_min") : 1e-3;
  if (!(sc.kappa_gain > 0.0)) throw SemanticError("kappa_gain: must be positive");
  if (!(sc.r_min > 0.0)) throw SemanticError("r_min: must be positive");
  if (doc.contains("seed")) {
    if (!doc.at("seed").is_number_unsigned()) schema("seed", "expected a nonnegative integer");
    sc.seed = doc.at("seed").get<std::uint64_t>();
  }

  const json pl = doc.value("planner", json::object());
  if (!pl.is_object()) schema("planner", "expected an object");
  PlannerParams& pp = sc.planner;
  pp.Q = pl.contains("Q") ? weight_of(pl.at("Q"), n, "planner.Q") : MatrixXd::Identity(n, n);
  pp.R = pl.contains("R") ? weight_of(pl.at("R"), m, "planner.R") : MatrixXd::Identity(m, m);
  auto num = [&](const char* key, double def) { return pl.contains(key) ? number(pl.at(key), std::string("planner.") + key) : def; };
  pp.delta_max = num("delta_max", pp.delta_max);
  pp.eps_rewire = num("eps_rewire", pp.eps_rewire);
  pp.dt = num("dt", pp.dt);
  pp.n_max = static_cast<int>(num("n_max", pp.n_max));
  pp.collision_resolution = num("collision_resolution", pp.dt / 4.0);
  pp.goal_bias = num("goal_bias", pp.goal_bias);
  pp.rewire_cap = static_cast<int>(num("rewire_cap", pp.rewire_cap));
  pp.time_scale = num("time_scale", pp.time_scale);
  pp.seed = sc.seed;
  try {
    pp.validate(n, m);
  } catch (const Error& e) {
    throw SemanticError(std::string("planner: ") + e.what());
  }
  sc.simulate_dt = doc.contains("simulate_dt") ? number(doc.at("simulate_dt"), "simulate_dt") : 0.01;
  sc.monitor_dt = doc.contains("monitor_dt") ? number(doc.at("monitor_dt"), "monitor_dt") : pp.dt / 2.0;
  if (!(sc.simulate_dt > 0.0) || !(sc.monitor_dt > 0.0)) throw SemanticError("simulate_dt and monitor_dt must be positive");

  json echo = doc;
  echo["kappa_gain"] = sc.kappa_gain;
  echo["r_min"] = sc.r_min;
  echo["seed"] = sc.seed;
  echo["simulate_dt"] = sc.simulate_dt;
  echo["monitor_dt"] = sc.monitor_dt;
  json& ep = echo["planner"];
  ep["delta_max"] = pp.delta_max;
  ep["eps_rewire"] = pp.eps_rewire;
  ep["dt"] = pp.dt;
  ep["n_max"] = pp.n_max;
  ep["collision_resolution"] = pp.collision_resolution;
  ep["goal_bias"] = pp.goal_bias;
  ep["rewire_cap"] = pp.rewire_cap;
  ep["time_scale"] = pp.time_scale;
  sc.resolved = echo.dump();
  return sc;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError(path + ": cannot open scenario file");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str(), path);
}

Encoding encode_scenario(const Scenario& sc, bool parallel) {
  Encoding enc;
  enc.conjunctions = to_conjunctions(sc.formula);
  const double t_hr = sc.horizon();
  for (const auto& tasks : enc.conjunctions)
    enc.disjuncts.push_back(make_conjunction(tasks, sc.predicates, sc.dynamics.state_set, t_hr));
  const ClassKGain kappa{sc.kappa_gain};
  enc.result = parallel ? encode_disjunction(enc.disjuncts, sc.dynamics, sc.x0, kappa, sc.r_min, default_lp_solver())
                        : encode_disjunction_serial(enc.disjuncts, sc.dynamics, sc.x0, kappa, sc.r_min,
                                                    default_lp_solver());
  return enc;
}

PlanResult plan_scenario(const Scenario& sc, const Encoding& enc, std::optional<std::uint64_t> seed,
                         std::optional<int> iterations) {
  PlannerParams params = sc.planner;
  if (seed) params.seed = *seed;
  if (iterations) params.n_max = *iterations;
  return plan(enc.barrier(), sc.dynamics, sc.x0, sc.horizon(), sc.obstacles, params, default_planner_solver());
}

Rollout simulate_scenario(const Scenario& sc, const Encoding& enc, const VectorXd& x0, double dt) {
  return rollout(enc.barrier(), sc.dynamics, ClassKGain{sc.kappa_gain}, x0, dt, std::max(sc.horizon(), enc.barrier().beta_phi()));
}

double monitor_scenario(const Scenario& sc, const SampledSignal& sig) {
  return robustness(sc.formula, sc.predicates, sig, 0.0, sc.monitor_dt);
}

std::string encoding_json(const Scenario& sc, const Encoding& enc) {
  json out;
  out["scenario"] = sc.name;
  out["formula"] = to_string(sc.formula);
  out["selected"] = enc.result.selected;
  out["r_star"] = enc.robustness();
  json ds = json::array();
  for (std::size_t i = 0; i < enc.result.results.size(); ++i) {
    const EncodingResult& r = enc.result.results[i];
    json d;
    d["status"] = to_string(r.status);
    d["solve_seconds"] = r.solve_seconds;
    if (r.infeasible_block) d["infeasible_block"] = to_string(*r.infeasible_block);
    json tasks = json::array();
    const auto& tbs = enc.disjuncts[i].tasks();
    for (std::size_t l = 0; l < tbs.size(); ++l) {
      json t;
      t["task"] = to_string(tbs[l].task);
      t["alpha"] = tbs[l].alpha;
      t["beta"] = tbs[l].beta;
      if (r.optimal()) {
        const Theta& th = *r.barrier->tasks()[l].theta;
        t["gamma_bar"] = th.gamma_bar;
        t["r"] = th.r;
      }
      tasks.push_back(t);
    }
    d["tasks"] = tasks;
    if (r.optimal()) {
      d["robustness"] = r.robustness();
      d["r"] = r.r;
    }
    ds.push_back(d);
  }
  out["disjuncts"] = ds;
  return out.dump(2);
}

std::string stats_json(const Scenario& sc, const PlanResult& res, double rho, double r_star) {
  const PlanStats& s = res.stats;
  json r;
  r["scenario"] = sc.name;
  r["seed"] = s.seed;
  r["iterations"] = s.iterations;
  r["nodes"] = s.nodes;
  r["first_iteration"] = s.first_iteration;
  r["first_cost"] = s.first_cost;
  r["best_iteration"] = s.best_iteration;
  r["best_cost"] = s.best_cost;
  r["rejections"] = {{"zero_duration", s.zero_duration},
                     {"steer_infeasible", s.steer_infeasible},
                     {"collision", s.collision_rejections},
                     {"membership", s.membership_rejections}};
  r["bridges"] = {{"attempted", s.bridge_attempts},
                  {"pruned", s.bridge_pruned},
                  {"infeasible", s.bridge_infeasible},
                  {"rewires", s.rewires}};
  r["audits"] = s.audits;
  r["max_audit_error"] = s.max_audit_error;
  json hist = json::array();
  for (const auto& [it, c] : s.best_cost_history) hist.push_back({it, c});
  r["best_cost_history"] = hist;
  r["robustness"] = rho;
  r["r_star"] = r_star;
  r["trajectory_knots"] = res.trajectory.size();
  json out;
  out["result"] = r;
  out["wall_time"] = {{"first_seconds", s.first_wall_seconds},
                      {"best_seconds", s.best_wall_seconds},
                      {"total_seconds", s.total_wall_seconds}};
  return out.dump(2);
}

void write_barrier_frames(const ConjunctionBarrier& cb, int frames, const std::string& path) {
  if (frames < 1) throw InvalidArgument("frames must be positive");
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw InvalidArgument("cannot open '" + path + "' for writing");
  const int n = cb.dim();
  const double end = cb.beta_phi();
  if (n == 2) std::fputs("frame,t,vertex,x1,x2\n", f);
  else std::fputs("frame,t,dim,lo,hi\n", f);
  for (int k = 0; k <= frames; ++k) {
    const double t = frames == 0 ? 0.0 : end * k / frames;
    const Polytope S = cb.closure_at(t);
    if (n == 2) {
      VertexSet V = enumerate_vertices(S);
      if (V.size() == 0) continue;
      VectorXd c = VectorXd::Zero(2);
      for (const auto& v : V.vertices) c += v;
      c /= static_cast<double>(V.size());
      std::sort(V.vertices.begin(), V.vertices.end(), [&](const VectorXd& a, const VectorXd& b) {
        return std::atan2(a[1] - c[1], a[0] - c[0]) < std::atan2(b[1] - c[1], b[0] - c[0]);
      });
      for (std::size_t i = 0; i < V.size(); ++i)
        std::fprintf(f, "%d,%.17g,%zu,%.17g,%.17g\n", k, t, i, V.vertices[i][0], V.vertices[i][1]);
    } else {
      const auto [lo, hi] = bounding_box(S, default_lp_solver());
      for (int i = 0; i < n; ++i) std::fprintf(f, "%d,%.17g,%d,%.17g,%.17g\n", k, t, i, lo[i], hi[i]);
    }
  }
  std::fclose(f);
}

}  // namespace stlrrt
