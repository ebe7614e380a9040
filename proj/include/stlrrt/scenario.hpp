#pragma once

#include "stlrrt/dynamics.hpp"
#include "stlrrt/encoder.hpp"
#include "stlrrt/formula.hpp"
#include "stlrrt/invariance.hpp"
#include "stlrrt/monitor.hpp"
#include "stlrrt/planner.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace stlrrt {

struct Scenario {
  std::string name;
  Dynamics dynamics;
  PredicateMap predicates;
  std::vector<Polytope> obstacles;
  std::string formula_text;
  Formula formula;
  Eigen::VectorXd x0;
  double kappa_gain = 1.0;
  double r_min = 1e-3;
  PlannerParams planner;
  std::uint64_t seed = 0;
  double simulate_dt = 0.01;
  double monitor_dt = 0.0;  ///< planner dt / 2 when unset
  /// Input with every default filled in, as compact JSON.
  std::string resolved;

  double horizon() const;
};

/// Reads and validates a scenario file (JSON, comments allowed).
/// Throws SchemaError for malformed or missing fields and SemanticError for
/// inconsistent content such as x0 outside the state set.
Scenario load_scenario(const std::string& path);
Scenario parse_scenario(const std::string& json_text, const std::string& origin = "<string>");

struct Encoding {
  std::vector<std::vector<AtomicTask>> conjunctions;
  std::vector<ConjunctionBarrier> disjuncts;
  DisjunctionResult result;

  const EncodingResult& selected() const { return result.results.at(static_cast<std::size_t>(result.selected)); }
  const ConjunctionBarrier& barrier() const { return *selected().barrier; }
  double robustness() const { return selected().robustness(); }
};

Encoding encode_scenario(const Scenario& sc, bool parallel = true);

PlanResult plan_scenario(const Scenario& sc, const Encoding& enc, std::optional<std::uint64_t> seed = std::nullopt,
                         std::optional<int> iterations = std::nullopt);

Rollout simulate_scenario(const Scenario& sc, const Encoding& enc, const Eigen::VectorXd& x0, double dt);

/// Monitor robustness of the scenario formula at t = 0.
double monitor_scenario(const Scenario& sc, const SampledSignal& sig);

std::string encoding_json(const Scenario& sc, const Encoding& enc);
/// Deterministic fields under "result", wall-clock fields under "wall_time".
std::string stats_json(const Scenario& sc, const PlanResult& res, double rho, double r_star);

/// Barrier set per frame: polygon vertices in the plane, bounding boxes otherwise.
void write_barrier_frames(const ConjunctionBarrier& cb, int frames, const std::string& path);

}  // namespace stlrrt
