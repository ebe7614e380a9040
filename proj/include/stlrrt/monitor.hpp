#pragma once

#include "stlrrt/formula.hpp"
#include "stlrrt/geometry.hpp"
#include "stlrrt/trajectory.hpp"

#include <map>
#include <string>

namespace stlrrt {

using PredicateMap = std::map<std::string, LinearPredicate>;

/**
 * Quantitative semantics over a piecewise-linear signal. A temporal window
 * t ⊕ [a, b] is evaluated on its endpoints, the signal knots strictly inside
 * and the lattice {k·dense_dt} strictly inside.
 *
 * F/G directly over a predicate use range-extremum tables over the merged
 * knot/lattice points; compound windows are reduced in parallel. Both
 * produce exactly the value of robustness_reference.
 */
double robustness(const Formula& f, const PredicateMap& predicates, const SampledSignal& sig, double t0,
                  double dense_dt);

/// Plain recursive evaluation, serial and table-free.
double robustness_reference(const Formula& f, const PredicateMap& predicates, const SampledSignal& sig, double t0,
                            double dense_dt);

/// ρ(sig, 0) ≥ r.
bool satisfies_with_degree(const Formula& f, const PredicateMap& predicates, const SampledSignal& sig, double r,
                           double dense_dt);

}  // namespace stlrrt
