#pragma once

#include <optional>
#include <string>
#include <vector>

namespace stlrrt {

struct Interval {
  double a = 0.0;
  double b = 0.0;
  bool operator==(const Interval&) const = default;
};

enum class NodeKind { Predicate, Not, Always, Eventually, Until, And, Or };

/**
 * STL syntax tree. Temporal nodes carry an interval; Until has two children
 * (left holds until right). Not and Until exist for the monitor only and are
 * rejected by the planning fragment.
 */
struct Formula {
  NodeKind kind = NodeKind::Predicate;
  std::string predicate;
  Interval interval;
  std::vector<Formula> children;

  bool operator==(const Formula&) const = default;

  static Formula pred(std::string name);
  static Formula negate(Formula child);
  static Formula always(Interval i, Formula child);
  static Formula eventually(Interval i, Formula child);
  static Formula until(Interval i, Formula lhs, Formula rhs);
  static Formula conj(std::vector<Formula> children);
  static Formula disj(std::vector<Formula> children);
};

enum class ParseMode {
  Fragment,  ///< planning fragment: F/G with at most two distinct nested operators, & and top-level |
  Monitor,   ///< also accepts '!' and 'U[a,b]' for oracle formulas
};

/// Parses a formula; every identifier must appear in `predicate_names`
/// (an empty list disables the check).
Formula parse(const std::string& text, const std::vector<std::string>& predicate_names = {},
              ParseMode mode = ParseMode::Fragment);

/// Canonical text form; parse(to_string(f)) == f for parsed formulas.
std::string to_string(const Formula& f);

/// Throws FragmentViolation if `f` is outside the planning fragment.
void validate_fragment(const Formula& f);

double horizon(const Formula& f);

/// Merges adjacent identical temporal operators by interval summation.
Formula collapse_same_operator(const Formula& f);

enum class TaskKind { F, G, FG, GF };

struct AtomicTask {
  TaskKind kind = TaskKind::F;
  Interval outer;
  std::optional<Interval> inner;
  std::string predicate;

  bool operator==(const AtomicTask&) const = default;
};

std::string to_string(TaskKind k);
std::string to_string(const AtomicTask& t);
Formula to_formula(const AtomicTask& t);
Formula to_formula(const std::vector<AtomicTask>& conjunction);

/// Replaces G[a,b]F[a',b'] by a conjunction of point-time eventualities.
/// With `n_f` absent the smallest admissible count is used.
std::vector<AtomicTask> decompose_gf(const AtomicTask& task, std::optional<int> n_f = std::nullopt);

/// One atomic-task list per disjunct, GF tasks expanded.
std::vector<std::vector<AtomicTask>> to_conjunctions(const Formula& f);

/// Atomic tasks per disjunct without GF expansion.
std::vector<std::vector<AtomicTask>> atomic_tasks(const Formula& f);

}  // namespace stlrrt
