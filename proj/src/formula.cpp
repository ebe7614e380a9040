#include "stlrrt/formula.hpp"

#include "stlrrt/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <set>

namespace stlrrt {

Formula Formula::pred(std::string name) {
  Formula f;
  f.kind = NodeKind::Predicate;
  f.predicate = std::move(name);
  return f;
}

Formula Formula::negate(Formula child) {
  Formula f;
  f.kind = NodeKind::Not;
  f.children.push_back(std::move(child));
  return f;
}

Formula Formula::always(Interval i, Formula child) {
  Formula f;
  f.kind = NodeKind::Always;
  f.interval = i;
  f.children.push_back(std::move(child));
  return f;
}

Formula Formula::eventually(Interval i, Formula child) {
  Formula f;
  f.kind = NodeKind::Eventually;
  f.interval = i;
  f.children.push_back(std::move(child));
  return f;
}

Formula Formula::until(Interval i, Formula lhs, Formula rhs) {
  Formula f;
  f.kind = NodeKind::Until;
  f.interval = i;
  f.children.push_back(std::move(lhs));
  f.children.push_back(std::move(rhs));
  return f;
}

Formula Formula::conj(std::vector<Formula> children) {
  if (children.size() == 1) return std::move(children.front());
  Formula f;
  f.kind = NodeKind::And;
  for (auto& c : children) {
    if (c.kind == NodeKind::And) {
      for (auto& g : c.children) f.children.push_back(std::move(g));
    } else {
      f.children.push_back(std::move(c));
    }
  }
  return f;
}

Formula Formula::disj(std::vector<Formula> children) {
  if (children.size() == 1) return std::move(children.front());
  Formula f;
  f.kind = NodeKind::Or;
  for (auto& c : children) {
    if (c.kind == NodeKind::Or) {
      for (auto& g : c.children) f.children.push_back(std::move(g));
    } else {
      f.children.push_back(std::move(c));
    }
  }
  return f;
}

// ---------------------------------------------------------------------------
// Parser

namespace {

bool is_ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool is_ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

class Parser {
 public:
  Parser(const std::string& text, const std::vector<std::string>& names, ParseMode mode)
      : text_(text), names_(names.begin(), names.end()), mode_(mode) {}

  Formula run() {
    Formula f = parse_or(0);
    skip_ws();
    if (pos_ != text_.size()) fail("'&', '|' or end of input");
    return f;
  }

 private:
  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  char peek() {
    skip_ws();
    return pos_ < text_.size() ? text_[pos_] : '\0';
  }

  // Next non-space character after the current one.
  char peek_after_keyword() {
    std::size_t p = pos_ + 1;
    while (p < text_.size() && std::isspace(static_cast<unsigned char>(text_[p]))) ++p;
    return p < text_.size() ? text_[p] : '\0';
  }

  std::string found() {
    skip_ws();
    if (pos_ >= text_.size()) return "end of input";
    return "'" + std::string(1, text_[pos_]) + "'";
  }

  [[noreturn]] void fail(const std::string& expected) { throw SyntaxError(pos_, expected, found()); }

  [[noreturn]] void violation(const std::string& construct, std::size_t begin, std::size_t end) {
    throw FragmentViolation(construct + " is outside the planning fragment (source span [" +
                            std::to_string(begin) + ", " + std::to_string(end) + "): '" +
                            text_.substr(begin, end - begin) + "')");
  }

  void expect(char c) {
    if (peek() != c) fail(std::string("'") + c + "'");
    ++pos_;
  }

  bool at_operator(char op) { return peek() == op && peek_after_keyword() == '['; }
  bool at_temporal() { return at_operator('F') || at_operator('G'); }

  double number() {
    skip_ws();
    const std::size_t start = pos_;
    while (pos_ < text_.size() &&
           (std::isdigit(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '.' || text_[pos_] == 'e' ||
            text_[pos_] == 'E' ||
            ((text_[pos_] == '+' || text_[pos_] == '-') && pos_ > start &&
             (text_[pos_ - 1] == 'e' || text_[pos_ - 1] == 'E'))))
      ++pos_;
    if (start == pos_) fail("number");
    double v = 0.0;
    const auto res = std::from_chars(text_.data() + start, text_.data() + pos_, v);
    if (res.ec != std::errc() || res.ptr != text_.data() + pos_) {
      pos_ = start;
      fail("number");
    }
    return v;
  }

  Interval interval() {
    const std::size_t begin = pos_;
    expect('[');
    Interval iv;
    iv.a = number();
    expect(',');
    iv.b = number();
    expect(']');
    if (!(iv.a >= 0.0 && iv.a <= iv.b && std::isfinite(iv.b)))
      throw FragmentViolation("interval must satisfy 0 <= a <= b < inf (source span [" + std::to_string(begin) +
                              ", " + std::to_string(pos_) + "))");
    return iv;
  }

  std::string identifier() {
    skip_ws();
    const std::size_t start = pos_;
    if (pos_ >= text_.size() || !is_ident_start(text_[pos_])) fail("predicate name, 'F[', 'G[' or '('");
    while (pos_ < text_.size() && is_ident_char(text_[pos_])) ++pos_;
    std::string name = text_.substr(start, pos_ - start);
    if (!names_.empty() && !names_.count(name)) {
      pos_ = start;
      throw SyntaxError(start, "declared predicate name", "undeclared predicate '" + name + "'");
    }
    return name;
  }

  Formula parse_or(int depth) {
    std::vector<Formula> parts;
    parts.push_back(parse_and(depth));
    while (peek() == '|') {
      ++pos_;
      parts.push_back(parse_and(depth));
    }
    return Formula::disj(std::move(parts));
  }

  Formula parse_and(int depth) {
    std::vector<Formula> parts;
    parts.push_back(parse_until(depth));
    while (peek() == '&') {
      ++pos_;
      parts.push_back(parse_until(depth));
    }
    return Formula::conj(std::move(parts));
  }

  Formula parse_until(int depth) {
    const std::size_t begin = (skip_ws(), pos_);
    Formula lhs = parse_unary(depth);
    if (at_operator('U')) {
      ++pos_;
      if (mode_ == ParseMode::Fragment) violation("until", begin, pos_);
      const Interval iv = interval();
      Formula rhs = parse_unary(depth);
      return Formula::until(iv, std::move(lhs), std::move(rhs));
    }
    return lhs;
  }

  Formula parse_unary(int depth) {
    const char c = peek();
    const std::size_t begin = pos_;
    if (c == '!') {
      ++pos_;
      if (mode_ == ParseMode::Fragment) violation("negation", begin, pos_);
      return Formula::negate(parse_unary(depth));
    }
    if (c == '(') {
      ++pos_;
      Formula inner = parse_or(depth + 1);
      expect(')');
      return inner;
    }
    if (at_temporal()) {
      const char op = c;
      ++pos_;
      const Interval iv = interval();
      Formula child;
      if (mode_ == ParseMode::Fragment) {
        // Temporal operators apply to an operator chain ending in a predicate.
        if (at_temporal()) {
          child = parse_unary(depth);
        } else if (peek() == '(' || peek() == '!') {
          violation("compound formula under a temporal operator", begin, pos_ + 1);
        } else {
          child = Formula::pred(identifier());
        }
      } else {
        child = parse_unary(depth);
      }
      return op == 'F' ? Formula::eventually(iv, std::move(child)) : Formula::always(iv, std::move(child));
    }
    return Formula::pred(identifier());
  }

  const std::string& text_;
  std::set<std::string> names_;
  ParseMode mode_;
  std::size_t pos_ = 0;
};

bool is_temporal(NodeKind k) { return k == NodeKind::Always || k == NodeKind::Eventually; }

// Length of the chain of distinct temporal operators above a predicate, or -1
// if the subtree is not such a chain.
int temporal_chain_depth(const Formula& f) {
  if (f.kind == NodeKind::Predicate) return 0;
  if (!is_temporal(f.kind)) return -1;
  const int d = temporal_chain_depth(f.children[0]);
  return d < 0 ? -1 : d + 1;
}

std::string format_number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string interval_text(const Interval& i) { return "[" + format_number(i.a) + "," + format_number(i.b) + "]"; }

}  // namespace

Formula parse(const std::string& text, const std::vector<std::string>& predicate_names, ParseMode mode) {
  Parser p(text, predicate_names, mode);
  Formula f = p.run();
  if (mode == ParseMode::Fragment) validate_fragment(f);
  return f;
}

void validate_fragment(const Formula& f) {
  const Formula c = collapse_same_operator(f);
  auto check_conjunct = [](const Formula& t) {
    const int d = temporal_chain_depth(t);
    if (d < 0) {
      if (t.kind == NodeKind::Not) throw FragmentViolation("negation is outside the planning fragment: " + to_string(t));
      if (t.kind == NodeKind::Until) throw FragmentViolation("until is outside the planning fragment: " + to_string(t));
      if (t.kind == NodeKind::Or) throw FragmentViolation("disjunction nested under a conjunction: " + to_string(t));
      throw FragmentViolation("compound formula under a temporal operator: " + to_string(t));
    }
    if (d > 2) throw FragmentViolation("more than two nested distinct temporal operators: " + to_string(t));
  };
  auto check_and = [&](const Formula& g) {
    if (g.kind == NodeKind::And) {
      for (const auto& t : g.children) check_conjunct(t);
    } else {
      check_conjunct(g);
    }
  };
  if (c.kind == NodeKind::Or) {
    for (const auto& g : c.children) check_and(g);
  } else {
    check_and(c);
  }
}

std::string to_string(const Formula& f) {
  auto wrapped = [](const Formula& c) {
    const bool simple = c.kind == NodeKind::Predicate || c.kind == NodeKind::Not || is_temporal(c.kind);
    return simple ? to_string(c) : "(" + to_string(c) + ")";
  };
  switch (f.kind) {
    case NodeKind::Predicate: return f.predicate;
    case NodeKind::Not: return "!" + wrapped(f.children[0]);
    case NodeKind::Always: return "G" + interval_text(f.interval) + " " + wrapped(f.children[0]);
    case NodeKind::Eventually: return "F" + interval_text(f.interval) + " " + wrapped(f.children[0]);
    case NodeKind::Until:
      return wrapped(f.children[0]) + " U" + interval_text(f.interval) + " " + wrapped(f.children[1]);
    case NodeKind::And: {
      std::string out;
      for (std::size_t i = 0; i < f.children.size(); ++i) {
        const auto& c = f.children[i];
        if (i) out += " & ";
        out += (c.kind == NodeKind::Or || c.kind == NodeKind::And) ? "(" + to_string(c) + ")" : to_string(c);
      }
      return out;
    }
    case NodeKind::Or: {
      std::string out;
      for (std::size_t i = 0; i < f.children.size(); ++i) {
        if (i) out += " | ";
        out += f.children[i].kind == NodeKind::Or ? "(" + to_string(f.children[i]) + ")" : to_string(f.children[i]);
      }
      return out;
    }
  }
  return {};
}

double horizon(const Formula& f) {
  switch (f.kind) {
    case NodeKind::Predicate: return 0.0;
    case NodeKind::Not: return horizon(f.children[0]);
    case NodeKind::Always:
    case NodeKind::Eventually: return horizon(f.children[0]) + f.interval.b;
    case NodeKind::Until: return std::max(horizon(f.children[0]), horizon(f.children[1])) + f.interval.b;
    case NodeKind::And:
    case NodeKind::Or: {
      double h = 0.0;
      for (const auto& c : f.children) h = std::max(h, horizon(c));
      return h;
    }
  }
  return 0.0;
}

Formula collapse_same_operator(const Formula& f) {
  Formula out = f;
  for (auto& c : out.children) c = collapse_same_operator(c);
  if (is_temporal(out.kind) && out.children[0].kind == out.kind) {
    Formula inner = std::move(out.children[0]);
    inner.interval = {out.interval.a + inner.interval.a, out.interval.b + inner.interval.b};
    return inner;
  }
  return out;
}

std::string to_string(TaskKind k) {
  switch (k) {
    case TaskKind::F: return "F";
    case TaskKind::G: return "G";
    case TaskKind::FG: return "FG";
    case TaskKind::GF: return "GF";
  }
  return "?";
}

Formula to_formula(const AtomicTask& t) {
  Formula leaf = Formula::pred(t.predicate);
  switch (t.kind) {
    case TaskKind::F: return Formula::eventually(t.outer, std::move(leaf));
    case TaskKind::G: return Formula::always(t.outer, std::move(leaf));
    case TaskKind::FG: return Formula::eventually(t.outer, Formula::always(*t.inner, std::move(leaf)));
    case TaskKind::GF: return Formula::always(t.outer, Formula::eventually(*t.inner, std::move(leaf)));
  }
  return leaf;
}

Formula to_formula(const std::vector<AtomicTask>& conjunction) {
  std::vector<Formula> parts;
  for (const auto& t : conjunction) parts.push_back(to_formula(t));
  if (parts.empty()) throw InvalidArgument("empty conjunction has no formula");
  return Formula::conj(std::move(parts));
}

std::string to_string(const AtomicTask& t) { return to_string(to_formula(t)); }

std::vector<AtomicTask> decompose_gf(const AtomicTask& task, std::optional<int> n_f) {
  if (task.kind != TaskKind::GF || !task.inner) throw InvalidArgument("decompose_gf expects a GF task");
  const Interval o = task.outer;
  const Interval i = *task.inner;
  const double width = i.b - i.a;
  if (width <= 0.0) throw InvalidArgument("GF task with zero-width inner interval has no eventuality to decompose");
  const double ratio = (o.b - o.a) / width;
  const int floor_count = std::max(1, static_cast<int>(std::ceil(ratio - 1e-9)));
  const int count = n_f.value_or(floor_count);
  if (count < floor_count)
    throw InvalidCount("n_f = " + std::to_string(count) + " is below the minimum " + std::to_string(floor_count));

  // Uniform spacing (b−a)/n_f: equals the inner width whenever it divides the
  // outer width, and always ends exactly at b + a'.
  std::vector<AtomicTask> out;
  out.reserve(static_cast<std::size_t>(count));
  const double base = o.a + i.a;
  const double step = (o.b - o.a) / count;
  for (int w = 1; w <= count; ++w) {
    const double a_w = (w == count) ? o.b + i.a : base + w * step;
    out.push_back(AtomicTask{TaskKind::F, {a_w, a_w}, std::nullopt, task.predicate});
  }
  return out;
}

std::vector<std::vector<AtomicTask>> atomic_tasks(const Formula& f) {
  validate_fragment(f);
  const Formula c = collapse_same_operator(f);
  std::vector<const Formula*> disjuncts;
  if (c.kind == NodeKind::Or) {
    for (const auto& d : c.children) disjuncts.push_back(&d);
  } else {
    disjuncts.push_back(&c);
  }
  std::vector<std::vector<AtomicTask>> out;
  for (const Formula* d : disjuncts) {
    std::vector<const Formula*> conjuncts;
    if (d->kind == NodeKind::And) {
      for (const auto& t : d->children) conjuncts.push_back(&t);
    } else {
      conjuncts.push_back(d);
    }
    std::vector<AtomicTask> tasks;
    for (const Formula* t : conjuncts) {
      AtomicTask task;
      if (t->kind == NodeKind::Predicate) {
        // A bare predicate only constrains the initial state.
        task = {TaskKind::G, {0.0, 0.0}, std::nullopt, t->predicate};
      } else {
        const Formula& inner = t->children[0];
        if (inner.kind == NodeKind::Predicate) {
          task = {t->kind == NodeKind::Eventually ? TaskKind::F : TaskKind::G, t->interval, std::nullopt,
                  inner.predicate};
        } else {
          task = {t->kind == NodeKind::Eventually ? TaskKind::FG : TaskKind::GF, t->interval, inner.interval,
                  inner.children[0].predicate};
        }
      }
      tasks.push_back(task);
    }
    out.push_back(std::move(tasks));
  }
  return out;
}

std::vector<std::vector<AtomicTask>> to_conjunctions(const Formula& f) {
  std::vector<std::vector<AtomicTask>> out;
  for (auto& tasks : atomic_tasks(f)) {
    std::vector<AtomicTask> expanded;
    for (auto& t : tasks) {
      if (t.kind == TaskKind::GF) {
        if (t.inner->b == t.inner->a) {
          expanded.push_back({TaskKind::G, {t.outer.a + t.inner->a, t.outer.b + t.inner->a}, std::nullopt, t.predicate});
        } else {
          for (auto& d : decompose_gf(t)) expanded.push_back(std::move(d));
        }
      } else {
        expanded.push_back(std::move(t));
      }
    }
    out.push_back(std::move(expanded));
  }
  return out;
}

}  // namespace stlrrt
