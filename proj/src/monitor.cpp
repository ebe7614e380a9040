#include "stlrrt/monitor.hpp"

#include "stlrrt/error.hpp"

#include <omp.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <memory>

namespace stlrrt {

namespace {

constexpr double kInfinity = std::numeric_limits<double>::infinity();

const LinearPredicate& lookup(const PredicateMap& predicates, const std::string& name) {
  const auto it = predicates.find(name);
  if (it == predicates.end()) throw InvalidArgument("unknown predicate '" + name + "'");
  return it->second;
}

void check_coverage(const Formula& f, const SampledSignal& sig, double t0, double dense_dt) {
  if (!(dense_dt > 0.0)) throw InvalidArgument("dense_dt must be positive");
  if (sig.size() < 2) throw CoverageError("signal needs at least two knots");
  const double need = t0 + horizon(f);
  if (t0 < sig.front_time() || need > sig.back_time() + 1e-9 * std::max(1.0, need))
    throw CoverageError("signal covers [" + std::to_string(sig.front_time()) + ", " + std::to_string(sig.back_time()) +
                        "] but [" + std::to_string(t0) + ", " + std::to_string(need) + "] is required");
}

/// Lattice points k·dd with lo < k·dd < hi.
template <typename Fn>
void for_lattice(double lo, double hi, double dd, Fn&& fn) {
  for (auto k = static_cast<long long>(std::floor(lo / dd)); ; ++k) {
    const double p = static_cast<double>(k) * dd;
    if (p >= hi) break;
    if (p > lo) fn(p);
  }
}

/// Endpoints, inner knots and inner lattice points of [lo, hi].
std::vector<double> window_points(const SampledSignal& sig, double lo, double hi, double dd) {
  std::vector<double> pts{lo};
  if (hi == lo) return pts;
  pts.push_back(hi);
  for_lattice(lo, hi, dd, [&](double p) { pts.push_back(p); });
  const auto& T = sig.times();
  for (auto it = std::upper_bound(T.begin(), T.end(), lo); it != T.end() && *it < hi; ++it) pts.push_back(*it);
  return pts;
}

class ReferenceEvaluator {
 public:
  ReferenceEvaluator(const PredicateMap& preds, const SampledSignal& sig, double dd)
      : preds_(preds), sig_(sig), dd_(dd) {}

  double eval(const Formula& f, double t) const {
    switch (f.kind) {
      case NodeKind::Predicate:
        return predicate_value(lookup(preds_, f.predicate), sig_.at(t));
      case NodeKind::Not:
        return -eval(f.children[0], t);
      case NodeKind::And: {
        double v = kInfinity;
        for (const auto& c : f.children) v = std::min(v, eval(c, t));
        return v;
      }
      case NodeKind::Or: {
        double v = -kInfinity;
        for (const auto& c : f.children) v = std::max(v, eval(c, t));
        return v;
      }
      case NodeKind::Always: {
        double v = kInfinity;
        for (double p : window_points(sig_, t + f.interval.a, t + f.interval.b, dd_))
          v = std::min(v, eval(f.children[0], p));
        return v;
      }
      case NodeKind::Eventually: {
        double v = -kInfinity;
        for (double p : window_points(sig_, t + f.interval.a, t + f.interval.b, dd_))
          v = std::max(v, eval(f.children[0], p));
        return v;
      }
      case NodeKind::Until: {
        double v = -kInfinity;
        for (double tau : window_points(sig_, t + f.interval.a, t + f.interval.b, dd_)) {
          double hold = eval(f.children[1], tau);
          for (double p : window_points(sig_, t, tau, dd_)) hold = std::min(hold, eval(f.children[0], p));
          v = std::max(v, hold);
        }
        return v;
      }
    }
    return 0.0;
  }

 private:
  const PredicateMap& preds_;
  const SampledSignal& sig_;
  double dd_;
};

/// Range min/max over a fixed array: exact per-block extrema with a sparse
/// table over blocks, linear scans inside partial blocks.
class RangeExtrema {
 public:
  explicit RangeExtrema(std::vector<double> v) : v_(std::move(v)) {
    const std::size_t nb = (v_.size() + kBlock - 1) / kBlock;
    std::vector<double> bmin(nb, kInfinity), bmax(nb, -kInfinity);
    for (std::size_t i = 0; i < v_.size(); ++i) {
      bmin[i / kBlock] = std::min(bmin[i / kBlock], v_[i]);
      bmax[i / kBlock] = std::max(bmax[i / kBlock], v_[i]);
    }
    min_.push_back(std::move(bmin));
    max_.push_back(std::move(bmax));
    for (std::size_t w = 1; 2 * w <= nb; w *= 2) {
      const auto& pm = min_.back();
      const auto& px = max_.back();
      std::vector<double> nm(nb - 2 * w + 1), nx(nb - 2 * w + 1);
      for (std::size_t i = 0; i < nm.size(); ++i) {
        nm[i] = std::min(pm[i], pm[i + w]);
        nx[i] = std::max(px[i], px[i + w]);
      }
      min_.push_back(std::move(nm));
      max_.push_back(std::move(nx));
    }
  }

  /// Extremum over indices [i, j]; identity when empty.
  double min(std::size_t i, std::size_t j) const { return query(i, j, min_, kInfinity, [](double a, double b) { return std::min(a, b); }); }
  double max(std::size_t i, std::size_t j) const { return query(i, j, max_, -kInfinity, [](double a, double b) { return std::max(a, b); }); }

 private:
  static constexpr std::size_t kBlock = 32;

  template <typename Op>
  double query(std::size_t i, std::size_t j, const std::vector<std::vector<double>>& table, double id, Op op) const {
    if (i > j || i >= v_.size()) return id;
    double v = id;
    const std::size_t bi = i / kBlock, bj = j / kBlock;
    if (bj <= bi + 1) {
      for (std::size_t k = i; k <= j; ++k) v = op(v, v_[k]);
      return v;
    }
    for (std::size_t k = i; k < (bi + 1) * kBlock; ++k) v = op(v, v_[k]);
    for (std::size_t k = bj * kBlock; k <= j; ++k) v = op(v, v_[k]);
    const std::size_t lo = bi + 1, hi = bj - 1;
    const auto level = static_cast<std::size_t>(std::bit_width(hi - lo + 1) - 1);
    const std::size_t w = std::size_t{1} << level;
    return op(v, op(table[level][lo], table[level][hi + 1 - w]));
  }

  std::vector<double> v_;
  std::vector<std::vector<double>> min_, max_;
};

class FastEvaluator {
 public:
  FastEvaluator(const Formula& root, const PredicateMap& preds, const SampledSignal& sig, double t0, double dd)
      : preds_(preds), sig_(sig), dd_(dd) {
    const double t1 = t0 + horizon(root);
    std::vector<double> lattice;
    for_lattice(t0 - dd, t1 + dd, dd, [&](double p) { lattice.push_back(p); });
    const auto& T = sig.times();
    const auto k0 = std::lower_bound(T.begin(), T.end(), t0 - dd);
    const auto k1 = std::upper_bound(k0, T.end(), t1 + dd);
    points_.resize(lattice.size() + static_cast<std::size_t>(k1 - k0));
    points_.erase(std::unique(points_.begin(), std::merge(lattice.begin(), lattice.end(), k0, k1, points_.begin())),
                  points_.end());
    prepare(root);
  }

  double eval(const Formula& f, double t) const {
    switch (f.kind) {
      case NodeKind::Predicate:
        return predicate_value(lookup(preds_, f.predicate), sig_.at(t));
      case NodeKind::Not:
        return -eval(f.children[0], t);
      case NodeKind::And: {
        double v = kInfinity;
        for (const auto& c : f.children) v = std::min(v, eval(c, t));
        return v;
      }
      case NodeKind::Or: {
        double v = -kInfinity;
        for (const auto& c : f.children) v = std::max(v, eval(c, t));
        return v;
      }
      case NodeKind::Always:
      case NodeKind::Eventually:
        return window(f, t);
      case NodeKind::Until: {
        double v = -kInfinity;
        for (double tau : window_points(sig_, t + f.interval.a, t + f.interval.b, dd_)) {
          double hold = eval(f.children[1], tau);
          for (double p : window_points(sig_, t, tau, dd_)) hold = std::min(hold, eval(f.children[0], p));
          v = std::max(v, hold);
        }
        return v;
      }
    }
    return 0.0;
  }

 private:
  void prepare(const Formula& f) {
    if ((f.kind == NodeKind::Always || f.kind == NodeKind::Eventually) &&
        f.children[0].kind == NodeKind::Predicate && !tables_.count(f.children[0].predicate)) {
      const LinearPredicate& h = lookup(preds_, f.children[0].predicate);
      std::vector<double> v(points_.size());
#pragma omp parallel
      {
        const auto nt = static_cast<std::size_t>(omp_get_num_threads());
        const auto id = static_cast<std::size_t>(omp_get_thread_num());
        const std::size_t lo = points_.size() * id / nt, hi = points_.size() * (id + 1) / nt;
        sample_sorted(h, lo, hi, v);
      }
      tables_.emplace(f.children[0].predicate, std::make_unique<RangeExtrema>(std::move(v)));
    }
    for (const auto& c : f.children) prepare(c);
  }

  /// Predicate values on points_[lo, hi), walking the knots instead of
  /// searching for each point; matches SampledSignal::at exactly.
  void sample_sorted(const LinearPredicate& h, std::size_t lo, std::size_t hi, std::vector<double>& v) const {
    if (lo >= hi) return;
    const auto& T = sig_.times();
    const std::size_t last = T.size() - 1;
    std::size_t k = static_cast<std::size_t>(std::upper_bound(T.begin(), T.end(), points_[lo]) - T.begin());
    k = k == 0 ? 0 : k - 1;
    Eigen::VectorXd x(sig_.state(0).size());
    for (std::size_t i = lo; i < hi; ++i) {
      const double t = points_[i];
      if (t <= T.front()) {
        v[i] = predicate_value(h, sig_.state(0));
        continue;
      }
      if (t >= T.back()) {
        v[i] = predicate_value(h, sig_.state(last));
        continue;
      }
      while (k + 1 < last && T[k + 1] <= t) ++k;
      if (T[k] == t) {
        v[i] = predicate_value(h, sig_.state(k));
        continue;
      }
      const double s = (t - T[k]) / (T[k + 1] - T[k]);
      x = sig_.state(k) + s * (sig_.state(k + 1) - sig_.state(k));
      v[i] = predicate_value(h, x);
    }
  }

  double window(const Formula& f, double t) const {
    const bool is_min = f.kind == NodeKind::Always;
    const double lo = t + f.interval.a;
    const double hi = t + f.interval.b;
    const Formula& child = f.children[0];
    double v = eval(child, lo);
    if (hi == lo) return v;
    v = is_min ? std::min(v, eval(child, hi)) : std::max(v, eval(child, hi));
    const auto first = static_cast<std::size_t>(std::upper_bound(points_.begin(), points_.end(), lo) - points_.begin());
    const auto last = static_cast<std::size_t>(std::lower_bound(points_.begin(), points_.end(), hi) - points_.begin());
    if (first >= last) return v;

    if (child.kind == NodeKind::Predicate) {
      const RangeExtrema& tab = *tables_.at(child.predicate);
      return is_min ? std::min(v, tab.min(first, last - 1)) : std::max(v, tab.max(first, last - 1));
    }
    const auto count = static_cast<std::ptrdiff_t>(last - first);
    const bool parallel = count >= 256 && !omp_in_parallel();
    if (is_min) {
      double r = v;
#pragma omp parallel for reduction(min : r) if (parallel) schedule(static)
      for (std::ptrdiff_t i = 0; i < count; ++i) r = std::min(r, eval(child, points_[first + static_cast<std::size_t>(i)]));
      return r;
    }
    double r = v;
#pragma omp parallel for reduction(max : r) if (parallel) schedule(static)
    for (std::ptrdiff_t i = 0; i < count; ++i) r = std::max(r, eval(child, points_[first + static_cast<std::size_t>(i)]));
    return r;
  }

  const PredicateMap& preds_;
  const SampledSignal& sig_;
  double dd_;
  std::vector<double> points_;
  std::map<std::string, std::unique_ptr<RangeExtrema>> tables_;
};

}  // namespace

double robustness(const Formula& f, const PredicateMap& predicates, const SampledSignal& sig, double t0,
                  double dense_dt) {
  check_coverage(f, sig, t0, dense_dt);
  const FastEvaluator ev(f, predicates, sig, t0, dense_dt);
  return ev.eval(f, t0);
}

double robustness_reference(const Formula& f, const PredicateMap& predicates, const SampledSignal& sig, double t0,
                            double dense_dt) {
  check_coverage(f, sig, t0, dense_dt);
  return ReferenceEvaluator(predicates, sig, dense_dt).eval(f, t0);
}

bool satisfies_with_degree(const Formula& f, const PredicateMap& predicates, const SampledSignal& sig, double r,
                           double dense_dt) {
  return robustness(f, predicates, sig, 0.0, dense_dt) >= r;
}

}  // namespace stlrrt
