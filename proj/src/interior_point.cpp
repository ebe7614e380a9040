#include "stlrrt/solver.hpp"

#include <Eigen/OrderingMethods>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <vector>

namespace stlrrt {

std::string to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal: return "optimal";
    case SolveStatus::Infeasible: return "infeasible";
    case SolveStatus::Unbounded: return "unbounded";
    case SolveStatus::IterationLimit: return "iteration_limit";
    case SolveStatus::NumericalError: return "numerical_error";
  }
  return "unknown";
}

namespace {

using Eigen::VectorXd;
using RowMajorSparse = Eigen::SparseMatrix<double, Eigen::RowMajor, int>;

double inf_norm(const VectorXd& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

// Inequalities after folding in bounds, dropping empty rows and scaling every
// row to unit infinity norm.
struct Standardized {
  SparseMatrix G;
  VectorXd h;
  SparseMatrix A;
  VectorXd b;
  bool trivially_infeasible = false;
};

Standardized standardize(const QpProblem& qp) {
  const int n = qp.num_vars();
  Standardized out;

  std::vector<Triplet> g_trip;
  std::vector<double> g_rhs;
  RowMajorSparse G = qp.G;
  for (int i = 0; i < G.rows(); ++i) {
    double scale = 0.0;
    for (RowMajorSparse::InnerIterator it(G, i); it; ++it) scale = std::max(scale, std::abs(it.value()));
    if (scale == 0.0) {
      if (qp.h[i] < -1e-12) out.trivially_infeasible = true;
      continue;
    }
    const int row = static_cast<int>(g_rhs.size());
    for (RowMajorSparse::InnerIterator it(G, i); it; ++it) g_trip.emplace_back(row, it.col(), it.value() / scale);
    g_rhs.push_back(qp.h[i] / scale);
  }
  for (int j = 0; j < n && qp.ub.size() == n; ++j) {
    if (!std::isfinite(qp.ub[j])) continue;
    const int row = static_cast<int>(g_rhs.size());
    g_trip.emplace_back(row, j, 1.0);
    g_rhs.push_back(qp.ub[j]);
  }
  for (int j = 0; j < n && qp.lb.size() == n; ++j) {
    if (!std::isfinite(qp.lb[j])) continue;
    const int row = static_cast<int>(g_rhs.size());
    g_trip.emplace_back(row, j, -1.0);
    g_rhs.push_back(-qp.lb[j]);
  }
  out.G.resize(static_cast<int>(g_rhs.size()), n);
  out.G.setFromTriplets(g_trip.begin(), g_trip.end());
  out.h = Eigen::Map<VectorXd>(g_rhs.data(), static_cast<Eigen::Index>(g_rhs.size()));

  std::vector<Triplet> a_trip;
  std::vector<double> a_rhs;
  RowMajorSparse A = qp.A;
  for (int i = 0; i < A.rows(); ++i) {
    double scale = 0.0;
    for (RowMajorSparse::InnerIterator it(A, i); it; ++it) scale = std::max(scale, std::abs(it.value()));
    if (scale == 0.0) {
      if (std::abs(qp.b[i]) > 1e-12) out.trivially_infeasible = true;
      continue;
    }
    const int row = static_cast<int>(a_rhs.size());
    for (RowMajorSparse::InnerIterator it(A, i); it; ++it) a_trip.emplace_back(row, it.col(), it.value() / scale);
    a_rhs.push_back(qp.b[i] / scale);
  }
  out.A.resize(static_cast<int>(a_rhs.size()), n);
  out.A.setFromTriplets(a_trip.begin(), a_trip.end());
  out.b = Eigen::Map<VectorXd>(a_rhs.data(), static_cast<Eigen::Index>(a_rhs.size()));
  return out;
}

// Largest step keeping v + step·dv ≥ 0 (infinite when dv ≥ 0).
double max_step(const VectorXd& v, const VectorXd& dv) {
  double step = kInf;
  for (Eigen::Index i = 0; i < v.size(); ++i)
    if (dv[i] < 0.0) step = std::min(step, -v[i] / dv[i]);
  return step;
}

class KktSystem {
 public:
  KktSystem(const SparseMatrix& P, const SparseMatrix& A, const SparseMatrix& G, double reg)
      : P_(P), A_(A), G_(G), n_(static_cast<int>(P.rows())), p_(static_cast<int>(A.rows())),
        m_(static_cast<int>(G.rows())), reg_(reg) {
    const int N = n_ + p_ + m_;
    std::vector<Triplet> trip;
    trip.reserve(static_cast<std::size_t>(P.nonZeros() + A.nonZeros() + G.nonZeros() + N));
    for (int j = 0; j < P.outerSize(); ++j)
      for (SparseMatrix::InnerIterator it(P, j); it; ++it)
        if (it.row() > it.col()) trip.emplace_back(it.row(), it.col(), it.value());
    for (int j = 0; j < A.outerSize(); ++j)
      for (SparseMatrix::InnerIterator it(A, j); it; ++it) trip.emplace_back(n_ + it.row(), it.col(), it.value());
    for (int j = 0; j < G.outerSize(); ++j)
      for (SparseMatrix::InnerIterator it(G, j); it; ++it) trip.emplace_back(n_ + p_ + it.row(), it.col(), it.value());
    for (int i = 0; i < N; ++i) trip.emplace_back(i, i, 0.0);
    K_.resize(N, N);
    K_.setFromTriplets(trip.begin(), trip.end());
    K_.makeCompressed();
    pdiag_ = P.diagonal();
    diag_.resize(N);
    for (int i = 0; i < N; ++i) diag_[i] = &K_.coeffRef(i, i);
    ldlt_.analyzePattern(K_);
  }

  /// Factor with W = diag(w) in the inequality block.
  bool factor(const VectorXd& w) {
    w_ = w;
    for (int attempt = 0; attempt < 4; ++attempt) {
      const double r = reg_ * std::pow(100.0, attempt);
      for (int i = 0; i < n_; ++i) *diag_[i] = pdiag_[i] + r;
      for (int i = 0; i < p_; ++i) *diag_[n_ + i] = -r;
      for (int i = 0; i < m_; ++i) *diag_[n_ + p_ + i] = -w[i] - r;
      ldlt_.factorize(K_);
      if (ldlt_.info() == Eigen::Success) return true;
    }
    return false;
  }

  /// Solve the unregularized system by regularized factorization plus
  /// iterative refinement.
  VectorXd solve(const VectorXd& rhs, int refinement_steps) const {
    VectorXd sol = ldlt_.solve(rhs);
    for (int k = 0; k < refinement_steps; ++k) {
      const VectorXd res = rhs - apply(sol);
      if (inf_norm(res) <= 1e-14 * (1.0 + inf_norm(rhs))) break;
      sol += ldlt_.solve(res);
    }
    return sol;
  }

 private:
  VectorXd apply(const VectorXd& v) const {
    const auto x = v.head(n_);
    const auto y = v.segment(n_, p_);
    const auto z = v.tail(m_);
    VectorXd out(v.size());
    out.head(n_) = P_.selfadjointView<Eigen::Lower>() * x + A_.transpose() * y + G_.transpose() * z;
    out.segment(n_, p_) = A_ * x;
    out.tail(m_) = G_ * x - w_.cwiseProduct(z);
    return out;
  }

  const SparseMatrix& P_;
  const SparseMatrix& A_;
  const SparseMatrix& G_;
  int n_, p_, m_;
  double reg_;
  SparseMatrix K_;
  VectorXd pdiag_;
  VectorXd w_;
  std::vector<double*> diag_;
  Eigen::SimplicialLDLT<SparseMatrix, Eigen::Lower, Eigen::AMDOrdering<int>> ldlt_;
};

// min t  s.t.  Gx − t ≤ h,  Ax = b,  bounds,  t ≥ −1.
QpProblem phase_one(const QpProblem& qp) {
  const int n = qp.num_vars();
  QpProblem out;
  out.P.resize(n + 1, n + 1);
  out.q = VectorXd::Zero(n + 1);
  out.q[n] = 1.0;
  std::vector<Triplet> trip;
  VectorXd scale = VectorXd::Ones(qp.G.rows());
  for (int j = 0; j < qp.G.outerSize(); ++j)
    for (SparseMatrix::InnerIterator it(qp.G, j); it; ++it) {
      trip.emplace_back(it.row(), it.col(), it.value());
      scale[it.row()] = std::max(scale[it.row()], std::abs(it.value()));
    }
  for (int i = 0; i < qp.G.rows(); ++i) trip.emplace_back(i, n, -scale[i]);
  out.G.resize(qp.G.rows(), n + 1);
  out.G.setFromTriplets(trip.begin(), trip.end());
  out.h = qp.h;
  trip.clear();
  for (int j = 0; j < qp.A.outerSize(); ++j)
    for (SparseMatrix::InnerIterator it(qp.A, j); it; ++it) trip.emplace_back(it.row(), it.col(), it.value());
  out.A.resize(qp.A.rows(), n + 1);
  out.A.setFromTriplets(trip.begin(), trip.end());
  out.b = qp.b;
  out.lb = VectorXd::Constant(n + 1, -kInf);
  out.ub = VectorXd::Constant(n + 1, kInf);
  if (qp.lb.size() == n) out.lb.head(n) = qp.lb;
  if (qp.ub.size() == n) out.ub.head(n) = qp.ub;
  out.lb[n] = -1.0;
  return out;
}

}  // namespace

QpResult InteriorPointSolver::solve(const QpProblem& qp) const {
  QpResult result = solve_direct(qp);
  if (settings_.phase_one_threshold < 0.0 ||
      (result.status != SolveStatus::IterationLimit && result.status != SolveStatus::NumericalError))
    return result;
  InteriorPointSettings cfg = settings_;
  cfg.phase_one_threshold = -1.0;
  const QpResult p1 = InteriorPointSolver(cfg).solve_direct(phase_one(qp));
  if (p1.status == SolveStatus::Optimal && p1.x[qp.num_vars()] > settings_.phase_one_threshold)
    result.status = SolveStatus::Infeasible;
  return result;
}

QpResult InteriorPointSolver::solve_direct(const QpProblem& qp) const {
  const int n = qp.num_vars();
  QpResult result;
  result.x = VectorXd::Zero(n);

  SparseMatrix P = qp.P;
  if (P.rows() == 0) P.resize(n, n);
  const VectorXd& q = qp.q;
  Standardized st = standardize(qp);
  if (st.trivially_infeasible) {
    result.status = SolveStatus::Infeasible;
    return result;
  }
  const SparseMatrix& G = st.G;
  const SparseMatrix& A = st.A;
  const VectorXd& h = st.h;
  const VectorXd& b = st.b;
  const int m = static_cast<int>(G.rows());
  const int p = static_cast<int>(A.rows());
  const auto& cfg = settings_;

  KktSystem kkt(P, A, G, cfg.regularization);
  auto objective = [&](const VectorXd& x) {
    return 0.5 * x.dot(P.selfadjointView<Eigen::Lower>() * x) + q.dot(x);
  };

  // Initial point from the W = I system.
  if (!kkt.factor(VectorXd::Ones(m))) {
    result.status = SolveStatus::NumericalError;
    return result;
  }
  VectorXd rhs(n + p + m);
  rhs << -q, b, h;
  VectorXd sol = kkt.solve(rhs, cfg.refinement_steps);
  VectorXd x = sol.head(n);
  VectorXd y = sol.segment(n, p);
  VectorXd z = sol.tail(m);
  VectorXd s = -z;

  if (m == 0) {
    result.status = SolveStatus::Optimal;
    result.x = x;
    result.objective = objective(x);
    return result;
  }
  {
    const double ap = -s.minCoeff();
    if (ap >= -1e-8 * std::max(1.0, inf_norm(s))) s.array() += 1.0 + ap;
    const double ad = -z.minCoeff();
    if (ad >= -1e-8 * std::max(1.0, inf_norm(z))) z.array() += 1.0 + ad;
  }

  const double bnorm = 1.0 + std::max(inf_norm(b), inf_norm(h));
  const double qnorm = 1.0 + inf_norm(q);

  for (int it = 0; it < cfg.max_iterations; ++it) {
    result.iterations = it + 1;
    const VectorXd Px = P.selfadjointView<Eigen::Lower>() * x;
    const VectorXd rd = Px + q + A.transpose() * y + G.transpose() * z;
    const VectorXd rp = A * x - b;
    const VectorXd rg = G * x + s - h;
    const double gap = s.dot(z);
    const double mu = gap / m;
    const double pobj = 0.5 * x.dot(Px) + q.dot(x);

    const double pres = std::max(inf_norm(rp), inf_norm(rg)) / bnorm;
    const double dres = inf_norm(rd) / qnorm;
    if (pres <= cfg.feasibility_tol && dres <= cfg.feasibility_tol &&
        (gap <= cfg.gap_tol || gap <= cfg.gap_tol * std::abs(pobj))) {
      result.status = SolveStatus::Optimal;
      result.x = x;
      result.objective = objective(x);
      return result;
    }

    // Primal infeasibility certificate: z ≥ 0, Aᵀy + Gᵀz ≈ 0, hᵀz + bᵀy < 0.
    const double cert = h.dot(z) + b.dot(y);
    if (cert < 0.0) {
      const double dual_res = inf_norm(A.transpose() * y + G.transpose() * z);
      if (dual_res <= cfg.infeasibility_tol * -cert) {
        result.status = SolveStatus::Infeasible;
        result.x = x;
        return result;
      }
    }
    // Dual infeasibility certificate: Px ≈ 0, Ax ≈ 0, Gx ≤ 0, qᵀx < 0.
    const double qx = q.dot(x);
    if (qx < 0.0 && pres > cfg.feasibility_tol) {
      const double scale = -qx;
      const VectorXd Gx = G * x;
      if (inf_norm(Px) <= cfg.infeasibility_tol * scale && inf_norm(A * x) <= cfg.infeasibility_tol * scale &&
          (m == 0 || Gx.maxCoeff() <= cfg.infeasibility_tol * scale)) {
        result.status = SolveStatus::Unbounded;
        result.x = x;
        return result;
      }
    }

    const VectorXd w = s.cwiseQuotient(z);
    if (!kkt.factor(w)) {
      result.status = SolveStatus::NumericalError;
      result.x = x;
      return result;
    }

    // Predictor.
    rhs << -rd, -rp, -rg + s;
    sol = kkt.solve(rhs, cfg.refinement_steps);
    VectorXd dz = sol.tail(m);
    VectorXd ds = -s - w.cwiseProduct(dz);
    const double a_aff = std::min({1.0, max_step(s, ds), max_step(z, dz)});
    const double mu_aff = (s + a_aff * ds).dot(z + a_aff * dz) / m;
    const double sigma = std::pow(std::clamp(mu_aff / mu, 0.0, 1.0), 3);

    // Corrector.
    const VectorXd rc = s.cwiseProduct(z) + ds.cwiseProduct(dz) - VectorXd::Constant(m, sigma * mu);
    rhs.tail(m) = -rg + rc.cwiseQuotient(z);
    sol = kkt.solve(rhs, cfg.refinement_steps);
    const VectorXd dx = sol.head(n);
    const VectorXd dy = sol.segment(n, p);
    dz = sol.tail(m);
    ds = -(rc + s.cwiseProduct(dz)).cwiseQuotient(z);

    const double alpha = std::min(1.0, 0.99 * std::min(max_step(s, ds), max_step(z, dz)));
    x += alpha * dx;
    y += alpha * dy;
    z += alpha * dz;
    s += alpha * ds;
    if (!x.allFinite() || !z.allFinite() || !s.allFinite()) {
      result.status = SolveStatus::NumericalError;
      return result;
    }
  }
  result.status = SolveStatus::IterationLimit;
  result.x = x;
  result.objective = objective(x);
  return result;
}

}  // namespace stlrrt
