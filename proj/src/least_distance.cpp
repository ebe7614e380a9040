#include "stlrrt/solver.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace stlrrt {

using Eigen::MatrixXd;
using Eigen::VectorXd;

VectorXd nnls(const MatrixXd& E, const VectorXd& f, int max_iterations) {
  const Eigen::Index cols = E.cols();
  if (max_iterations <= 0) max_iterations = static_cast<int>(3 * cols + 10);
  VectorXd lambda = VectorXd::Zero(cols);
  std::vector<char> passive(static_cast<std::size_t>(cols), 0);
  const double tol = 1e-12 * std::max(1.0, E.cwiseAbs().maxCoeff()) * std::max(1.0, f.cwiseAbs().maxCoeff());

  auto solve_passive = [&](VectorXd& zeta) {
    std::vector<Eigen::Index> idx;
    for (Eigen::Index j = 0; j < cols; ++j)
      if (passive[static_cast<std::size_t>(j)]) idx.push_back(j);
    MatrixXd Ep(E.rows(), static_cast<Eigen::Index>(idx.size()));
    for (std::size_t k = 0; k < idx.size(); ++k) Ep.col(static_cast<Eigen::Index>(k)) = E.col(idx[k]);
    const VectorXd sol = Ep.colPivHouseholderQr().solve(f);
    zeta.setZero(cols);
    for (std::size_t k = 0; k < idx.size(); ++k) zeta[idx[k]] = sol[static_cast<Eigen::Index>(k)];
  };

  for (int outer = 0; outer < max_iterations; ++outer) {
    const VectorXd w = E.transpose() * (f - E * lambda);
    Eigen::Index best = -1;
    double best_w = tol;
    for (Eigen::Index j = 0; j < cols; ++j)
      if (!passive[static_cast<std::size_t>(j)] && w[j] > best_w) {
        best_w = w[j];
        best = j;
      }
    if (best < 0) break;
    passive[static_cast<std::size_t>(best)] = 1;

    VectorXd zeta;
    for (int inner = 0; inner <= cols; ++inner) {
      solve_passive(zeta);
      bool positive = true;
      for (Eigen::Index j = 0; j < cols; ++j)
        if (passive[static_cast<std::size_t>(j)] && zeta[j] <= 0.0) positive = false;
      if (positive) break;
      double alpha = 1.0;
      for (Eigen::Index j = 0; j < cols; ++j)
        if (passive[static_cast<std::size_t>(j)] && zeta[j] <= 0.0)
          alpha = std::min(alpha, lambda[j] / (lambda[j] - zeta[j]));
      lambda += alpha * (zeta - lambda);
      for (Eigen::Index j = 0; j < cols; ++j)
        if (passive[static_cast<std::size_t>(j)] && lambda[j] <= 1e-15) {
          passive[static_cast<std::size_t>(j)] = 0;
          lambda[j] = 0.0;
        }
    }
    for (Eigen::Index j = 0; j < cols; ++j)
      lambda[j] = passive[static_cast<std::size_t>(j)] ? std::max(0.0, zeta[j]) : 0.0;
  }
  return lambda;
}

LeastDistanceResult least_distance(const MatrixXd& C, const VectorXd& d, double tol) {
  const Eigen::Index m = C.cols();
  LeastDistanceResult out;
  out.u = VectorXd::Zero(m);

  // Normalize rows; rows without coefficients are either vacuous or fatal.
  std::vector<Eigen::Index> kept;
  kept.reserve(static_cast<std::size_t>(C.rows()));
  VectorXd norms(C.rows());
  for (Eigen::Index i = 0; i < C.rows(); ++i) {
    norms[i] = C.row(i).norm();
    if (norms[i] > 0.0) {
      kept.push_back(i);
    } else if (d[i] > tol) {
      out.feasible = false;
      out.max_violation = d[i];
      out.worst_row = static_cast<int>(i);
      return out;
    }
  }

  auto evaluate = [&](const VectorXd& u) {
    out.max_violation = -kInf;
    out.worst_row = -1;
    for (Eigen::Index i : kept) {
      const double v = (d[i] - C.row(i).dot(u)) / norms[i];
      if (v > out.max_violation) {
        out.max_violation = v;
        out.worst_row = static_cast<int>(i);
      }
    }
    if (kept.empty()) out.max_violation = 0.0;
    return out.max_violation <= tol;
  };

  if (evaluate(out.u)) {
    out.feasible = true;
    return out;
  }

  // Small active sets: a candidate with nonnegative multipliers that satisfies
  // every row is the exact minimizer.
  auto satisfies_all = [&](const VectorXd& v, Eigen::Index& worst) {
    double most = tol;
    worst = -1;
    for (Eigen::Index k : kept) {
      const double g = (d[k] - C.row(k).dot(v)) / norms[k];
      if (g > most) {
        most = g;
        worst = k;
      }
    }
    return worst < 0;
  };
  auto accept = [&](const VectorXd& v) {
    out.u = v;
    out.feasible = evaluate(v);
    return out;
  };
  VectorXd u(m);
  for (Eigen::Index i : kept) {
    if (d[i] / norms[i] <= tol) continue;
    u = C.row(i).transpose() * (d[i] / (norms[i] * norms[i]));
    Eigen::Index k = -1;
    if (satisfies_all(u, k)) return accept(u);
    const double gii = norms[i] * norms[i], gkk = norms[k] * norms[k], gik = C.row(i).dot(C.row(k));
    const double det = gii * gkk - gik * gik;
    if (det <= 1e-12 * gii * gkk) continue;
    const double mi = (gkk * d[i] - gik * d[k]) / det;
    const double mk = (gii * d[k] - gik * d[i]) / det;
    if (mi < 0.0 || mk < 0.0) continue;
    u = mi * C.row(i).transpose() + mk * C.row(k).transpose();
    if (satisfies_all(u, k)) return accept(u);
  }

  MatrixXd E(m + 1, static_cast<Eigen::Index>(kept.size()));
  for (std::size_t k = 0; k < kept.size(); ++k) {
    const Eigen::Index i = kept[k];
    E.col(static_cast<Eigen::Index>(k)).head(m) = C.row(i).transpose() / norms[i];
    E(m, static_cast<Eigen::Index>(k)) = d[i] / norms[i];
  }
  VectorXd f = VectorXd::Zero(m + 1);
  f[m] = 1.0;
  const VectorXd lambda = nnls(E, f);
  const VectorXd r = E * lambda - f;
  if (std::abs(r[m]) > 1e-14) out.u = -r.head(m) / r[m];
  out.feasible = evaluate(out.u);
  return out;
}

}  // namespace stlrrt
