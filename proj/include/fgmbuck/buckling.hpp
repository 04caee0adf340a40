#pragma once

// Smallest positive lambda of (K + lambda K_G) x = 0 with K positive definite.
// Both paths work on mu = 1/lambda, the eigenvalues of K^-1 (-K_G): the dense
// reference by Cholesky congruence, the sparse path by Lanczos in the
// K-inner product.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <random>
#include <string>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include "fgmbuck/errors.hpp"

namespace fgmbuck {

struct BucklingSolution {
  double factor = 0.0;
  Eigen::VectorXd mode;
  double residual = 0.0;
  int iterations = 0;  // Lanczos steps; 0 for the dense path
};

enum class SolverMethod { automatic, dense, sparse };

struct SolverOptions {
  SolverMethod method = SolverMethod::automatic;
  int dense_limit = 1500;  // automatic picks dense up to this size
  int max_iterations = 600;
  double ritz_tolerance = 1e-13;
  double residual_tolerance = 1e-8;
  unsigned seed = 20240601u;
};

namespace detail {

template <typename MatK, typename MatG>
double buckling_residual(const MatK& k, const MatG& kg, double lambda, const Eigen::VectorXd& x) {
  const Eigen::VectorXd kx = k * x;
  const double denom = kx.norm();
  if (denom == 0.0) return std::numeric_limits<double>::infinity();
  return (kx + lambda * (kg * x)).norm() / denom;
}

inline std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

inline void normalize_mode(Eigen::VectorXd& x) {
  Eigen::Index at = 0;
  const double peak = x.cwiseAbs().maxCoeff(&at);
  if (peak == 0.0) throw InternalError("eigen", "zero buckling mode");
  x /= (x(at) > 0.0 ? peak : -peak);
}

/// Largest mu must be clearly positive relative to the spectrum scale.
inline double check_positive(double mu_max, double scale) {
  if (!(mu_max > 1e-14 * std::max(scale, std::numeric_limits<double>::min()))) {
    throw NoBucklingError("eigen", "load does not induce buckling (no positive critical factor)");
  }
  return 1.0 / mu_max;
}

}  // namespace detail

/// Full-spectrum reference. Suitable for a few thousand unknowns at most.
inline BucklingSolution smallest_positive_factor_dense(const Eigen::MatrixXd& k, const Eigen::MatrixXd& kg) {
  const Eigen::Index n = k.rows();
  if (n == 0 || k.cols() != n || kg.rows() != n || kg.cols() != n) {
    throw DomainError("eigen", "K and K_G must be square and of equal size");
  }
  Eigen::LLT<Eigen::MatrixXd> llt(k);
  if (llt.info() != Eigen::Success) throw ConstraintError("eigen", "K is not positive definite");
  // C = L^-1 (-K_G) L^-T
  Eigen::MatrixXd c = llt.matrixL().solve(-kg);
  c = llt.matrixL().solve(c.transpose()).eval();
  c = 0.5 * (c + c.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(c);
  if (es.info() != Eigen::Success) throw InternalError("eigen", "symmetric eigensolver failed");
  const Eigen::VectorXd& mu = es.eigenvalues();  // ascending
  BucklingSolution out;
  out.factor = detail::check_positive(mu(n - 1), mu.cwiseAbs().maxCoeff());
  out.mode = llt.matrixU().solve(es.eigenvectors().col(n - 1));
  detail::normalize_mode(out.mode);
  out.residual = detail::buckling_residual(k, kg, out.factor, out.mode);
  return out;
}

/// Lanczos on K^-1 (-K_G) with full reorthogonalisation in the K-inner
/// product. The start vector comes from a fixed seed, so runs are repeatable.
inline BucklingSolution smallest_positive_factor_sparse(const Eigen::SparseMatrix<double>& k,
                                                        const Eigen::SparseMatrix<double>& kg,
                                                        const SolverOptions& options = {}) {
  const Eigen::Index n = k.rows();
  if (n == 0 || k.cols() != n || kg.rows() != n || kg.cols() != n) {
    throw DomainError("eigen", "K and K_G must be square and of equal size");
  }
  Eigen::SimplicialLLT<Eigen::SparseMatrix<double>> llt(k);
  if (llt.info() != Eigen::Success) throw ConstraintError("eigen", "K is not positive definite");

  const int m_max = static_cast<int>(std::min<Eigen::Index>(options.max_iterations, n));
  Eigen::MatrixXd v(n, m_max + 1), kv(n, m_max + 1);
  Eigen::VectorXd alpha(m_max), beta(m_max);

  std::mt19937_64 rng(options.seed);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  Eigen::VectorXd q(n);
  for (Eigen::Index i = 0; i < n; ++i) q(i) = uni(rng);
  Eigen::VectorXd kq = k * q;
  double norm = std::sqrt(q.dot(kq));
  v.col(0) = q / norm;
  kv.col(0) = kq / norm;

  BucklingSolution out;
  for (int j = 0; j < m_max; ++j) {
    const Eigen::VectorXd gv = -(kg * v.col(j));
    Eigen::VectorXd w = llt.solve(gv);
    alpha(j) = v.col(j).dot(gv);
    // Two passes of classical Gram-Schmidt against all previous vectors.
    for (int pass = 0; pass < 2; ++pass) {
      const Eigen::VectorXd coeff = kv.leftCols(j + 1).transpose() * w;
      w.noalias() -= v.leftCols(j + 1) * coeff;
    }
    // K w is formed directly: carrying it through the recurrence lets the
    // solve error grow by 1/beta every step.
    const Eigen::VectorXd kw = k * w;
    beta(j) = std::sqrt(std::max(0.0, w.dot(kw)));

    const int m = j + 1;
    const bool exhausted = beta(j) <= 1e-14 * std::max(1.0, alpha.head(m).cwiseAbs().maxCoeff()) || m == m_max;
    if (!exhausted && m % 5 != 0 && m < 20) {
      v.col(m) = w / beta(j);
      kv.col(m) = kw / beta(j);
      continue;
    }
    Eigen::MatrixXd t = Eigen::MatrixXd::Zero(m, m);
    for (int i = 0; i < m; ++i) {
      t(i, i) = alpha(i);
      if (i + 1 < m) t(i, i + 1) = t(i + 1, i) = beta(i);
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(t);
    const double theta = es.eigenvalues()(m - 1);
    const double scale = es.eigenvalues().cwiseAbs().maxCoeff();
    const double estimate = std::abs(beta(j) * es.eigenvectors()(m - 1, m - 1));
    if (exhausted || estimate <= options.ritz_tolerance * std::max(std::abs(theta), scale)) {
      double lambda = detail::check_positive(theta, scale);
      Eigen::VectorXd x = v.leftCols(m) * es.eigenvectors().col(m - 1);
      detail::normalize_mode(x);
      double res = detail::buckling_residual(k, kg, lambda, x);
      if (res >= options.residual_tolerance) {
        // The Ritz vector carries the rounding of the whole basis; one step of
        // inverse iteration with a Rayleigh quotient removes most of it.
        Eigen::VectorXd y = llt.solve(-(kg * x));
        detail::normalize_mode(y);
        const double den = -y.dot(kg * y);
        if (den > 0.0) {
          const double refined = y.dot(k * y) / den;
          const double refined_res = detail::buckling_residual(k, kg, refined, y);
          if (refined_res < res) {
            lambda = refined;
            x = std::move(y);
            res = refined_res;
          }
        }
      }
      if (res < options.residual_tolerance || exhausted) {
        out.factor = lambda;
        out.mode = std::move(x);
        out.residual = res;
        out.iterations = m;
        if (res >= options.residual_tolerance) {
          throw InternalError("eigen", "Lanczos stopped with residual " + detail::sci(res));
        }
        return out;
      }
    }
    v.col(m) = w / beta(j);
    kv.col(m) = kw / beta(j);
  }
  throw InternalError("eigen", "Lanczos did not converge");
}

/// Entry point used by the analysis layer.
inline BucklingSolution smallest_positive_factor(const Eigen::SparseMatrix<double>& k,
                                                 const Eigen::SparseMatrix<double>& kg,
                                                 const SolverOptions& options = {}) {
  const bool dense = options.method == SolverMethod::dense ||
                     (options.method == SolverMethod::automatic && k.rows() <= options.dense_limit);
  BucklingSolution s = dense ? smallest_positive_factor_dense(Eigen::MatrixXd(k), Eigen::MatrixXd(kg))
                             : smallest_positive_factor_sparse(k, kg, options);
  if (!(s.residual < options.residual_tolerance)) {
    throw InternalError("eigen", "buckling residual " + detail::sci(s.residual) + " exceeds tolerance");
  }
  return s;
}

}  // namespace fgmbuck
