#pragma once

// Shared helpers for the unit tests: an RNG independent of the library's and
// naive reference computations.

#include <cmath>
#include <random>

#include <Eigen/Core>

#include "dirmix/core.hpp"

namespace testsupport {

using dirmix::Index;

inline std::mt19937_64& engine(std::uint64_t reseed = 0) {
  static std::mt19937_64 e(12345);
  if (reseed != 0) e.seed(reseed);
  return e;
}

inline double uniform(double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(engine());
}

inline double log_uniform(double lo, double hi) {
  return std::exp(uniform(std::log(lo), std::log(hi)));
}

inline Eigen::VectorXd random_simplex(Index k) {
  Eigen::VectorXd v(k);
  for (Index i = 0; i < k; ++i) v(i) = -std::log(uniform(1e-12, 1.0));
  return v / v.sum();
}

inline Eigen::MatrixXd random_simplex_rows(Index n, Index k) {
  Eigen::MatrixXd out(n, k);
  for (Index r = 0; r < n; ++r) out.row(r) = random_simplex(k).transpose();
  return out;
}

inline Eigen::VectorXd random_positive(Index k, double lo, double hi) {
  Eigen::VectorXd v(k);
  for (Index i = 0; i < k; ++i) v(i) = log_uniform(lo, hi);
  return v;
}

inline Eigen::MatrixXd dirichlet_rows(const Eigen::VectorXd& alpha, Index n) {
  Eigen::MatrixXd out(n, alpha.size());
  for (Index r = 0; r < n; ++r) {
    for (Index i = 0; i < alpha.size(); ++i) {
      out(r, i) = std::gamma_distribution<double>(alpha(i), 1.0)(engine());
    }
    out.row(r) /= out.row(r).sum();
  }
  return out;
}

inline dirmix::FeatureSet probability_features(const Eigen::MatrixXd& rows) {
  dirmix::FeatureSet f;
  f.kind = dirmix::ContentKind::SimplexProbabilities;
  f.rows = rows;
  return f;
}

inline dirmix::TaskInstance query_only_task(Index n, Index k) {
  dirmix::TaskInstance t;
  t.n_classes = k;
  for (Index i = 0; i < n; ++i) t.query_indices.push_back(i);
  return t;
}

inline bool close_rel(double a, double b, double tol) {
  return std::abs(a - b) <= tol * std::max(1.0, std::abs(b));
}

}  // namespace testsupport
