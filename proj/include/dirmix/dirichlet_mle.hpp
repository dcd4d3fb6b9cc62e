#pragma once

// Weighted maximum-likelihood estimation of a single Dirichlet component.
//
// F(alpha) = sum_n w_n [ -sum_i (alpha_i - 1) ln z_ni + sum_i lnGamma(alpha_i)
//                        - lnGamma(sum_i alpha_i) ]
//
// Two majorize-minimize schemes are provided. The quadratic scheme bounds
// phi = lnGamma(. + 1) by a parabola and linearizes -lnGamma(sum alpha), so
// each coordinate update is the positive root of c a^2 + b a - 1 = 0. The
// Minka scheme only linearizes -lnGamma(sum alpha) and has to invert the
// digamma function with Newton iterations.

#include <vector>

#include <Eigen/Core>

#include "dirmix/core.hpp"

namespace dirmix {

/// Below this total weight a component is treated as empty and left untouched.
inline constexpr double kEmptyClusterMass = 1e-12;

/// Weighted sample: clamped ln z (N x K) and nonnegative per-row weights.
struct WeightedSample {
  Eigen::MatrixXd log_z;
  Eigen::VectorXd weights;
};

/// Everything F depends on: the total weight and the weighted mean of ln z.
struct DirichletStats {
  double mass = 0.0;
  Eigen::VectorXd mean_log_z;

  static DirichletStats from(const Eigen::MatrixXd& log_z, const Eigen::VectorXd& weights);
  static DirichletStats from(const WeightedSample& data) {
    return from(data.log_z, data.weights);
  }
  bool empty() const { return mass < kEmptyClusterMass; }
};

struct MmOptions {
  double eps = 1e-13;
  int max_iter = 1000;
  bool record_trajectory = false;
};

struct MmReport {
  int iterations = 0;
  double final_objective = 0.0;
  bool converged = false;
  bool empty_cluster = false;
  std::vector<double> trajectory;
};

struct DirichletFit {
  Eigen::VectorXd alpha;
  MmReport report;
};

double neg_log_likelihood(const Eigen::VectorXd& alpha, const DirichletStats& stats);
double neg_log_likelihood(const Eigen::VectorXd& alpha, const WeightedSample& data);

/// Quadratic tangent majorant q(alpha; beta) of F, touching F at alpha = beta.
double majorant_q(const Eigen::VectorXd& alpha, const Eigen::VectorXd& beta,
                  const DirichletStats& stats);
double majorant_q(const Eigen::VectorXd& alpha, const Eigen::VectorXd& beta,
                  const WeightedSample& data);

/// Minimizer of q(.; alpha). Throws EmptyClusterError when the weight mass vanishes.
Eigen::VectorXd mm_quadratic_step(const Eigen::VectorXd& alpha, const DirichletStats& stats);
Eigen::VectorXd mm_quadratic_step(const Eigen::VectorXd& alpha, const WeightedSample& data);

/// One step of Minka's fixed point, alpha_i <- psi^{-1}(psi(sum alpha) + mean ln z_i).
Eigen::VectorXd minka_step(const Eigen::VectorXd& alpha, const DirichletStats& stats);
Eigen::VectorXd minka_step(const Eigen::VectorXd& alpha, const WeightedSample& data);

/// Iterate the quadratic MM step until ||a' - a||^2 / ||a||^2 <= eps or max_iter.
/// An empty component returns `init` unchanged with report.empty_cluster set.
DirichletFit fit_dirichlet(const Eigen::VectorXd& init, const DirichletStats& stats,
                           const MmOptions& options = {});
DirichletFit fit_dirichlet(const Eigen::VectorXd& init, const WeightedSample& data,
                           const MmOptions& options = {});

/// Same loop and stopping rule driven by `minka_step`.
DirichletFit fit_dirichlet_minka(const Eigen::VectorXd& init, const DirichletStats& stats,
                                 const MmOptions& options = {});
DirichletFit fit_dirichlet_minka(const Eigen::VectorXd& init, const WeightedSample& data,
                                 const MmOptions& options = {});

/// Solves psi(x) = y by Newton's method (at most 50 iterations).
double inverse_digamma(double y);

/// ||next - prev||^2 / ||prev||^2 (the plain squared change when prev is zero).
template <typename A, typename B>
double relative_squared_change(const Eigen::MatrixBase<A>& next, const Eigen::MatrixBase<B>& prev) {
  const double change = (next - prev).squaredNorm();
  const double scale = prev.squaredNorm();
  return scale > 0.0 ? change / scale : change;
}

}  // namespace dirmix
