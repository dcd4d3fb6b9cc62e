#include "dirmix/dirichlet_mle.hpp"

#include <cmath>

namespace dirmix {

namespace {

void require_alpha(const Eigen::VectorXd& alpha, const char* what) {
  if (alpha.size() == 0 || !alpha.allFinite() || (alpha.array() <= 0.0).any()) {
    throw DomainError(std::string(what) + ": parameters must be positive and finite");
  }
}

void require_dims(const Eigen::VectorXd& alpha, const DirichletStats& stats) {
  if (alpha.size() != stats.mean_log_z.size()) {
    throw DimensionError("parameter length " + std::to_string(alpha.size()) +
                         " differs from feature dimension " +
                         std::to_string(stats.mean_log_z.size()));
  }
}

void require_mass(const DirichletStats& stats) {
  if (stats.empty()) throw EmptyClusterError("weighted sample has no mass");
}

template <typename Step>
DirichletFit iterate(const Eigen::VectorXd& init, const DirichletStats& stats,
                     const MmOptions& options, Step step) {
  require_alpha(init, "fit_dirichlet");
  require_dims(init, stats);
  if (!(options.eps > 0.0)) throw ValidationError("eps must be positive");
  if (options.max_iter < 0) throw ValidationError("max_iter must be nonnegative");

  DirichletFit fit{init, {}};
  if (stats.empty()) {
    fit.report.empty_cluster = true;
    fit.report.converged = true;
    return fit;
  }
  if (options.record_trajectory) fit.report.trajectory.push_back(neg_log_likelihood(init, stats));
  for (int m = 0; m < options.max_iter; ++m) {
    Eigen::VectorXd next = step(fit.alpha, stats);
    const double change = relative_squared_change(next, fit.alpha);
    fit.alpha = std::move(next);
    fit.report.iterations = m + 1;
    if (options.record_trajectory) {
      fit.report.trajectory.push_back(neg_log_likelihood(fit.alpha, stats));
    }
    if (change <= options.eps) {
      fit.report.converged = true;
      break;
    }
  }
  fit.report.final_objective = neg_log_likelihood(fit.alpha, stats);
  return fit;
}

}  // namespace

DirichletStats DirichletStats::from(const Eigen::MatrixXd& log_z, const Eigen::VectorXd& weights) {
  if (log_z.rows() != weights.size()) {
    throw DimensionError("weight count differs from sample count");
  }
  if (!weights.allFinite() || (weights.array() < 0.0).any()) {
    throw ValidationError("weights must be nonnegative and finite");
  }
  DirichletStats s;
  s.mass = weights.sum();
  if (s.mass > 0.0) {
    s.mean_log_z = (log_z.transpose() * weights) / s.mass;
  } else {
    s.mean_log_z = Eigen::VectorXd::Zero(log_z.cols());
  }
  return s;
}

double neg_log_likelihood(const Eigen::VectorXd& alpha, const DirichletStats& stats) {
  require_alpha(alpha, "neg_log_likelihood");
  require_dims(alpha, stats);
  require_mass(stats);
  double per_unit = -ln_gamma(alpha.sum());
  for (Index i = 0; i < alpha.size(); ++i) {
    per_unit += -(alpha(i) - 1.0) * stats.mean_log_z(i) + ln_gamma(alpha(i));
  }
  return stats.mass * per_unit;
}

double majorant_q(const Eigen::VectorXd& alpha, const Eigen::VectorXd& beta,
                  const DirichletStats& stats) {
  require_alpha(alpha, "majorant_q");
  require_alpha(beta, "majorant_q");
  require_dims(alpha, stats);
  require_dims(beta, stats);
  require_mass(stats);
  const double beta_sum = beta.sum();
  double per_unit = -ln_gamma(beta_sum) - (alpha.sum() - beta_sum) * digamma(beta_sum);
  for (Index i = 0; i < alpha.size(); ++i) {
    const double a = alpha(i);
    const double b = beta(i);
    const double d = a - b;
    per_unit += -(a - 1.0) * stats.mean_log_z(i) - std::log(a) + ln_gamma(b + 1.0) +
                digamma(b + 1.0) * d + 0.5 * curvature_c(b) * d * d;
  }
  return stats.mass * per_unit;
}

Eigen::VectorXd mm_quadratic_step(const Eigen::VectorXd& alpha, const DirichletStats& stats) {
  require_alpha(alpha, "mm_quadratic_step");
  require_dims(alpha, stats);
  require_mass(stats);
  const double psi_sum = digamma(alpha.sum());
  Eigen::VectorXd next(alpha.size());
  for (Index i = 0; i < alpha.size(); ++i) {
    const double a = alpha(i);
    const double c = curvature_c(a);
    const double b = digamma(a + 1.0) - psi_sum - c * a - stats.mean_log_z(i);
    const double root = std::sqrt(b * b + 4.0 * c);
    // Positive root of c x^2 + b x - 1 = 0, written without cancellation.
    next(i) = (b >= 0.0) ? 2.0 / (b + root) : (root - b) / (2.0 * c);
  }
  return next;
}

double inverse_digamma(double y) {
  if (!std::isfinite(y)) throw DomainError("inverse_digamma: argument must be finite");
  double x = (y >= -2.22) ? std::exp(y) + 0.5 : -1.0 / (y + detail::kEulerGamma);
  for (int it = 0; it < 50; ++it) {
    const double step = (digamma(x) - y) / trigamma(x);
    double next = x - step;
    if (!(next > 0.0)) next = 0.5 * x;
    if (std::abs(next - x) <= 1e-14 * next) return next;
    x = next;
  }
  throw NumericalError("inverse_digamma: Newton iterations did not converge for y = " +
                       std::to_string(y));
}

Eigen::VectorXd minka_step(const Eigen::VectorXd& alpha, const DirichletStats& stats) {
  require_alpha(alpha, "minka_step");
  require_dims(alpha, stats);
  require_mass(stats);
  const double psi_sum = digamma(alpha.sum());
  Eigen::VectorXd next(alpha.size());
  for (Index i = 0; i < alpha.size(); ++i) {
    next(i) = inverse_digamma(psi_sum + stats.mean_log_z(i));
  }
  return next;
}

DirichletFit fit_dirichlet(const Eigen::VectorXd& init, const DirichletStats& stats,
                           const MmOptions& options) {
  return iterate(init, stats, options, [](const Eigen::VectorXd& a, const DirichletStats& s) {
    return mm_quadratic_step(a, s);
  });
}

DirichletFit fit_dirichlet_minka(const Eigen::VectorXd& init, const DirichletStats& stats,
                                 const MmOptions& options) {
  return iterate(init, stats, options, [](const Eigen::VectorXd& a, const DirichletStats& s) {
    return minka_step(a, s);
  });
}

double neg_log_likelihood(const Eigen::VectorXd& alpha, const WeightedSample& data) {
  return neg_log_likelihood(alpha, DirichletStats::from(data));
}
double majorant_q(const Eigen::VectorXd& alpha, const Eigen::VectorXd& beta,
                  const WeightedSample& data) {
  return majorant_q(alpha, beta, DirichletStats::from(data));
}
Eigen::VectorXd mm_quadratic_step(const Eigen::VectorXd& alpha, const WeightedSample& data) {
  return mm_quadratic_step(alpha, DirichletStats::from(data));
}
Eigen::VectorXd minka_step(const Eigen::VectorXd& alpha, const WeightedSample& data) {
  return minka_step(alpha, DirichletStats::from(data));
}
DirichletFit fit_dirichlet(const Eigen::VectorXd& init, const WeightedSample& data,
                           const MmOptions& options) {
  return fit_dirichlet(init, DirichletStats::from(data), options);
}
DirichletFit fit_dirichlet_minka(const Eigen::VectorXd& init, const WeightedSample& data,
                                 const MmOptions& options) {
  return fit_dirichlet_minka(init, DirichletStats::from(data), options);
}

}  // namespace dirmix
