#include <cmath>
#include <numbers>

#include "dirmix/solvers.hpp"

namespace dirmix {

namespace {

struct Setup {
  Eigen::MatrixXd x;
  SoftAssignment u;
};

Setup setup(const FeatureSet& features, const TaskInstance& task, const SolverConfig& config) {
  config.validate();
  task.validate(features.n_samples());
  const Eigen::MatrixXd init = gather_task_rows(features.simplex_rows(), task);
  if (init.cols() != task.n_classes) {
    throw DimensionError("initial probabilities have " + std::to_string(init.cols()) +
                         " columns, task has " + std::to_string(task.n_classes) + " classes");
  }
  return {gather_task_rows(features.rows, task),
          SoftAssignment::with_support(task, init.bottomRows(task.n_query()))};
}

// Weighted means; a class without mass keeps its row of `previous`.
Eigen::MatrixXd weighted_centroids(const Eigen::MatrixXd& x, const Eigen::MatrixXd& u,
                                   const Eigen::MatrixXd& previous) {
  const Eigen::VectorXd mass = u.colwise().sum().transpose();
  Eigen::MatrixXd m = u.transpose() * x;
  for (Index k = 0; k < m.rows(); ++k) {
    if (mass(k) < kEmptyClusterMass) {
      m.row(k) = previous.row(k);
    } else {
      m.row(k) /= mass(k);
    }
  }
  return m;
}

Eigen::MatrixXd squared_distances(const Eigen::MatrixXd& x, const Eigen::MatrixXd& m) {
  Eigen::MatrixXd d = -2.0 * x * m.transpose();
  d.colwise() += x.rowwise().squaredNorm();
  d.rowwise() += m.rowwise().squaredNorm().transpose();
  return d.cwiseMax(0.0);
}

Eigen::MatrixXd one_hot_argmax(const Eigen::MatrixXd& scores) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(scores.rows(), scores.cols());
  for (Index n = 0; n < scores.rows(); ++n) out(n, argmax_lowest(scores.row(n))) = 1.0;
  return out;
}

ObjectiveBreakdown cost_only(double cost) {
  ObjectiveBreakdown b;
  b.neg_log_likelihood = cost;
  b.total = cost;
  return b;
}

void finish(SolverResult& r, Setup& s, Eigen::MatrixXd centroids) {
  r.assignment = std::move(s.u);
  r.centroids = std::move(centroids);
  r.proportions = query_proportions(r.assignment);
}

}  // namespace

SolverResult hard_kmeans(const FeatureSet& features, const TaskInstance& task,
                         const SolverConfig& config) {
  Setup s = setup(features, task, config);
  const Index n_query = task.n_query();
  Eigen::MatrixXd centroids =
      Eigen::MatrixXd::Zero(task.n_classes, s.x.cols()).rowwise() + s.x.colwise().mean();
  SolverResult r;
  for (int iter = 0; iter < config.max_outer_iter; ++iter) {
    centroids = weighted_centroids(s.x, s.u.u, centroids);
    const Eigen::MatrixXd d = squared_distances(s.x, centroids);
    Eigen::MatrixXd next = one_hot_argmax(-d.bottomRows(n_query));
    const bool unchanged = next == s.u.query_block();
    s.u.query_block() = next;
    r.outer_iterations = iter + 1;
    r.objective_trace.push_back(cost_only(0.5 * s.u.u.cwiseProduct(d).sum()));
    if (unchanged) {
      r.converged = true;
      break;
    }
  }
  finish(r, s, std::move(centroids));
  return r;
}

SolverResult soft_kmeans(const FeatureSet& features, const TaskInstance& task,
                         const SolverConfig& config) {
  Setup s = setup(features, task, config);
  const Index n_query = task.n_query();
  Eigen::MatrixXd centroids =
      Eigen::MatrixXd::Zero(task.n_classes, s.x.cols()).rowwise() + s.x.colwise().mean();
  SolverResult r;
  for (int iter = 0; iter < config.max_outer_iter; ++iter) {
    Eigen::MatrixXd next = weighted_centroids(s.x, s.u.u, centroids);
    const Eigen::MatrixXd d = squared_distances(s.x, next);
    s.u.query_block() = softmax_rows(-config.kmeans_stiffness * d.bottomRows(n_query));
    const double change = relative_squared_change(next, centroids);
    centroids = std::move(next);
    r.outer_iterations = iter + 1;
    r.objective_trace.push_back(cost_only(config.kmeans_stiffness * s.u.u.cwiseProduct(d).sum() +
                                          barrier_phi(s.u)));
    if (change <= config.outer_eps) {
      r.converged = true;
      break;
    }
  }
  finish(r, s, std::move(centroids));
  return r;
}

SolverResult em_gaussian(const FeatureSet& features, const TaskInstance& task,
                         const SolverConfig& config, Covariance covariance) {
  Setup s = setup(features, task, config);
  const Index n_query = task.n_query();
  const Index k = task.n_classes;
  const Index dim = s.x.cols();
  const double lambda = config.effective_lambda();
  const bool hard = config.effective_hard();
  const double log_2pi = std::log(2.0 * std::numbers::pi);

  Eigen::MatrixXd means = Eigen::MatrixXd::Zero(k, dim).rowwise() + s.x.colwise().mean();
  Eigen::MatrixXd variances = Eigen::MatrixXd::Ones(k, dim);
  SolverResult r;
  for (int iter = 0; iter < config.max_outer_iter; ++iter) {
    Eigen::MatrixXd next_means = weighted_centroids(s.x, s.u.u, means);
    Eigen::MatrixXd next_vars = variances;
    Eigen::MatrixXd log_density(s.x.rows(), k);
    if (covariance == Covariance::Identity) {
      log_density = -0.5 * squared_distances(s.x, next_means).array() - 0.5 * dim * log_2pi;
    } else {
      const Eigen::VectorXd mass = s.u.u.colwise().sum().transpose();
      for (Index c = 0; c < k; ++c) {
        const Eigen::MatrixXd centred = s.x.rowwise() - next_means.row(c);
        if (mass(c) >= kEmptyClusterMass) {
          next_vars.row(c) = (s.u.u.col(c).transpose() * centred.array().square().matrix()) / mass(c);
          next_vars.row(c) = next_vars.row(c).cwiseMax(kVarianceFloor);
        }
        const Eigen::RowVectorXd inv_var = next_vars.row(c).cwiseInverse();
        log_density.col(c) =
            -0.5 * (centred.array().square().rowwise() * inv_var.array()).rowwise().sum() -
            0.5 * (next_vars.row(c).array().log().sum() + dim * log_2pi);
      }
    }
    r.proportions = update_proportions(s.u, task);
    s.u.query_block() = assignment_step(log_density.bottomRows(n_query), r.proportions, lambda, hard);

    Eigen::MatrixXd stacked_prev(2 * k, dim), stacked_next(2 * k, dim);
    stacked_prev << means, variances;
    stacked_next << next_means, next_vars;
    const double change = relative_squared_change(stacked_next, stacked_prev);
    means = std::move(next_means);
    variances = std::move(next_vars);
    r.outer_iterations = iter + 1;
    r.objective_trace.push_back(objective_from_log_density(s.u, log_density, lambda));
    if (change <= config.outer_eps) {
      r.converged = true;
      break;
    }
  }
  finish(r, s, std::move(means));
  return r;
}

SolverResult hard_kl_kmeans(const FeatureSet& features, const TaskInstance& task,
                            const SolverConfig& config) {
  if (features.kind != ContentKind::SimplexProbabilities) {
    throw ValidationError("KL K-means needs simplex probability features");
  }
  Setup s = setup(features, task, config);
  const Index n_query = task.n_query();
  const Eigen::MatrixXd log_x = clamped_log(s.x);
  const double self_term = s.x.cwiseProduct(log_x).sum();
  Eigen::MatrixXd centroids =
      Eigen::MatrixXd::Constant(task.n_classes, s.x.cols(), 1.0 / s.x.cols());
  SolverResult r;
  for (int iter = 0; iter < config.max_outer_iter; ++iter) {
    centroids = weighted_centroids(s.x, s.u.u, centroids);
    // KL(z || m) = sum z ln z - sum z ln m; only the cross term depends on m.
    const Eigen::MatrixXd cross = s.x * clamped_log(centroids).transpose();
    Eigen::MatrixXd next = one_hot_argmax(cross.bottomRows(n_query));
    const bool unchanged = next == s.u.query_block();
    s.u.query_block() = next;
    r.outer_iterations = iter + 1;
    r.objective_trace.push_back(cost_only(self_term - s.u.u.cwiseProduct(cross).sum()));
    if (unchanged) {
      r.converged = true;
      break;
    }
  }
  finish(r, s, std::move(centroids));
  return r;
}

}  // namespace dirmix
