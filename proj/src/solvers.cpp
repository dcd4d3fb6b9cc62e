#include "dirmix/solvers.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace dirmix {

namespace {

void require_probability_task(const FeatureSet& features, const TaskInstance& task) {
  if (features.kind != ContentKind::SimplexProbabilities) {
    throw ValidationError("Dirichlet solvers need simplex probability features");
  }
  if (features.dim() != task.n_classes) {
    throw DimensionError("feature dimension " + std::to_string(features.dim()) +
                         " differs from the task's class count " + std::to_string(task.n_classes));
  }
  task.validate(features.n_samples());
}

IterateSnapshot snapshot(const SoftAssignment& u, const ClassProportions& pi,
                         const DirichletParams& params) {
  return {u.u, pi.pi, params.alphas};
}

}  // namespace

void SolverConfig::validate() const {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw ValidationError("lambda must be nonnegative and finite");
  }
  if (!(outer_eps > 0.0)) throw ValidationError("outer_eps must be positive");
  if (max_outer_iter < 0) throw ValidationError("max_outer_iter must be nonnegative");
  if (!(inner.eps > 0.0)) throw ValidationError("inner eps must be positive");
  if (!(kmeans_stiffness > 0.0)) throw ValidationError("kmeans stiffness must be positive");
}

std::vector<Index> SolverResult::hard_labels() const {
  std::vector<Index> out(static_cast<std::size_t>(assignment.u.rows()));
  for (Index n = 0; n < assignment.u.rows(); ++n) out[n] = argmax_lowest(assignment.u.row(n));
  return out;
}

Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& scores) {
  Eigen::MatrixXd out = scores.colwise() - scores.rowwise().maxCoeff();
  out = out.array().exp().matrix();
  out.array().colwise() /= out.rowwise().sum().array();
  return out;
}

Eigen::MatrixXd assignment_step(const Eigen::MatrixXd& query_log_density,
                                const ClassProportions& proportions, double lambda, bool hard) {
  const Index n_query = query_log_density.rows();
  if (n_query == 0) throw ValidationError("empty query set");
  if (proportions.pi.size() != query_log_density.cols()) {
    throw DimensionError("proportions length differs from class count");
  }
  const Eigen::RowVectorXd bias =
      (lambda / static_cast<double>(n_query)) *
      proportions.pi.array().max(kProportionFloor).log().matrix().transpose();
  Eigen::MatrixXd scores = query_log_density.rowwise() + bias;
  if (!hard) return softmax_rows(scores);
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(scores.rows(), scores.cols());
  for (Index n = 0; n < scores.rows(); ++n) out(n, argmax_lowest(scores.row(n))) = 1.0;
  return out;
}

SoftAssignment update_assignments(const FeatureSet& features, const TaskInstance& task,
                                  const DirichletParams& params, const ClassProportions& proportions,
                                  const SolverConfig& config) {
  if (task.n_query() == 0) throw ValidationError("empty query set");
  const Eigen::MatrixXd query = gather_task_rows(features.rows, task).bottomRows(task.n_query());
  const Eigen::MatrixXd log_density = dirichlet_log_density_matrix(clamped_log(query), params);
  return SoftAssignment::with_support(
      task, assignment_step(log_density, proportions, config.effective_lambda(),
                            config.effective_hard()));
}

ClassProportions update_proportions(const SoftAssignment& u, const TaskInstance& task) {
  if (task.n_query() == 0) throw ValidationError("empty query set");
  if (u.n_query() != task.n_query()) throw DimensionError("assignment rows do not match the task");
  return query_proportions(u);
}

SolverResult em_dirichlet(const FeatureSet& features, const TaskInstance& task,
                          const SolverConfig& config) {
  config.validate();
  require_probability_task(features, task);
  const Index k = task.n_classes;
  const Index n_query = task.n_query();
  const double lambda = config.effective_lambda();
  const bool hard = config.effective_hard();

  const Eigen::MatrixXd z = gather_task_rows(features.rows, task);
  const Eigen::MatrixXd log_z = clamped_log(z);

  SolverResult result;
  result.assignment = SoftAssignment::with_support(task, z.bottomRows(n_query));
  result.alphas = DirichletParams::ones(k, k);
  result.objective_trace.push_back(objective_from_log_density(
      result.assignment, dirichlet_log_density_matrix(log_z, result.alphas), lambda));

  for (int iter = 0; iter < config.max_outer_iter; ++iter) {
    DirichletParams next{result.alphas.alphas};
    for (Index c = 0; c < k; ++c) {
      const auto stats = DirichletStats::from(log_z, result.assignment.u.col(c));
      next.alphas.row(c) =
          fit_dirichlet(result.alphas.alphas.row(c).transpose(), stats, config.inner)
              .alpha.transpose();
    }
    result.proportions = update_proportions(result.assignment, task);

    const Eigen::MatrixXd log_density = dirichlet_log_density_matrix(log_z, next);
    result.assignment.query_block() =
        assignment_step(log_density.bottomRows(n_query), result.proportions, lambda, hard);

    const double change = relative_squared_change(next.alphas, result.alphas.alphas);
    result.alphas = std::move(next);
    result.outer_iterations = iter + 1;
    result.objective_trace.push_back(
        objective_from_log_density(result.assignment, log_density, lambda));
    if (config.record_history) {
      result.history.push_back(snapshot(result.assignment, result.proportions, result.alphas));
    }
    if (change <= config.outer_eps) {
      result.converged = true;
      break;
    }
  }
  result.proportions = query_proportions(result.assignment);
  return result;
}

double mixture_log_likelihood(const Eigen::MatrixXd& query_log_z, const DirichletParams& params,
                              const ClassProportions& proportions) {
  const Eigen::MatrixXd ld = dirichlet_log_density_matrix(query_log_z, params);
  double total = 0.0;
  for (Index n = 0; n < ld.rows(); ++n) {
    const double top = ld.row(n).maxCoeff();
    double s = 0.0;
    for (Index c = 0; c < ld.cols(); ++c) s += proportions.pi(c) * std::exp(ld(n, c) - top);
    total += top + std::log(s);
  }
  return total;
}

namespace {

// Responsibilities pi_k p(z_n | alpha_k) / sum_i pi_i p(z_n | alpha_i), in the
// product form of the mixture posterior.
Eigen::MatrixXd e_step(const Eigen::MatrixXd& log_z, const DirichletParams& params,
                       const ClassProportions& proportions) {
  const Eigen::MatrixXd ld = dirichlet_log_density_matrix(log_z, params);
  Eigen::MatrixXd r(ld.rows(), ld.cols());
  for (Index n = 0; n < ld.rows(); ++n) {
    const double top = ld.row(n).maxCoeff();
    for (Index c = 0; c < ld.cols(); ++c) r(n, c) = proportions.pi(c) * std::exp(ld(n, c) - top);
    r.row(n) /= r.row(n).sum();
  }
  return r;
}

SolverResult reference_em_loop(const Eigen::MatrixXd& log_z, DirichletParams params,
                               Eigen::MatrixXd responsibilities, const ReferenceEmOptions& options) {
  SolverResult result;
  const Index n_components = params.n_components();
  for (int iter = 0; iter < options.max_iter; ++iter) {
    // M-step.
    ClassProportions pi{responsibilities.colwise().mean().transpose()};
    DirichletParams next{params.alphas};
    for (Index c = 0; c < n_components; ++c) {
      const auto stats = DirichletStats::from(log_z, responsibilities.col(c));
      next.alphas.row(c) =
          fit_dirichlet(params.alphas.row(c).transpose(), stats, options.inner).alpha.transpose();
    }
    // E-step.
    responsibilities = e_step(log_z, next, pi);

    const double change = relative_squared_change(next.alphas, params.alphas);
    params = std::move(next);
    result.outer_iterations = iter + 1;
    result.proportions = pi;
    result.mixture_log_likelihood.push_back(mixture_log_likelihood(log_z, params, pi));
    if (options.record_history) result.history.push_back({responsibilities, pi.pi, params.alphas});
    if (change <= options.eps) {
      result.converged = true;
      break;
    }
  }
  result.assignment = SoftAssignment{std::move(responsibilities), 0};
  result.alphas = std::move(params);
  return result;
}

Eigen::MatrixXd reference_query_log_z(const FeatureSet& features, const TaskInstance& task,
                                      const DirichletParams& alphas_init) {
  if (features.kind != ContentKind::SimplexProbabilities) {
    throw ValidationError("Dirichlet mixture EM needs simplex probability features");
  }
  if (task.n_support() != 0) throw ValidationError("reference EM is defined for an empty support set");
  task.validate(features.n_samples());
  alphas_init.validate();
  if (alphas_init.alphas.cols() != features.dim()) {
    throw DimensionError("initial parameters do not match the feature dimension");
  }
  return clamped_log(gather_task_rows(features.rows, task));
}

}  // namespace

SolverResult em_dirichlet_mixture_reference(const FeatureSet& features, const TaskInstance& task,
                                            const DirichletParams& alphas_init,
                                            const Eigen::MatrixXd& responsibilities_init,
                                            const ReferenceEmOptions& options) {
  const Eigen::MatrixXd log_z = reference_query_log_z(features, task, alphas_init);
  if (responsibilities_init.rows() != task.n_query() ||
      responsibilities_init.cols() != alphas_init.n_components()) {
    throw DimensionError("initial responsibilities must be |Q| x components");
  }
  return reference_em_loop(log_z, alphas_init, responsibilities_init, options);
}

SolverResult em_dirichlet_mixture_reference(const FeatureSet& features, const TaskInstance& task,
                                            const DirichletParams& alphas_init,
                                            const ClassProportions& pi_init,
                                            const ReferenceEmOptions& options) {
  const Eigen::MatrixXd log_z = reference_query_log_z(features, task, alphas_init);
  if (pi_init.pi.size() != alphas_init.n_components()) {
    throw DimensionError("initial proportions must have one entry per component");
  }
  return reference_em_loop(log_z, alphas_init, e_step(log_z, alphas_init, pi_init), options);
}

SolverResult inductive(const FeatureSet& features, const TaskInstance& task) {
  task.validate(features.n_samples());
  const Eigen::MatrixXd init = gather_task_rows(features.simplex_rows(), task);
  if (init.cols() != task.n_classes) throw DimensionError("initial probabilities must be N x K");
  SolverResult result;
  result.assignment = SoftAssignment::with_support(task, init.bottomRows(task.n_query()));
  result.proportions = query_proportions(result.assignment);
  result.converged = true;
  return result;
}

namespace {

constexpr std::array<std::pair<Method, std::string_view>, 8> kMethodNames{{
    {Method::EmDirichlet, "em-dirichlet"},
    {Method::HardEmDirichlet, "hard-em-dirichlet"},
    {Method::HardKMeans, "hard-kmeans"},
    {Method::SoftKMeans, "soft-kmeans"},
    {Method::EmGaussianIdentity, "em-gaussian-id"},
    {Method::EmGaussianDiagonal, "em-gaussian-diag"},
    {Method::HardKlKMeans, "hard-kl-kmeans"},
    {Method::Inductive, "inductive"},
}};

}  // namespace

std::string_view method_name(Method m) {
  for (const auto& [method, name] : kMethodNames) {
    if (method == m) return name;
  }
  return "unknown";
}

std::optional<Method> parse_method(std::string_view name) {
  for (const auto& [method, n] : kMethodNames) {
    if (n == name) return method;
  }
  return std::nullopt;
}

const std::vector<Method>& all_methods() {
  static const std::vector<Method> methods = [] {
    std::vector<Method> out;
    for (const auto& entry : kMethodNames) out.push_back(entry.first);
    return out;
  }();
  return methods;
}

SolverResult run_method(Method method, const FeatureSet& features, const TaskInstance& task,
                        const SolverConfig& config) {
  switch (method) {
    case Method::EmDirichlet:
      return em_dirichlet(features, task, config);
    case Method::HardEmDirichlet: {
      SolverConfig hard = config;
      hard.hard_assignments = true;
      hard.use_barrier = false;
      return em_dirichlet(features, task, hard);
    }
    case Method::HardKMeans:
      return hard_kmeans(features, task, config);
    case Method::SoftKMeans:
      return soft_kmeans(features, task, config);
    case Method::EmGaussianIdentity:
      return em_gaussian(features, task, config, Covariance::Identity);
    case Method::EmGaussianDiagonal:
      return em_gaussian(features, task, config, Covariance::Diagonal);
    case Method::HardKlKMeans:
      return hard_kl_kmeans(features, task, config);
    case Method::Inductive:
      return inductive(features, task);
  }
  throw ValidationError("unknown method");
}

}  // namespace dirmix
