#include "dirmix/core.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

namespace dirmix {

namespace {

void require_row_stochastic(const Eigen::MatrixXd& m, double tol, const std::string& what) {
  for (Index n = 0; n < m.rows(); ++n) {
    if (!m.row(n).allFinite()) {
      throw ValidationError(what + ": row " + std::to_string(n) + " has non-finite entries");
    }
    if ((m.row(n).array() < 0.0).any()) {
      throw ValidationError(what + ": row " + std::to_string(n) + " has negative entries");
    }
    const double s = m.row(n).sum();
    if (std::abs(s - 1.0) > tol) {
      throw ValidationError(what + ": row " + std::to_string(n) + " sums to " + std::to_string(s));
    }
  }
}

double xlogx_sum(const Eigen::Ref<const Eigen::MatrixXd>& m) {
  double s = 0.0;
  for (Index j = 0; j < m.cols(); ++j) {
    for (Index i = 0; i < m.rows(); ++i) {
      const double v = m(i, j);
      if (v < 0.0) throw DomainError("negative assignment entry");
      if (v > 0.0) s += v * std::log(v);
    }
  }
  return s;
}

}  // namespace

Index FeatureSet::n_classes() const {
  if (kind == ContentKind::SimplexProbabilities) return dim();
  if (!class_names.empty()) return static_cast<Index>(class_names.size());
  if (init_probabilities) return init_probabilities->cols();
  if (labels && !labels->empty()) return *std::max_element(labels->begin(), labels->end()) + 1;
  return 0;
}

const Eigen::MatrixXd& FeatureSet::simplex_rows() const {
  if (kind == ContentKind::SimplexProbabilities) return rows;
  if (!init_probabilities) {
    throw ValidationError("raw embeddings need initial class probabilities for this operation");
  }
  return *init_probabilities;
}

void FeatureSet::validate(double row_sum_tol) const {
  const Index k = n_classes();
  if (kind == ContentKind::SimplexProbabilities) {
    if (!class_names.empty() && static_cast<Index>(class_names.size()) != dim()) {
      throw ValidationError("probability features have " + std::to_string(dim()) +
                            " columns but " + std::to_string(class_names.size()) +
                            " class names");
    }
    require_row_stochastic(rows, row_sum_tol, "probability features");
  } else if (!rows.allFinite()) {
    throw ValidationError("raw embeddings contain non-finite values");
  }
  if (init_probabilities) {
    if (init_probabilities->rows() != n_samples() || init_probabilities->cols() != k) {
      throw ValidationError("initial probabilities must be N x K");
    }
    require_row_stochastic(*init_probabilities, row_sum_tol, "initial probabilities");
  }
  if (labels) {
    if (static_cast<Index>(labels->size()) != n_samples()) {
      throw ValidationError("label count " + std::to_string(labels->size()) +
                            " differs from sample count " + std::to_string(n_samples()));
    }
    for (std::size_t n = 0; n < labels->size(); ++n) {
      const auto y = (*labels)[n];
      if (y < 0 || y >= k) {
        throw ValidationError("label " + std::to_string(y) + " at row " + std::to_string(n) +
                              " outside [0, " + std::to_string(k) + ")");
      }
    }
  }
}

Eigen::MatrixXd TaskInstance::support_one_hot() const {
  Eigen::MatrixXd y = Eigen::MatrixXd::Zero(n_support(), n_classes);
  for (Index s = 0; s < n_support(); ++s) y(s, support_labels[s]) = 1.0;
  return y;
}

void TaskInstance::validate(Index n_samples) const {
  if (query_indices.empty()) throw ValidationError("task has an empty query set");
  if (support_labels.size() != support_indices.size()) {
    throw ValidationError("support labels and indices differ in length");
  }
  std::unordered_set<Index> seen;
  auto check = [&](Index idx) {
    if (idx < 0 || idx >= n_samples) {
      throw ValidationError("task index " + std::to_string(idx) + " out of range");
    }
    if (!seen.insert(idx).second) {
      throw ValidationError("task index " + std::to_string(idx) + " appears twice");
    }
  };
  for (auto idx : support_indices) check(idx);
  for (auto idx : query_indices) check(idx);
  for (auto y : support_labels) {
    if (y < 0 || y >= n_classes) throw ValidationError("support label out of range");
  }
}

Eigen::MatrixXd gather_task_rows(const Eigen::MatrixXd& rows, const TaskInstance& task) {
  Eigen::MatrixXd out(task.n_rows(), rows.cols());
  Index r = 0;
  for (auto idx : task.support_indices) out.row(r++) = rows.row(idx);
  for (auto idx : task.query_indices) out.row(r++) = rows.row(idx);
  return out;
}

void DirichletParams::validate() const {
  if (!alphas.allFinite() || (alphas.array() <= 0.0).any()) {
    throw DomainError("Dirichlet parameters must be positive and finite");
  }
}

SoftAssignment SoftAssignment::with_support(const TaskInstance& task,
                                            const Eigen::MatrixXd& query_init) {
  if (query_init.rows() != task.n_query() || query_init.cols() != task.n_classes) {
    throw DimensionError("initial query assignment must be |Q| x K");
  }
  SoftAssignment a;
  a.n_support = task.n_support();
  a.u.resize(task.n_rows(), task.n_classes);
  a.u.topRows(a.n_support) = task.support_one_hot();
  a.u.bottomRows(task.n_query()) = query_init;
  return a;
}

void SoftAssignment::validate(double tol) const {
  require_row_stochastic(u, tol, "assignment");
}

Eigen::VectorXd dirichlet_log_normalizers(const DirichletParams& params) {
  params.validate();
  Eigen::VectorXd out(params.n_components());
  for (Index k = 0; k < params.n_components(); ++k) {
    double s = 0.0;
    for (Index i = 0; i < params.alphas.cols(); ++i) s += ln_gamma(params.alphas(k, i));
    out(k) = ln_gamma(params.alphas.row(k).sum()) - s;
  }
  return out;
}

Eigen::MatrixXd dirichlet_log_density_matrix(const Eigen::MatrixXd& log_z,
                                             const DirichletParams& params) {
  if (log_z.cols() != params.alphas.cols()) {
    throw DimensionError("feature dimension differs from Dirichlet dimension");
  }
  const Eigen::VectorXd norm = dirichlet_log_normalizers(params);
  Eigen::MatrixXd out = log_z * (params.alphas.array() - 1.0).matrix().transpose();
  out.rowwise() += norm.transpose();
  return out;
}

double log_likelihood(const SoftAssignment& u, const DirichletParams& params,
                      const FeatureSet& features, const TaskInstance& task) {
  if (u.u.rows() != task.n_rows() || u.u.cols() != params.n_components()) {
    throw DimensionError("assignment shape does not match task and parameters");
  }
  const Eigen::MatrixXd log_z = clamped_log(gather_task_rows(features.rows, task));
  return u.u.cwiseProduct(dirichlet_log_density_matrix(log_z, params)).sum();
}

double barrier_phi(const SoftAssignment& u) { return xlogx_sum(u.u); }

double entropy(const Eigen::VectorXd& p) { return -xlogx_sum(p); }

ClassProportions query_proportions(const SoftAssignment& u) {
  if (u.n_query() <= 0) throw ValidationError("empty query set");
  return {u.query_block().colwise().mean().transpose()};
}

std::pair<double, ClassProportions> partition_psi(const SoftAssignment& u,
                                                  const TaskInstance& task) {
  if (task.n_query() <= 0) throw ValidationError("empty query set");
  if (u.n_support != task.n_support() || u.n_query() != task.n_query()) {
    throw DimensionError("assignment rows do not match the task");
  }
  ClassProportions props = query_proportions(u);
  return {entropy(props.pi), std::move(props)};
}

ObjectiveBreakdown objective_from_log_density(const SoftAssignment& u,
                                              const Eigen::MatrixXd& log_density, double lambda) {
  if (lambda < 0.0) throw ValidationError("lambda must be nonnegative");
  ObjectiveBreakdown b;
  b.neg_log_likelihood = -u.u.cwiseProduct(log_density).sum();
  b.barrier = barrier_phi(u);
  b.mdl = entropy(query_proportions(u).pi);
  b.lambda = lambda;
  b.total = b.neg_log_likelihood + b.barrier + lambda * b.mdl;
  return b;
}

ObjectiveBreakdown objective(const SoftAssignment& u, const DirichletParams& params,
                             const FeatureSet& features, const TaskInstance& task, double lambda) {
  if (u.u.rows() != task.n_rows() || u.u.cols() != params.n_components()) {
    throw DimensionError("assignment shape does not match task and parameters");
  }
  const Eigen::MatrixXd log_z = clamped_log(gather_task_rows(features.rows, task));
  return objective_from_log_density(u, dirichlet_log_density_matrix(log_z, params), lambda);
}

}  // namespace dirmix
