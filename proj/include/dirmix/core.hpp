#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "dirmix/errors.hpp"
#include "dirmix/specfun.hpp"

namespace dirmix {

using Index = Eigen::Index;

/// Lower clamp applied to feature entries before taking logarithms.
inline constexpr double kLogFeatureFloor = 1e-12;

enum class ContentKind : std::uint8_t {
  SimplexProbabilities = 1,
  RawEmbeddings = 2,
};

/// N feature vectors with optional labels. Probability content is row-stochastic
/// with one column per class; raw content has arbitrary dimension and may carry
/// initial class probabilities (used to seed clustering and to profile clusters).
struct FeatureSet {
  ContentKind kind = ContentKind::SimplexProbabilities;
  Eigen::MatrixXd rows;
  std::optional<std::vector<std::int32_t>> labels;
  std::vector<std::string> class_names;
  std::optional<Eigen::MatrixXd> init_probabilities;

  Index n_samples() const { return rows.rows(); }
  Index dim() const { return rows.cols(); }
  Index n_classes() const;
  bool has_labels() const { return labels.has_value(); }

  /// Row-stochastic N x K view used for initialisation and cluster profiles.
  const Eigen::MatrixXd& simplex_rows() const;

  /// Throws ValidationError when an invariant does not hold.
  void validate(double row_sum_tol = 1e-6) const;
};

/// One episode. Support labels are class ids; the one-hot matrix is derived.
struct TaskInstance {
  std::vector<Index> support_indices;
  std::vector<std::int32_t> support_labels;
  std::vector<Index> query_indices;
  Index n_classes = 0;

  Index n_support() const { return static_cast<Index>(support_indices.size()); }
  Index n_query() const { return static_cast<Index>(query_indices.size()); }
  Index n_rows() const { return n_support() + n_query(); }

  Eigen::MatrixXd support_one_hot() const;
  void validate(Index n_samples) const;
};

/// Features of a task gathered in task-row order: support rows, then query rows.
Eigen::MatrixXd gather_task_rows(const Eigen::MatrixXd& rows, const TaskInstance& task);

/// Elementwise ln(max(z, kLogFeatureFloor)).
template <typename Derived>
Eigen::MatrixXd clamped_log(const Eigen::MatrixBase<Derived>& z) {
  return z.derived().array().max(kLogFeatureFloor).log().matrix();
}

/// K x K positive Dirichlet parameters, row k is alpha_k.
struct DirichletParams {
  Eigen::MatrixXd alphas;

  static DirichletParams ones(Index n_components, Index dim) {
    return {Eigen::MatrixXd::Ones(n_components, dim)};
  }
  Index n_components() const { return alphas.rows(); }
  void validate() const;
};

/// Task-row assignments (support rows first, pinned to their labels).
struct SoftAssignment {
  Eigen::MatrixXd u;
  Index n_support = 0;

  Index n_query() const { return u.rows() - n_support; }
  auto query_block() const { return u.bottomRows(n_query()); }
  auto query_block() { return u.bottomRows(n_query()); }

  /// Support rows from the labels, query rows from `query_init`.
  static SoftAssignment with_support(const TaskInstance& task, const Eigen::MatrixXd& query_init);
  void validate(double tol = 1e-9) const;
};

struct ClassProportions {
  Eigen::VectorXd pi;
};

struct ObjectiveBreakdown {
  double neg_log_likelihood = 0.0;
  double barrier = 0.0;
  double mdl = 0.0;
  double lambda = 0.0;
  double total = 0.0;
};

/// ln p(z | alpha) for the Dirichlet density on the simplex.
template <typename DerivedZ, typename DerivedA>
double dirichlet_log_density(const Eigen::MatrixBase<DerivedZ>& z,
                             const Eigen::MatrixBase<DerivedA>& alpha) {
  if (z.size() != alpha.size()) {
    throw DimensionError("dirichlet_log_density: feature has " + std::to_string(z.size()) +
                         " entries, alpha has " + std::to_string(alpha.size()));
  }
  double value = 0.0;
  double alpha_sum = 0.0;
  for (Index i = 0; i < alpha.size(); ++i) {
    const double a = alpha(i);
    if (!(a > 0.0) || !std::isfinite(a)) {
      throw DomainError("dirichlet_log_density: alpha entries must be positive");
    }
    value += (a - 1.0) * std::log(std::max(static_cast<double>(z(i)), kLogFeatureFloor)) -
             ln_gamma(a);
    alpha_sum += a;
  }
  return value + ln_gamma(alpha_sum);
}

/// ln B(alpha_k)^{-1} for every row: lnGamma(sum alpha_k) - sum_i lnGamma(alpha_ki).
Eigen::VectorXd dirichlet_log_normalizers(const DirichletParams& params);

/// N x K matrix of ln p(z_n | alpha_k), from precomputed clamped logs.
Eigen::MatrixXd dirichlet_log_density_matrix(const Eigen::MatrixXd& log_z,
                                             const DirichletParams& params);

/// L(u, alpha) = sum over all task rows of sum_k u_nk ln p(z_n | alpha_k).
double log_likelihood(const SoftAssignment& u, const DirichletParams& params,
                      const FeatureSet& features, const TaskInstance& task);

/// Phi(u) = sum u ln u with 0 ln 0 = 0.
double barrier_phi(const SoftAssignment& u);

/// Query class proportions pi_k = mean_{n in Q} u_nk.
ClassProportions query_proportions(const SoftAssignment& u);

/// Psi(u) = -sum_k pi_k ln pi_k over the query proportions.
std::pair<double, ClassProportions> partition_psi(const SoftAssignment& u, const TaskInstance& task);

/// Entropy -sum p ln p with 0 ln 0 = 0.
double entropy(const Eigen::VectorXd& p);

ObjectiveBreakdown objective(const SoftAssignment& u, const DirichletParams& params,
                             const FeatureSet& features, const TaskInstance& task, double lambda);

/// Same as `objective`, from a precomputed log-density matrix over task rows.
ObjectiveBreakdown objective_from_log_density(const SoftAssignment& u,
                                              const Eigen::MatrixXd& log_density, double lambda);

}  // namespace dirmix
