#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "dirmix/core.hpp"
#include "dirmix/dirichlet_mle.hpp"

namespace dirmix {

/// Floor applied to class proportions before ln pi in the assignment update.
inline constexpr double kProportionFloor = 1e-12;
/// Per-dimension variance floor of the diagonal Gaussian baseline.
inline constexpr double kVarianceFloor = 1e-6;

struct SolverConfig {
  double lambda = 0.0;
  int max_outer_iter = 1000;
  /// Outer stopping rule on the relative squared change of the parameters.
  double outer_eps = 1e-13;
  bool hard_assignments = false;
  bool use_barrier = true;
  bool use_mdl = true;
  /// Budget of the per-class Dirichlet fit inside each outer iteration.
  MmOptions inner{};
  /// Stiffness of soft K-means, responsibilities ~ exp(-stiffness ||x - m||^2).
  double kmeans_stiffness = 1.0;
  bool record_history = false;

  double effective_lambda() const { return use_mdl ? lambda : 0.0; }
  /// Dropping the barrier turns the assignment step into a linear program on
  /// the simplex, whose solutions are vertices.
  bool effective_hard() const { return hard_assignments || !use_barrier; }
  void validate() const;
};

struct IterateSnapshot {
  Eigen::MatrixXd u;
  Eigen::VectorXd pi;
  Eigen::MatrixXd params;
};

struct SolverResult {
  SoftAssignment assignment;
  /// Dirichlet parameters, one row per class (Dirichlet solvers only).
  DirichletParams alphas;
  /// Cluster centres, one row per class (baselines only).
  Eigen::MatrixXd centroids;
  ClassProportions proportions;
  std::vector<ObjectiveBreakdown> objective_trace;
  int outer_iterations = 0;
  bool converged = false;
  /// Filled when SolverConfig::record_history is set: state after each outer iteration.
  std::vector<IterateSnapshot> history;
  /// Mixture log-likelihood per iteration, reference EM only.
  std::vector<double> mixture_log_likelihood;

  /// Hard label per task row, argmax of the assignment (lowest index on ties).
  std::vector<Index> hard_labels() const;
};

/// Index of the largest entry; the lowest index wins ties.
template <typename Derived>
Index argmax_lowest(const Eigen::DenseBase<Derived>& v) {
  Index best = 0;
  for (Index i = 1; i < v.size(); ++i) {
    if (v(i) > v(best)) best = i;
  }
  return best;
}

/// Row-wise softmax with max subtraction.
Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& scores);

/// Query-row update u_n = softmax(ln p(z_n | alpha_k) + lambda / |Q| ln pi_k),
/// or the one-hot argmax of the same scores in hard mode. Support rows are
/// copied from the task labels.
SoftAssignment update_assignments(const FeatureSet& features, const TaskInstance& task,
                                  const DirichletParams& params, const ClassProportions& proportions,
                                  const SolverConfig& config);

/// Same update from query-row log-densities (|Q| x K).
Eigen::MatrixXd assignment_step(const Eigen::MatrixXd& query_log_density,
                                const ClassProportions& proportions, double lambda,
                                bool hard);

ClassProportions update_proportions(const SoftAssignment& u, const TaskInstance& task);

/// Block majorize-minimize over (alpha, pi, u). Initial query assignments are
/// the feature probabilities, alpha starts at all ones.
SolverResult em_dirichlet(const FeatureSet& features, const TaskInstance& task,
                          const SolverConfig& config);

struct ReferenceEmOptions {
  int max_iter = 1000;
  double eps = 1e-13;
  MmOptions inner{};
  bool record_history = false;
};

/// Classical EM for a Dirichlet mixture on the query set (no support). The
/// first overload starts with an E-step from (alphas, pi); the second starts
/// from given responsibilities, matching em_dirichlet's initialisation.
/// The number of components is alphas_init.rows() and may differ from K.
SolverResult em_dirichlet_mixture_reference(const FeatureSet& features, const TaskInstance& task,
                                            const DirichletParams& alphas_init,
                                            const ClassProportions& pi_init,
                                            const ReferenceEmOptions& options = {});
SolverResult em_dirichlet_mixture_reference(const FeatureSet& features, const TaskInstance& task,
                                            const DirichletParams& alphas_init,
                                            const Eigen::MatrixXd& responsibilities_init,
                                            const ReferenceEmOptions& options = {});

/// sum_{n in Q} ln sum_k pi_k p(z_n | alpha_k).
double mixture_log_likelihood(const Eigen::MatrixXd& query_log_z, const DirichletParams& params,
                              const ClassProportions& proportions);

enum class Covariance { Identity, Diagonal };

// Baselines. All start from the task's initial class probabilities and keep the
// support rows pinned; a cluster left without mass keeps its previous centroid.
SolverResult hard_kmeans(const FeatureSet& features, const TaskInstance& task,
                         const SolverConfig& config);
SolverResult soft_kmeans(const FeatureSet& features, const TaskInstance& task,
                         const SolverConfig& config);
SolverResult em_gaussian(const FeatureSet& features, const TaskInstance& task,
                         const SolverConfig& config, Covariance covariance);
/// Hard assignments under KL(z_n || m_k) with weighted-mean centroids.
SolverResult hard_kl_kmeans(const FeatureSet& features, const TaskInstance& task,
                            const SolverConfig& config);
/// No transduction: the assignment is the initial class probabilities.
SolverResult inductive(const FeatureSet& features, const TaskInstance& task);

enum class Method {
  EmDirichlet,
  HardEmDirichlet,
  HardKMeans,
  SoftKMeans,
  EmGaussianIdentity,
  EmGaussianDiagonal,
  HardKlKMeans,
  Inductive,
};

std::string_view method_name(Method m);
std::optional<Method> parse_method(std::string_view name);
const std::vector<Method>& all_methods();

/// Dispatches to the solver. HardEmDirichlet forces hard assignments and drops
/// the barrier; the other flags of `config` are honoured as given.
SolverResult run_method(Method method, const FeatureSet& features, const TaskInstance& task,
                        const SolverConfig& config);

}  // namespace dirmix
