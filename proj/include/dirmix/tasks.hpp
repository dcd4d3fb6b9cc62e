#pragma once

#include <cstdint>

#include "dirmix/core.hpp"
#include "dirmix/solvers.hpp"

namespace dirmix {

/// Draws a query set from a random number of effective classes; no support.
struct ZeroShotProtocol {
  Index query_size = 75;
  Index min_eff_classes = 3;
  Index max_eff_classes = 10;
  Index n_tasks = 1000;
  std::uint64_t seed = 0;

  void validate(Index n_classes) const;
};

/// s labelled shots for every class, query drawn from k_eff random classes.
struct FewShotProtocol {
  Index shots = 4;
  Index k_eff = 5;
  Index query_size = 75;
  Index n_tasks = 1000;
  std::uint64_t seed = 0;

  void validate(Index n_classes) const;
};

/// Attempts at drawing a feasible class set before sampling gives up.
inline constexpr int kMaxClassDraws = 100;

TaskInstance sample_zero_shot_task(const FeatureSet& features, const ZeroShotProtocol& protocol,
                                   Index task_index);
TaskInstance sample_few_shot_task(const FeatureSet& features, const FewShotProtocol& protocol,
                                  Index task_index);

/// n labelled rows: class c ~ proportions, z ~ Dirichlet(alpha_c) by normalised
/// gamma draws. `alphas` is K x K.
FeatureSet generate_synthetic_mixture(const DirichletParams& alphas,
                                      const ClassProportions& proportions, Index n,
                                      std::uint64_t seed);

enum class EvalMode {
  /// Clusters mapped to classes by the injective matching.
  Matched,
  /// Each cluster takes the argmax class of its mean profile.
  ArgmaxOnly,
  /// The row argmax is the class (few-shot).
  Supervised,
};

/// Predicted class of every query row.
std::vector<Index> predict_query_classes(const SolverResult& result, const FeatureSet& features,
                                         const TaskInstance& task, EvalMode mode);

/// Fraction of query rows whose prediction equals the label.
double evaluate_task(const SolverResult& result, const FeatureSet& features,
                     const TaskInstance& task, EvalMode mode);

/// Zero-shot default (5 / K) |Q|.
double zero_shot_lambda(Index n_classes, Index query_size);
/// Few-shot default (k_eff / K) |Q|.
double few_shot_lambda(Index n_classes, Index k_eff, Index query_size);

/// Number of distinct labels among the query rows.
Index effective_classes(const FeatureSet& features, const TaskInstance& task);

}  // namespace dirmix
