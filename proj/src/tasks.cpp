#include "dirmix/tasks.hpp"

#include <algorithm>
#include <set>

#include "dirmix/matching.hpp"
#include "dirmix/random.hpp"

namespace dirmix {

namespace {

std::vector<std::vector<Index>> samples_by_class(const FeatureSet& features, Index n_classes) {
  if (!features.has_labels()) throw ValidationError("task sampling needs labelled features");
  const auto& labels = *features.labels;
  if (static_cast<Index>(labels.size()) != features.n_samples()) {
    throw DimensionError("label count differs from sample count");
  }
  std::vector<std::vector<Index>> out(static_cast<std::size_t>(n_classes));
  for (std::size_t n = 0; n < labels.size(); ++n) {
    if (labels[n] < 0 || labels[n] >= n_classes) {
      throw ValidationError("label " + std::to_string(labels[n]) + " at row " + std::to_string(n) +
                            " is outside [0, " + std::to_string(n_classes) + ")");
    }
    out[static_cast<std::size_t>(labels[n])].push_back(static_cast<Index>(n));
  }
  return out;
}

std::string class_label(const FeatureSet& features, Index c) {
  const auto i = static_cast<std::size_t>(c);
  if (i < features.class_names.size()) {
    return "'" + features.class_names[i] + "' (" + std::to_string(c) + ")";
  }
  return std::to_string(c);
}

std::vector<Index> draw_from(const std::vector<Index>& pool, Index count, Rng& rng) {
  const auto picks = rng.sample_without_replacement(pool.size(), static_cast<std::uint64_t>(count));
  std::vector<Index> out;
  out.reserve(picks.size());
  for (auto p : picks) out.push_back(pool[p]);
  return out;
}

}  // namespace

void ZeroShotProtocol::validate(Index n_classes) const {
  if (query_size < 1) throw ValidationError("query size must be at least 1");
  if (n_tasks < 0) throw ValidationError("task count must be nonnegative");
  if (min_eff_classes < 3 || min_eff_classes > max_eff_classes || max_eff_classes > n_classes) {
    throw ValidationError("effective class range [" + std::to_string(min_eff_classes) + ", " +
                          std::to_string(max_eff_classes) + "] must satisfy 3 <= min <= max <= " +
                          std::to_string(n_classes));
  }
}

void FewShotProtocol::validate(Index n_classes) const {
  if (query_size < 1) throw ValidationError("query size must be at least 1");
  if (n_tasks < 0) throw ValidationError("task count must be nonnegative");
  if (shots < 0) throw ValidationError("shots must be nonnegative");
  if (k_eff < 1 || k_eff > n_classes) {
    throw ValidationError("k_eff = " + std::to_string(k_eff) + " must lie in [1, " +
                          std::to_string(n_classes) + "]");
  }
}

TaskInstance sample_zero_shot_task(const FeatureSet& features, const ZeroShotProtocol& protocol,
                                   Index task_index) {
  const Index k = features.n_classes();
  protocol.validate(k);
  const auto by_class = samples_by_class(features, k);
  Rng rng = Rng::for_task(protocol.seed, static_cast<std::uint64_t>(task_index));

  for (int attempt = 0; attempt < kMaxClassDraws; ++attempt) {
    const Index span = protocol.max_eff_classes - protocol.min_eff_classes + 1;
    const Index n_eff =
        protocol.min_eff_classes + static_cast<Index>(rng.uniform_index(static_cast<std::uint64_t>(span)));
    const auto classes = rng.sample_without_replacement(static_cast<std::uint64_t>(k),
                                                        static_cast<std::uint64_t>(n_eff));
    std::vector<Index> pool;
    bool feasible = true;
    for (auto c : classes) {
      const auto& members = by_class[c];
      if (members.empty()) {
        feasible = false;
        break;
      }
      pool.insert(pool.end(), members.begin(), members.end());
    }
    if (!feasible || static_cast<Index>(pool.size()) < protocol.query_size) continue;

    TaskInstance task;
    task.n_classes = k;
    task.query_indices = draw_from(pool, protocol.query_size, rng);
    return task;
  }
  throw ValidationError("no feasible class set for a query of " +
                        std::to_string(protocol.query_size) + " rows after " +
                        std::to_string(kMaxClassDraws) + " draws (task " +
                        std::to_string(task_index) + ")");
}

TaskInstance sample_few_shot_task(const FeatureSet& features, const FewShotProtocol& protocol,
                                  Index task_index) {
  const Index k = features.n_classes();
  protocol.validate(k);
  auto by_class = samples_by_class(features, k);
  for (Index c = 0; c < k; ++c) {
    const auto available = static_cast<Index>(by_class[static_cast<std::size_t>(c)].size());
    if (available < protocol.shots) {
      throw ValidationError("class " + class_label(features, c) + " has " +
                            std::to_string(available) + " samples, fewer than " +
                            std::to_string(protocol.shots) + " shots");
    }
  }
  Rng rng = Rng::for_task(protocol.seed, static_cast<std::uint64_t>(task_index));

  TaskInstance task;
  task.n_classes = k;
  for (Index c = 0; c < k; ++c) {
    auto& members = by_class[static_cast<std::size_t>(c)];
    const auto shots = draw_from(members, protocol.shots, rng);
    task.support_indices.insert(task.support_indices.end(), shots.begin(), shots.end());
    task.support_labels.insert(task.support_labels.end(), shots.size(), static_cast<std::int32_t>(c));
    const std::set<Index> taken(shots.begin(), shots.end());
    std::erase_if(members, [&](Index n) { return taken.count(n) > 0; });
  }

  const auto classes = rng.sample_without_replacement(static_cast<std::uint64_t>(k),
                                                      static_cast<std::uint64_t>(protocol.k_eff));
  std::vector<Index> pool;
  for (auto c : classes) {
    const auto& members = by_class[c];
    if (members.empty()) {
      throw ValidationError("class " + class_label(features, static_cast<Index>(c)) +
                            " has no samples left for the query after taking its shots");
    }
    pool.insert(pool.end(), members.begin(), members.end());
  }
  if (static_cast<Index>(pool.size()) < protocol.query_size) {
    throw ValidationError("the drawn classes hold " + std::to_string(pool.size()) +
                          " samples after the support, fewer than the query size " +
                          std::to_string(protocol.query_size));
  }
  task.query_indices = draw_from(pool, protocol.query_size, rng);
  return task;
}

FeatureSet generate_synthetic_mixture(const DirichletParams& alphas,
                                      const ClassProportions& proportions, Index n,
                                      std::uint64_t seed) {
  alphas.validate();
  const Index k = alphas.n_components();
  if (alphas.alphas.cols() != k) throw DimensionError("synthetic parameters must be K x K");
  if (proportions.pi.size() != k) throw DimensionError("proportions must have K entries");
  if ((proportions.pi.array() < 0.0).any() || !proportions.pi.allFinite() ||
      std::abs(proportions.pi.sum() - 1.0) > 1e-9) {
    throw ValidationError("proportions must be a probability vector");
  }
  if (n < 1) throw ValidationError("sample count must be positive");

  Rng rng(seed);
  FeatureSet out;
  out.kind = ContentKind::SimplexProbabilities;
  out.rows.resize(n, k);
  out.labels.emplace(static_cast<std::size_t>(n));
  for (Index c = 0; c < k; ++c) out.class_names.push_back("class_" + std::to_string(c));

  for (Index row = 0; row < n; ++row) {
    const double u = rng.uniform();
    Index c = 0;
    double cumulative = proportions.pi(0);
    while (c + 1 < k && (u >= cumulative || proportions.pi(c) == 0.0)) {
      ++c;
      cumulative += proportions.pi(c);
    }
    double total = 0.0;
    do {
      total = 0.0;
      for (Index i = 0; i < k; ++i) {
        out.rows(row, i) = rng.gamma(alphas.alphas(c, i));
        total += out.rows(row, i);
      }
    } while (!(total > 0.0));
    out.rows.row(row) /= total;
    (*out.labels)[static_cast<std::size_t>(row)] = static_cast<std::int32_t>(c);
  }
  return out;
}

std::vector<Index> predict_query_classes(const SolverResult& result, const FeatureSet& features,
                                         const TaskInstance& task, EvalMode mode) {
  const auto query = result.assignment.query_block();
  if (query.rows() != task.n_query()) throw DimensionError("assignment rows do not match the task");
  std::vector<Index> clusters(static_cast<std::size_t>(query.rows()));
  for (Index n = 0; n < query.rows(); ++n) clusters[n] = argmax_lowest(query.row(n));
  if (mode == EvalMode::Supervised) return clusters;

  const ClusterProfile profile = cluster_profiles(features, task, result.assignment);
  const ClusterClassMap map =
      mode == EvalMode::Matched ? match_clusters(profile) : argmax_assignment(profile);
  for (auto& c : clusters) c = map.class_of_cluster[static_cast<std::size_t>(c)];
  return clusters;
}

double evaluate_task(const SolverResult& result, const FeatureSet& features,
                     const TaskInstance& task, EvalMode mode) {
  if (!features.has_labels()) throw ValidationError("evaluation needs ground-truth labels");
  const auto predicted = predict_query_classes(result, features, task, mode);
  const auto& labels = *features.labels;
  Index correct = 0;
  for (std::size_t n = 0; n < predicted.size(); ++n) {
    if (predicted[n] == labels[static_cast<std::size_t>(task.query_indices[n])]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(predicted.size());
}

double zero_shot_lambda(Index n_classes, Index query_size) {
  return 5.0 / static_cast<double>(n_classes) * static_cast<double>(query_size);
}

double few_shot_lambda(Index n_classes, Index k_eff, Index query_size) {
  return static_cast<double>(k_eff) / static_cast<double>(n_classes) *
         static_cast<double>(query_size);
}

Index effective_classes(const FeatureSet& features, const TaskInstance& task) {
  if (!features.has_labels()) throw ValidationError("effective class count needs labels");
  std::set<std::int32_t> seen;
  for (Index n : task.query_indices) seen.insert((*features.labels)[static_cast<std::size_t>(n)]);
  return static_cast<Index>(seen.size());
}

}  // namespace dirmix
