#include "dirmix/matching.hpp"

#include <limits>
#include <set>

#include "dirmix/solvers.hpp"

namespace dirmix {

bool ClusterClassMap::is_injective() const {
  std::set<Index> seen;
  for (Index c : class_of_cluster) {
    if (c < 0) continue;
    if (!seen.insert(c).second) return false;
  }
  return true;
}

double ClusterClassMap::profit(const ClusterProfile& profile) const {
  double total = 0.0;
  for (std::size_t r = 0; r < profile.clusters.size(); ++r) {
    const auto k = static_cast<std::size_t>(profile.clusters[r]);
    if (k >= class_of_cluster.size() || class_of_cluster[k] < 0) continue;
    total += profile.means(static_cast<Index>(r), class_of_cluster[k]);
  }
  return total;
}

ClusterProfile cluster_profiles(const FeatureSet& features, const TaskInstance& task,
                                const SoftAssignment& assignment) {
  task.validate(features.n_samples());
  if (assignment.u.rows() != task.n_rows() || assignment.n_support != task.n_support()) {
    throw DimensionError("assignment rows do not match the task");
  }
  const Index k = assignment.u.cols();
  const Eigen::MatrixXd z =
      gather_task_rows(features.simplex_rows(), task).bottomRows(task.n_query());
  const auto query = assignment.query_block();

  Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, z.cols());
  std::vector<Index> counts(static_cast<std::size_t>(k), 0);
  for (Index n = 0; n < query.rows(); ++n) {
    const Index c = argmax_lowest(query.row(n));
    sums.row(c) += z.row(n);
    ++counts[static_cast<std::size_t>(c)];
  }

  ClusterProfile profile;
  for (Index c = 0; c < k; ++c) {
    if (counts[static_cast<std::size_t>(c)] > 0) profile.clusters.push_back(c);
  }
  profile.means.resize(static_cast<Index>(profile.clusters.size()), z.cols());
  for (std::size_t r = 0; r < profile.clusters.size(); ++r) {
    const Index c = profile.clusters[r];
    profile.means.row(static_cast<Index>(r)) =
        sums.row(c) / static_cast<double>(counts[static_cast<std::size_t>(c)]);
  }
  return profile;
}

std::vector<Index> solve_assignment(const Eigen::MatrixXd& cost) {
  const Index n = cost.rows();
  const Index m = cost.cols();
  if (n > m) {
    throw DimensionError("assignment needs rows <= cols, got " + std::to_string(n) + " x " +
                         std::to_string(m));
  }
  if (!cost.allFinite()) throw DomainError("assignment costs must be finite");

  // 1-based potentials; column 0 is the virtual source of each augmenting path.
  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(static_cast<std::size_t>(n + 1), 0.0);
  std::vector<double> v(static_cast<std::size_t>(m + 1), 0.0);
  std::vector<Index> owner(static_cast<std::size_t>(m + 1), 0);
  std::vector<Index> way(static_cast<std::size_t>(m + 1), 0);

  for (Index i = 1; i <= n; ++i) {
    owner[0] = i;
    Index j0 = 0;
    std::vector<double> min_slack(static_cast<std::size_t>(m + 1), inf);
    std::vector<char> used(static_cast<std::size_t>(m + 1), 0);
    do {
      used[j0] = 1;
      const Index i0 = owner[j0];
      double delta = inf;
      Index j1 = 0;
      for (Index j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double slack = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (slack < min_slack[j]) {
          min_slack[j] = slack;
          way[j] = j0;
        }
        if (min_slack[j] < delta) {
          delta = min_slack[j];
          j1 = j;
        }
      }
      for (Index j = 0; j <= m; ++j) {
        if (used[j]) {
          u[owner[j]] += delta;
          v[j] -= delta;
        } else {
          min_slack[j] -= delta;
        }
      }
      j0 = j1;
    } while (owner[j0] != 0);
    do {
      const Index j1 = way[j0];
      owner[j0] = owner[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  std::vector<Index> row_to_col(static_cast<std::size_t>(n), -1);
  for (Index j = 1; j <= m; ++j) {
    if (owner[j] != 0) row_to_col[owner[j] - 1] = j - 1;
  }
  return row_to_col;
}

namespace {

ClusterClassMap empty_map(const ClusterProfile& profile) {
  if (profile.clusters.empty()) throw ValidationError("cluster profile has no clusters");
  const Index k = profile.n_classes();
  for (Index c : profile.clusters) {
    if (c < 0 || c >= k) throw DimensionError("cluster id out of range");
  }
  return {std::vector<Index>(static_cast<std::size_t>(k), -1)};
}

}  // namespace

ClusterClassMap match_clusters(const ClusterProfile& profile) {
  ClusterClassMap map = empty_map(profile);
  const std::vector<Index> cols = solve_assignment(-profile.means);
  for (std::size_t r = 0; r < cols.size(); ++r) {
    map.class_of_cluster[static_cast<std::size_t>(profile.clusters[r])] = cols[r];
  }
  return map;
}

ClusterClassMap argmax_assignment(const ClusterProfile& profile) {
  ClusterClassMap map = empty_map(profile);
  for (std::size_t r = 0; r < profile.clusters.size(); ++r) {
    map.class_of_cluster[static_cast<std::size_t>(profile.clusters[r])] =
        argmax_lowest(profile.means.row(static_cast<Index>(r)));
  }
  return map;
}

}  // namespace dirmix
