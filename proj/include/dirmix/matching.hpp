#pragma once

#include <vector>

#include <Eigen/Core>

#include "dirmix/core.hpp"

namespace dirmix {

/// Non-empty clusters of a task and the mean class-probability profile of each.
struct ClusterProfile {
  std::vector<Index> clusters;
  /// One row per entry of `clusters`, each a point of the simplex.
  Eigen::MatrixXd means;

  Index n_classes() const { return means.cols(); }
};

/// Cluster-to-class map over all K cluster ids; -1 marks a cluster with no members.
struct ClusterClassMap {
  std::vector<Index> class_of_cluster;

  bool is_injective() const;
  /// Sum of profile means m_{k, class(k)} over the mapped clusters.
  double profit(const ClusterProfile& profile) const;
};

/// Groups the query rows by the argmax of their assignment and averages their
/// class probabilities.
ClusterProfile cluster_profiles(const FeatureSet& features, const TaskInstance& task,
                                const SoftAssignment& assignment);

/// Minimum-cost rectangular assignment (rows <= cols): every row gets a distinct
/// column. Shortest augmenting paths with dual potentials, O(rows^2 cols).
std::vector<Index> solve_assignment(const Eigen::MatrixXd& cost);

/// Injective cluster-to-class map maximizing the summed profile probability.
ClusterClassMap match_clusters(const ClusterProfile& profile);

/// Each cluster takes the class of its largest mean entry; collisions allowed.
ClusterClassMap argmax_assignment(const ClusterProfile& profile);

}  // namespace dirmix
