#include <doctest.h>

#include <algorithm>
#include <numeric>

#include "dirmix/matching.hpp"
#include "support.hpp"

using namespace dirmix;
using namespace testsupport;

namespace {

ClusterProfile profile_of(std::vector<Index> clusters, Eigen::MatrixXd means) {
  return {std::move(clusters), std::move(means)};
}

// Best profit over every injective map, by enumerating permutations of the classes.
double brute_force_profit(const ClusterProfile& p) {
  std::vector<Index> classes(static_cast<std::size_t>(p.n_classes()));
  std::iota(classes.begin(), classes.end(), 0);
  double best = -1.0;
  do {
    double total = 0.0;
    for (std::size_t r = 0; r < p.clusters.size(); ++r) total += p.means(static_cast<Index>(r), classes[r]);
    best = std::max(best, total);
  } while (std::next_permutation(classes.begin(), classes.end()));
  return best;
}

}  // namespace

TEST_CASE("identity profile maps each cluster to itself") {
  const auto m = match_clusters(profile_of({0, 1, 2}, Eigen::MatrixXd::Identity(3, 3)));
  CHECK(m.class_of_cluster == std::vector<Index>{0, 1, 2});
  CHECK(m.is_injective());
}

TEST_CASE("matching resolves an argmax collision") {
  Eigen::MatrixXd means(2, 3);
  means << 0.9, 0.1, 0.0, 0.8, 0.2, 0.0;
  const ClusterProfile p = profile_of({0, 1}, means);
  const auto argmax = argmax_assignment(p);
  CHECK(argmax.class_of_cluster == std::vector<Index>{0, 0, -1});
  CHECK_FALSE(argmax.is_injective());

  const auto matched = match_clusters(p);
  CHECK(matched.is_injective());
  CHECK(matched.class_of_cluster == std::vector<Index>{0, 1, -1});
  CHECK(std::abs(matched.profit(p) - 1.1) <= 1e-15);
}

TEST_CASE("3 x 4 profile against enumeration") {
  Eigen::MatrixXd means(3, 4);
  means << 0.1, 0.6, 0.2, 0.1,
           0.05, 0.7, 0.05, 0.2,
           0.4, 0.35, 0.05, 0.2;
  const ClusterProfile p = profile_of({0, 2, 3}, means);
  const auto m = match_clusters(p);
  CHECK(m.class_of_cluster[1] == -1);
  CHECK(m.is_injective());
  CHECK(std::abs(m.profit(p) - brute_force_profit(p)) <= 1e-12);
  CHECK(std::abs(m.profit(p) - 1.3) <= 1e-12);
}

TEST_CASE("random profiles reach the enumerated optimum") {
  for (int trial = 0; trial < 300; ++trial) {
    const Index k = 1 + static_cast<Index>(uniform(0, 6.999));
    const Index used = 1 + static_cast<Index>(uniform(0, k - 0.001));
    std::vector<Index> ids(static_cast<std::size_t>(k));
    std::iota(ids.begin(), ids.end(), 0);
    std::shuffle(ids.begin(), ids.end(), engine());
    ids.resize(static_cast<std::size_t>(used));
    std::sort(ids.begin(), ids.end());
    const ClusterProfile p = profile_of(ids, random_simplex_rows(used, k));
    const auto m = match_clusters(p);
    CHECK(m.is_injective());
    CHECK(m.profit(p) >= brute_force_profit(p) - 1e-12);
  }
}

TEST_CASE("matching is unchanged by positive scaling and shifts") {
  for (int trial = 0; trial < 50; ++trial) {
    const ClusterProfile p = profile_of({0, 1, 2, 3}, random_simplex_rows(4, 5));
    const ClusterProfile q = profile_of(p.clusters, (3.7 * p.means.array() + 0.25).matrix());
    CHECK(match_clusters(p).class_of_cluster == match_clusters(q).class_of_cluster);
  }
}

TEST_CASE("solve_assignment") {
  Eigen::MatrixXd cost(3, 3);
  cost << 4, 1, 3, 2, 0, 5, 3, 2, 2;
  CHECK(solve_assignment(cost) == std::vector<Index>{1, 0, 2});
  CHECK(solve_assignment(Eigen::MatrixXd(0, 3)).empty());
  CHECK_THROWS_AS(solve_assignment(Eigen::MatrixXd::Zero(3, 2)), DimensionError);
  cost(0, 0) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(solve_assignment(cost), DomainError);
}

TEST_CASE("cluster_profiles averages the members of each cluster") {
  Eigen::MatrixXd z(4, 2);
  z << 0.8, 0.2, 0.6, 0.4, 0.1, 0.9, 0.3, 0.7;
  const FeatureSet f = probability_features(z);
  const TaskInstance t = query_only_task(4, 2);
  Eigen::MatrixXd u(4, 2);
  u << 0.9, 0.1, 0.7, 0.3, 0.2, 0.8, 0.4, 0.6;
  const ClusterProfile p = cluster_profiles(f, t, {u, 0});
  CHECK(p.clusters == std::vector<Index>{0, 1});
  CHECK(p.means.row(0).isApprox(Eigen::RowVector2d(0.7, 0.3)));
  CHECK(p.means.row(1).isApprox(Eigen::RowVector2d(0.2, 0.8)));

  Eigen::MatrixXd all_first = Eigen::MatrixXd::Zero(4, 2);
  all_first.col(0).setOnes();
  const ClusterProfile one = cluster_profiles(f, t, {all_first, 0});
  CHECK(one.clusters == std::vector<Index>{0});
  CHECK(one.means.isApprox(Eigen::RowVector2d(0.45, 0.55)));
}

TEST_CASE("profile errors") {
  CHECK_THROWS_AS(match_clusters({}), ValidationError);
  CHECK_THROWS_AS(match_clusters(profile_of({5}, Eigen::MatrixXd::Constant(1, 3, 1.0 / 3))),
                  DimensionError);
  CHECK_THROWS_AS(argmax_assignment({}), ValidationError);
}
