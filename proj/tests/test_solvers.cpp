#include <doctest.h>

#include <algorithm>
#include <numeric>

#include "dirmix/solvers.hpp"
#include "support.hpp"

using namespace dirmix;
using namespace testsupport;

namespace {

struct Synthetic {
  FeatureSet features;
  std::vector<Index> labels;
};

Synthetic mixture(const Eigen::MatrixXd& alphas, Index n) {
  Synthetic s;
  const Index k = alphas.rows();
  Eigen::MatrixXd rows(n, k);
  for (Index i = 0; i < n; ++i) {
    const Index c = static_cast<Index>(uniform(0.0, static_cast<double>(k)));
    s.labels.push_back(std::min(c, k - 1));
    rows.row(i) = dirichlet_rows(alphas.row(s.labels.back()).transpose(), 1);
  }
  s.features = probability_features(rows);
  return s;
}

Eigen::MatrixXd separated_alphas() {
  return (Eigen::MatrixXd(3, 3) << 20, 2, 2, 2, 20, 2, 2, 2, 20).finished();
}

// Best accuracy over all relabelings of the clusters.
double best_permutation_accuracy(const std::vector<Index>& predicted, const std::vector<Index>& truth,
                                 Index k) {
  std::vector<Index> perm(static_cast<std::size_t>(k));
  std::iota(perm.begin(), perm.end(), 0);
  double best = 0.0;
  do {
    Index correct = 0;
    for (std::size_t n = 0; n < truth.size(); ++n) correct += perm[predicted[n]] == truth[n];
    best = std::max(best, static_cast<double>(correct) / truth.size());
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

SolverConfig full_config(double lambda) {
  SolverConfig c;
  c.lambda = lambda;
  return c;
}

}  // namespace

TEST_CASE("assignment_step examples") {
  const ClassProportions uniform_pi{Eigen::Vector3d::Constant(1.0 / 3)};
  const Eigen::MatrixXd equal = Eigen::MatrixXd::Constant(2, 3, -4.2);
  CHECK(assignment_step(equal, uniform_pi, 10.0, false).isApprox(Eigen::MatrixXd::Constant(2, 3, 1.0 / 3)));

  for (int trial = 0; trial < 50; ++trial) {
    const double a = uniform(-50, 50), b = uniform(-50, 50);
    const Eigen::MatrixXd ld = (Eigen::MatrixXd(1, 2) << a, b).finished();
    const ClassProportions pi{Eigen::Vector2d(uniform(0, 1), 0.5)};
    const Eigen::MatrixXd u = assignment_step(ld, pi, 0.0, false);
    const double s = 1.0 / (1.0 + std::exp(-(a - b)));
    CHECK(std::abs(u(0, 0) - s) <= 1e-12);
    CHECK(std::abs(u(0, 1) - (1.0 - s)) <= 1e-12);
  }
  const Eigen::MatrixXd ld = (Eigen::MatrixXd(1, 2) << 1.0, 0.5).finished();
  CHECK(assignment_step(ld, {Eigen::Vector2d(0.5, 0.5)}, 0.0, true) == Eigen::RowVector2d(1, 0));
  // Ties go to the lowest index.
  CHECK(assignment_step(equal, uniform_pi, 0.0, true).col(0).isOnes());
}

TEST_CASE("assignment_step uses lambda / |Q| ln pi with a floor on pi") {
  const Eigen::MatrixXd ld = Eigen::MatrixXd::Zero(4, 2);
  const ClassProportions pi{Eigen::Vector2d(0.8, 0.2)};
  const Eigen::MatrixXd u = assignment_step(ld, pi, 8.0, false);
  // Scores 2 ln 0.8 and 2 ln 0.2.
  CHECK(std::abs(u(0, 0) - 0.64 / (0.64 + 0.04)) <= 1e-12);

  const ClassProportions empty_class{Eigen::Vector2d(1.0, 0.0)};
  const Eigen::MatrixXd v = assignment_step(ld, empty_class, 4.0, false);
  CHECK(v.allFinite());
  CHECK(std::abs(v(0, 1) - 1e-12 / (1.0 + 1e-12)) <= 1e-20);
  CHECK_THROWS_AS(assignment_step(Eigen::MatrixXd(0, 2), pi, 1.0, false), ValidationError);
  CHECK_THROWS_AS(assignment_step(ld, {Eigen::Vector3d::Ones()}, 1.0, false), DimensionError);
}

TEST_CASE("update_assignments keeps support rows and the simplex") {
  const FeatureSet f = probability_features(random_simplex_rows(10, 3));
  TaskInstance t;
  t.n_classes = 3;
  t.support_indices = {0, 1};
  t.support_labels = {2, 1};
  t.query_indices = {2, 3, 4, 5, 6};
  DirichletParams p{Eigen::MatrixXd(3, 3)};
  for (Index k = 0; k < 3; ++k) p.alphas.row(k) = random_positive(3, 0.5, 10).transpose();
  for (bool hard : {false, true}) {
    SolverConfig c = full_config(5.0);
    c.hard_assignments = hard;
    const auto u = update_assignments(f, t, p, {Eigen::Vector3d(0.2, 0.3, 0.5)}, c);
    CHECK(u.u.topRows(2) == t.support_one_hot());
    CHECK_NOTHROW(u.validate(1e-12));
  }
}

TEST_CASE("update_proportions examples") {
  const TaskInstance t = query_only_task(5, 3);
  Eigen::MatrixXd u = Eigen::MatrixXd::Zero(5, 3);
  u.col(0).setOnes();
  CHECK(update_proportions({u, 0}, t).pi == Eigen::Vector3d(1, 0, 0));
  CHECK(update_proportions({Eigen::MatrixXd::Constant(5, 3, 1.0 / 3), 0}, t).pi.isApprox(
      Eigen::Vector3d::Constant(1.0 / 3)));
  u << 1, 0, 0, 0.5, 0.25, 0.25, 0, 0, 1, 0.1, 0.6, 0.3, 0.2, 0.2, 0.6;
  const Eigen::Vector3d oracle(1.8 / 5, 1.05 / 5, 2.15 / 5);
  CHECK((update_proportions({u, 0}, t).pi - oracle).cwiseAbs().maxCoeff() <= 1e-12);

  TaskInstance empty;
  empty.n_classes = 3;
  CHECK_THROWS_AS(update_proportions({Eigen::MatrixXd(0, 3), 0}, empty), ValidationError);
}

TEST_CASE("em_dirichlet clusters a separated mixture") {
  engine(77);
  const Synthetic s = mixture(separated_alphas(), 75);
  const TaskInstance t = query_only_task(75, 3);
  for (bool hard : {false, true}) {
    SolverConfig c = full_config(5.0 / 3.0 * 75);
    c.hard_assignments = hard;
    c.use_barrier = !hard;
    const SolverResult r = em_dirichlet(s.features, t, c);
    CHECK(best_permutation_accuracy(r.hard_labels(), s.labels, 3) >= 0.95);
    CHECK(r.converged);
  }
}

TEST_CASE("em_dirichlet on identical query features") {
  const Eigen::RowVector3d z(0.5, 0.3, 0.2);
  const FeatureSet f = probability_features(z.replicate(12, 1));
  const SolverResult r = em_dirichlet(f, query_only_task(12, 3), full_config(20.0));
  for (Index n = 1; n < 12; ++n) CHECK((r.assignment.u.row(n) - r.assignment.u.row(0)).norm() <= 1e-12);
}

TEST_CASE("em_dirichlet few-shot support rows equal their labels") {
  engine(5);
  const Synthetic s = mixture(separated_alphas(), 40);
  TaskInstance t;
  t.n_classes = 3;
  for (Index n = 0; n < 6; ++n) {
    t.support_indices.push_back(n);
    t.support_labels.push_back(static_cast<std::int32_t>(s.labels[n]));
  }
  for (Index n = 6; n < 40; ++n) t.query_indices.push_back(n);
  SolverConfig c = full_config(25.0);
  c.record_history = true;
  const SolverResult r = em_dirichlet(s.features, t, c);
  CHECK(r.assignment.u.topRows(6) == t.support_one_hot());
  for (const auto& h : r.history) {
    CHECK(h.u.topRows(6) == t.support_one_hot());
    CHECK_NOTHROW(SoftAssignment{h.u, 6}.validate(1e-9));
  }
}

TEST_CASE("full objective is non-increasing") {
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::MatrixXd alphas(4, 4);
    for (Index k = 0; k < 4; ++k) alphas.row(k) = random_positive(4, 0.5, 15.0).transpose();
    const Synthetic s = mixture(alphas, 50);
    SolverConfig c = full_config(uniform(0.0, 100.0));
    c.max_outer_iter = 200;
    const SolverResult r = em_dirichlet(s.features, query_only_task(50, 4), c);
    for (std::size_t i = 1; i < r.objective_trace.size(); ++i) {
      const double prev = r.objective_trace[i - 1].total;
      CHECK(r.objective_trace[i].total <= prev + 1e-8 * std::max(1.0, std::abs(prev)));
    }
  }
}

TEST_CASE("hard mode produces one-hot rows") {
  engine(8);
  const Synthetic s = mixture(separated_alphas(), 30);
  SolverConfig c = full_config(50.0);
  c.use_barrier = false;
  CHECK(c.effective_hard());
  const SolverResult r = em_dirichlet(s.features, query_only_task(30, 3), c);
  for (Index n = 0; n < 30; ++n) {
    CHECK(r.assignment.u.row(n).maxCoeff() == 1.0);
    CHECK(r.assignment.u.row(n).sum() == 1.0);
  }
  SolverConfig no_mdl = full_config(50.0);
  no_mdl.use_mdl = false;
  CHECK(no_mdl.effective_lambda() == 0.0);
}

TEST_CASE("permuting classes permutes the result") {
  engine(31);
  Eigen::MatrixXd alphas(4, 4);
  for (Index k = 0; k < 4; ++k) alphas.row(k) = random_positive(4, 1.0, 12.0).transpose();
  const Synthetic s = mixture(alphas, 40);
  const std::vector<Index> perm = {2, 0, 3, 1};
  FeatureSet permuted = s.features;
  for (Index j = 0; j < 4; ++j) permuted.rows.col(j) = s.features.rows.col(perm[j]);

  const TaskInstance t = query_only_task(40, 4);
  const SolverConfig c = full_config(30.0);
  const SolverResult a = em_dirichlet(s.features, t, c);
  const SolverResult b = em_dirichlet(permuted, t, c);
  for (Index j = 0; j < 4; ++j) {
    CHECK((b.assignment.u.col(j) - a.assignment.u.col(perm[j])).cwiseAbs().maxCoeff() <= 1e-8);
  }
}

TEST_CASE("em_dirichlet input errors") {
  const FeatureSet f = probability_features(random_simplex_rows(6, 3));
  TaskInstance wrong_k = query_only_task(6, 4);
  CHECK_THROWS_AS(em_dirichlet(f, wrong_k, full_config(1.0)), DimensionError);
  TaskInstance out_of_range = query_only_task(7, 3);
  CHECK_THROWS_AS(em_dirichlet(f, out_of_range, full_config(1.0)), ValidationError);
  CHECK_THROWS_AS(em_dirichlet(f, query_only_task(6, 3), full_config(-1.0)), ValidationError);
  FeatureSet raw = f;
  raw.kind = ContentKind::RawEmbeddings;
  raw.init_probabilities = f.rows;
  CHECK_THROWS_AS(em_dirichlet(raw, query_only_task(6, 3), full_config(1.0)), ValidationError);
}

TEST_CASE("EM-Dirichlet with lambda = |Q| reproduces mixture EM") {
  for (int seed = 0; seed < 5; ++seed) {
    engine(1000 + seed);
    Eigen::MatrixXd alphas(3, 3);
    for (Index k = 0; k < 3; ++k) alphas.row(k) = random_positive(3, 1.0, 20.0).transpose();
    const Synthetic s = mixture(alphas, 60);
    const TaskInstance t = query_only_task(60, 3);
    SolverConfig c = full_config(60.0);
    c.record_history = true;
    c.max_outer_iter = 50;
    const SolverResult ours = em_dirichlet(s.features, t, c);

    ReferenceEmOptions o;
    o.record_history = true;
    o.max_iter = 50;
    const SolverResult ref = em_dirichlet_mixture_reference(s.features, t, DirichletParams::ones(3, 3),
                                                            s.features.rows, o);
    REQUIRE(ours.history.size() == ref.history.size());
    for (std::size_t i = 0; i < ours.history.size(); ++i) {
      CHECK((ours.history[i].u - ref.history[i].u).cwiseAbs().maxCoeff() <= 1e-8);
      CHECK((ours.history[i].pi - ref.history[i].pi).cwiseAbs().maxCoeff() <= 1e-8);
      CHECK((ours.history[i].params - ref.history[i].params).cwiseAbs().maxCoeff() <=
            1e-8 * std::max(1.0, ref.history[i].params.cwiseAbs().maxCoeff()));
    }
  }
}

TEST_CASE("mixture EM with one component is a single fit") {
  const Eigen::MatrixXd z = dirichlet_rows(Eigen::Vector3d(4, 2, 6), 200);
  const FeatureSet f = probability_features(z);
  const TaskInstance t = query_only_task(200, 3);
  const SolverResult r = em_dirichlet_mixture_reference(f, t, {Eigen::MatrixXd::Ones(1, 3)},
                                                        ClassProportions{Eigen::VectorXd::Ones(1)});
  CHECK(r.proportions.pi(0) == 1.0);
  const auto fit = fit_dirichlet(Eigen::Vector3d::Ones(), WeightedSample{clamped_log(z), Eigen::VectorXd::Ones(200)});
  // The first M-step is already the full single-component fit; later ones restart from it.
  CHECK((r.alphas.alphas.row(0).transpose() - fit.alpha).norm() <= 1e-6 * fit.alpha.norm());
}

TEST_CASE("mixture EM log-likelihood is non-decreasing") {
  for (int trial = 0; trial < 10; ++trial) {
    Eigen::MatrixXd alphas(3, 3);
    for (Index k = 0; k < 3; ++k) alphas.row(k) = random_positive(3, 1.0, 20.0).transpose();
    const Synthetic s = mixture(alphas, 60);
    ReferenceEmOptions o;
    o.max_iter = 100;
    const SolverResult r = em_dirichlet_mixture_reference(
        s.features, query_only_task(60, 3), DirichletParams::ones(3, 3),
        ClassProportions{Eigen::Vector3d(0.5, 0.3, 0.2)}, o);
    for (std::size_t i = 1; i < r.mixture_log_likelihood.size(); ++i) {
      const double prev = r.mixture_log_likelihood[i - 1];
      CHECK(r.mixture_log_likelihood[i] >= prev - 1e-8 * std::max(1.0, std::abs(prev)));
    }
  }
}

TEST_CASE("mixture EM rejects a support set") {
  const FeatureSet f = probability_features(random_simplex_rows(6, 2));
  TaskInstance t = query_only_task(4, 2);
  t.support_indices = {5};
  t.support_labels = {0};
  CHECK_THROWS_AS(em_dirichlet_mixture_reference(f, t, DirichletParams::ones(2, 2),
                                                 ClassProportions{Eigen::Vector2d(0.5, 0.5)}),
                  ValidationError);
}

TEST_CASE("method names round-trip") {
  for (Method m : all_methods()) CHECK(parse_method(method_name(m)) == m);
  CHECK(all_methods().size() == 8);
  CHECK_FALSE(parse_method("em-dirichlet-typo").has_value());
  CHECK(parse_method("hard-kl-kmeans") == Method::HardKlKMeans);
}

TEST_CASE("run_method dispatches the hard variant") {
  engine(3);
  const Synthetic s = mixture(separated_alphas(), 20);
  const SolverResult r = run_method(Method::HardEmDirichlet, s.features, query_only_task(20, 3),
                                    full_config(10.0));
  CHECK(r.assignment.u.cwiseProduct(r.assignment.u).isApprox(r.assignment.u));
}
