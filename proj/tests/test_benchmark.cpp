#include <doctest.h>

#include <numeric>
#include <sstream>

#include "dirmix/benchmark.hpp"
#include "support.hpp"

using namespace dirmix;

namespace {

FeatureSet mixture(std::uint64_t seed) {
  Eigen::MatrixXd alphas = Eigen::MatrixXd::Constant(5, 5, 2.0);
  alphas.diagonal().setConstant(12.0);
  return generate_synthetic_mixture({alphas}, {Eigen::VectorXd::Constant(5, 0.2)}, 800, seed);
}

ZeroShotProtocol zero_shot(Index tasks) {
  ZeroShotProtocol p;
  p.max_eff_classes = 5;
  p.query_size = 30;
  p.n_tasks = tasks;
  p.seed = 11;
  return p;
}

}  // namespace

TEST_CASE("single task report") {
  const FeatureSet f = mixture(1);
  const BenchmarkReport r = run_benchmark(f, zero_shot(1), {});
  REQUIRE(r.per_task_accuracies.size() == 1);
  CHECK(r.mean_accuracy == r.per_task_accuracies[0]);
  CHECK(r.method_name == "hard-em-dirichlet");
  CHECK(r.records[0].lambda == doctest::Approx(zero_shot_lambda(5, 30)));
}

TEST_CASE("mean accuracy is the task average and does not depend on the worker count") {
  const FeatureSet f = mixture(2);
  BenchmarkOptions one;
  one.workers = 1;
  one.method = Method::EmDirichlet;
  BenchmarkOptions three = one;
  three.workers = 3;
  const BenchmarkReport a = run_benchmark(f, zero_shot(12), one);
  const BenchmarkReport b = run_benchmark(f, zero_shot(12), three);
  CHECK(a.per_task_accuracies == b.per_task_accuracies);
  const double avg = std::accumulate(a.per_task_accuracies.begin(), a.per_task_accuracies.end(), 0.0) / 12;
  CHECK(std::abs(a.mean_accuracy - avg) <= 1e-15);
  for (std::size_t i = 0; i < a.records.size(); ++i) CHECK(a.records[i].task_index == static_cast<Index>(i));
}

TEST_CASE("lambda_scale multiplies the default") {
  BenchmarkOptions o;
  o.lambda_scale = 0.0;
  const BenchmarkReport r = run_benchmark(mixture(3), zero_shot(2), o);
  for (const auto& rec : r.records) CHECK(rec.lambda == 0.0);
  CHECK(r.config_echo.contains("lambda_scale"));
}

TEST_CASE("few-shot sweep writes one row per shot and task") {
  FewShotProtocol p;
  p.k_eff = 3;
  p.query_size = 20;
  p.n_tasks = 4;
  const auto reports = sweep_shots(mixture(4), p, {0, 1, 4}, {});
  REQUIRE(reports.size() == 3);
  std::ostringstream out;
  write_csv(out, reports);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == kCsvHeader);
  int rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    CHECK(std::count(line.begin(), line.end(), ',') == 8);
  }
  CHECK(rows == 12);
  CHECK(reports[2].records[0].shots == 4);
}

TEST_CASE("query-size sweep") {
  const auto reports = sweep_query_size(mixture(5), zero_shot(3), {5, 20}, {});
  REQUIRE(reports.size() == 2);
  CHECK(reports[0].records[0].query_size == 5);
  CHECK(reports[1].records[0].query_size == 20);
}

TEST_CASE("a failing task is reported with its index and seed") {
  FeatureSet f = mixture(6);
  FewShotProtocol p;
  p.shots = 500;
  p.n_tasks = 3;
  p.seed = 77;
  try {
    run_benchmark(f, p, {});
    FAIL("expected a TaskFailure");
  } catch (const TaskFailure& e) {
    CHECK(e.task_index == 0);
    CHECK(e.seed == 77);
    CHECK(std::string(e.what()).find("shots") != std::string::npos);
  }
}

TEST_CASE("json echo of the solver configuration") {
  SolverConfig c;
  c.lambda = 2.5;
  c.use_barrier = false;
  const auto j = to_json(c);
  CHECK(j["lambda"] == 2.5);
  CHECK(j["use_barrier"] == false);
  const BenchmarkReport r = run_benchmark(mixture(7), zero_shot(2), {});
  const auto rj = to_json(r);
  CHECK(rj["method_name"] == "hard-em-dirichlet");
  CHECK(rj["per_task_accuracies"].size() == 2);
}
