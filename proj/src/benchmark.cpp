#include "dirmix/benchmark.hpp"

#include <atomic>
#include <chrono>
#include <exception>
#include <functional>
#include <iomanip>
#include <ostream>
#include <thread>

namespace dirmix {

TaskFailure::TaskFailure(Index task_index_, std::uint64_t seed_, const std::string& what)
    : std::runtime_error("task " + std::to_string(task_index_) + " (seed " +
                         std::to_string(seed_) + ") failed: " + what),
      task_index(task_index_),
      seed(seed_) {}

namespace {

struct Prepared {
  TaskInstance task;
  double lambda = 0.0;
  Index k_eff = 0;
};

using Preparer = std::function<Prepared(Index)>;

unsigned resolve_workers(unsigned requested, Index n_tasks) {
  unsigned w = requested == 0 ? std::max(1u, std::thread::hardware_concurrency()) : requested;
  return static_cast<unsigned>(std::min<Index>(w, std::max<Index>(n_tasks, 1)));
}

// Runs every task on a pool; results land in task order so aggregation does not
// depend on the worker count.
BenchmarkReport run_tasks(const FeatureSet& features, Index n_tasks, std::uint64_t seed,
                          Index shots, EvalMode mode, const BenchmarkOptions& options,
                          const Preparer& prepare) {
  const std::string name(method_name(options.method));
  std::vector<TaskRecord> records(static_cast<std::size_t>(n_tasks));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n_tasks));
  std::atomic<Index> next{0};

  auto worker = [&] {
    for (Index i = next++; i < n_tasks; i = next++) {
      try {
        const Prepared p = prepare(i);
        SolverConfig config = options.config;
        config.lambda = p.lambda;
        const auto start = std::chrono::steady_clock::now();
        const SolverResult result = run_method(options.method, features, p.task, config);
        const auto stop = std::chrono::steady_clock::now();

        TaskRecord& r = records[static_cast<std::size_t>(i)];
        r.task_index = i;
        r.seed = seed;
        r.method = name;
        r.accuracy = evaluate_task(result, features, p.task, mode);
        r.seconds = std::chrono::duration<double>(stop - start).count();
        r.query_size = p.task.n_query();
        r.shots = shots;
        r.k_eff = p.k_eff;
        r.lambda = config.effective_lambda();
      } catch (...) {
        errors[static_cast<std::size_t>(i)] = std::current_exception();
      }
    }
  };

  const unsigned n_workers = resolve_workers(options.workers, n_tasks);
  if (n_workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < n_workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  for (Index i = 0; i < n_tasks; ++i) {
    if (!errors[static_cast<std::size_t>(i)]) continue;
    try {
      std::rethrow_exception(errors[static_cast<std::size_t>(i)]);
    } catch (const std::exception& e) {
      throw TaskFailure(i, seed, e.what());
    }
  }

  BenchmarkReport report;
  report.method_name = name;
  report.records = std::move(records);
  double acc_sum = 0.0;
  double sec_sum = 0.0;
  for (const auto& r : report.records) {
    report.per_task_accuracies.push_back(r.accuracy);
    acc_sum += r.accuracy;
    sec_sum += r.seconds;
  }
  if (n_tasks > 0) {
    report.mean_accuracy = acc_sum / static_cast<double>(n_tasks);
    report.mean_task_seconds = sec_sum / static_cast<double>(n_tasks);
  }
  return report;
}

nlohmann::json options_json(const BenchmarkOptions& options) {
  return {{"method", std::string(method_name(options.method))},
          {"lambda_scale", options.lambda_scale},
          {"matching", options.matching},
          {"workers", options.workers},
          {"solver", to_json(options.config)}};
}

void require_scale(const BenchmarkOptions& options) {
  if (!(options.lambda_scale >= 0.0) || !std::isfinite(options.lambda_scale)) {
    throw ValidationError("lambda scale must be nonnegative and finite");
  }
  options.config.validate();
}

}  // namespace

BenchmarkReport run_benchmark(const FeatureSet& features, const ZeroShotProtocol& protocol,
                              const BenchmarkOptions& options) {
  require_scale(options);
  const Index k = features.n_classes();
  protocol.validate(k);
  const EvalMode mode = options.matching ? EvalMode::Matched : EvalMode::ArgmaxOnly;
  BenchmarkReport report =
      run_tasks(features, protocol.n_tasks, protocol.seed, 0, mode, options, [&](Index i) {
        Prepared p;
        p.task = sample_zero_shot_task(features, protocol, i);
        p.lambda = options.lambda_scale * zero_shot_lambda(k, p.task.n_query());
        p.k_eff = effective_classes(features, p.task);
        return p;
      });
  report.config_echo = options_json(options);
  report.config_echo["protocol"] = {{"kind", "zero-shot"},
                                    {"query_size", protocol.query_size},
                                    {"min_eff_classes", protocol.min_eff_classes},
                                    {"max_eff_classes", protocol.max_eff_classes},
                                    {"n_tasks", protocol.n_tasks},
                                    {"seed", protocol.seed}};
  report.config_echo["evaluation"] = options.matching ? "matched" : "argmax_only";
  return report;
}

BenchmarkReport run_benchmark(const FeatureSet& features, const FewShotProtocol& protocol,
                              const BenchmarkOptions& options) {
  require_scale(options);
  const Index k = features.n_classes();
  protocol.validate(k);
  BenchmarkReport report = run_tasks(
      features, protocol.n_tasks, protocol.seed, protocol.shots, EvalMode::Supervised, options,
      [&](Index i) {
        Prepared p;
        p.task = sample_few_shot_task(features, protocol, i);
        p.lambda = options.lambda_scale * few_shot_lambda(k, protocol.k_eff, p.task.n_query());
        p.k_eff = protocol.k_eff;
        return p;
      });
  report.config_echo = options_json(options);
  report.config_echo["protocol"] = {{"kind", "few-shot"},
                                    {"shots", protocol.shots},
                                    {"k_eff", protocol.k_eff},
                                    {"query_size", protocol.query_size},
                                    {"n_tasks", protocol.n_tasks},
                                    {"seed", protocol.seed}};
  report.config_echo["evaluation"] = "supervised";
  return report;
}

std::vector<BenchmarkReport> sweep_query_size(const FeatureSet& features,
                                              ZeroShotProtocol protocol,
                                              const std::vector<Index>& query_sizes,
                                              const BenchmarkOptions& options) {
  std::vector<BenchmarkReport> out;
  for (Index q : query_sizes) {
    protocol.query_size = q;
    out.push_back(run_benchmark(features, protocol, options));
  }
  return out;
}

std::vector<BenchmarkReport> sweep_shots(const FeatureSet& features, FewShotProtocol protocol,
                                         const std::vector<Index>& shots,
                                         const BenchmarkOptions& options) {
  std::vector<BenchmarkReport> out;
  for (Index s : shots) {
    protocol.shots = s;
    out.push_back(run_benchmark(features, protocol, options));
  }
  return out;
}

nlohmann::json to_json(const SolverConfig& config) {
  return {{"lambda", config.lambda},
          {"max_outer_iter", config.max_outer_iter},
          {"outer_eps", config.outer_eps},
          {"hard_assignments", config.hard_assignments},
          {"use_barrier", config.use_barrier},
          {"use_mdl", config.use_mdl},
          {"inner_eps", config.inner.eps},
          {"inner_max_iter", config.inner.max_iter},
          {"kmeans_stiffness", config.kmeans_stiffness}};
}

nlohmann::json to_json(const BenchmarkReport& report) {
  nlohmann::json tasks = nlohmann::json::array();
  for (const auto& r : report.records) {
    tasks.push_back({{"task_index", r.task_index},
                     {"seed", r.seed},
                     {"accuracy", r.accuracy},
                     {"seconds", r.seconds},
                     {"query_size", r.query_size},
                     {"shots", r.shots},
                     {"k_eff", r.k_eff},
                     {"lambda", r.lambda}});
  }
  return {{"method_name", report.method_name},
          {"mean_accuracy", report.mean_accuracy},
          {"per_task_accuracies", report.per_task_accuracies},
          {"mean_task_seconds", report.mean_task_seconds},
          {"config_echo", report.config_echo},
          {"tasks", std::move(tasks)}};
}

void write_csv(std::ostream& out, const std::vector<BenchmarkReport>& reports) {
  out << kCsvHeader << '\n';
  const auto old_precision = out.precision(17);
  for (const auto& report : reports) {
    for (const auto& r : report.records) {
      out << r.task_index << ',' << r.seed << ',' << r.method << ',' << r.accuracy << ','
          << r.seconds << ',' << r.query_size << ',' << r.shots << ',' << r.k_eff << ','
          << r.lambda << '\n';
    }
  }
  out.precision(old_precision);
}

}  // namespace dirmix
