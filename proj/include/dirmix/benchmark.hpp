#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "dirmix/solvers.hpp"
#include "dirmix/tasks.hpp"

namespace dirmix {

struct BenchmarkOptions {
  Method method = Method::HardEmDirichlet;
  /// lambda is overwritten per task with lambda_scale times the protocol default.
  SolverConfig config{};
  double lambda_scale = 1.0;
  /// Zero-shot only: false scores with the per-cluster argmax instead of the matching.
  bool matching = true;
  /// 0 picks std::thread::hardware_concurrency().
  unsigned workers = 0;
};

/// One CSV row.
struct TaskRecord {
  Index task_index = 0;
  std::uint64_t seed = 0;
  std::string method;
  double accuracy = 0.0;
  double seconds = 0.0;
  Index query_size = 0;
  Index shots = 0;
  Index k_eff = 0;
  double lambda = 0.0;
};

struct BenchmarkReport {
  std::string method_name;
  double mean_accuracy = 0.0;
  std::vector<double> per_task_accuracies;
  double mean_task_seconds = 0.0;
  nlohmann::json config_echo;
  std::vector<TaskRecord> records;
};

/// Thrown when a task fails; carries what is needed to replay it.
class TaskFailure : public std::runtime_error {
 public:
  TaskFailure(Index task_index, std::uint64_t seed, const std::string& what);
  Index task_index;
  std::uint64_t seed;
};

BenchmarkReport run_benchmark(const FeatureSet& features, const ZeroShotProtocol& protocol,
                              const BenchmarkOptions& options);
BenchmarkReport run_benchmark(const FeatureSet& features, const FewShotProtocol& protocol,
                              const BenchmarkOptions& options);

std::vector<BenchmarkReport> sweep_query_size(const FeatureSet& features,
                                              ZeroShotProtocol protocol,
                                              const std::vector<Index>& query_sizes,
                                              const BenchmarkOptions& options);
std::vector<BenchmarkReport> sweep_shots(const FeatureSet& features, FewShotProtocol protocol,
                                         const std::vector<Index>& shots,
                                         const BenchmarkOptions& options);

nlohmann::json to_json(const SolverConfig& config);
nlohmann::json to_json(const BenchmarkReport& report);

inline constexpr const char* kCsvHeader =
    "task_index,seed,method,accuracy,seconds,query_size,shots,k_eff,lambda";
void write_csv(std::ostream& out, const std::vector<BenchmarkReport>& reports);

}  // namespace dirmix
