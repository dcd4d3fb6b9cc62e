#pragma once

// Binary feature container plus JSON manifest sidecar (<path>.json).
//
// Layout, all little-endian:
//   0   char[8]  magic "SMPXFT01"
//   8   u16      version (1)
//   10  u8       content kind (1 = simplex probabilities, 2 = raw embeddings)
//   11  u8       dtype (1 = f32, 2 = f64)
//   12  u8       has_labels
//   13  u8[3]    reserved, zero
//   16  u64      n_samples
//   24  u64      dim
//   32  payload  n_samples x dim, row-major, in dtype
//       labels   n_samples x u32 when has_labels = 1

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "dirmix/core.hpp"

namespace dirmix {

enum class DType : std::uint8_t { F32 = 1, F64 = 2 };

inline constexpr char kContainerMagic[8] = {'S', 'M', 'P', 'X', 'F', 'T', '0', '1'};
inline constexpr std::uint16_t kContainerVersion = 1;
inline constexpr std::uint64_t kHeaderBytes = 32;
/// Row-sum tolerance checked for probability content on write and on load.
inline constexpr double kContainerRowSumTol = 1e-5;

struct Manifest {
  std::string dataset;
  std::vector<std::string> class_names;
  double temperature = 30.0;
  std::string encoder;
  std::string prompt_template;
  std::string created;
};

nlohmann::json to_json(const Manifest& manifest);
Manifest manifest_from_json(const nlohmann::json& j);

std::filesystem::path manifest_path(const std::filesystem::path& container);

std::uint64_t container_size(std::uint64_t n_samples, std::uint64_t dim, DType dtype,
                             bool has_labels);

/// Validates, then writes the container and its manifest. Class names of the
/// features, when present, must agree with the manifest.
void write_container(const FeatureSet& features, const Manifest& manifest,
                     const std::filesystem::path& path, DType dtype = DType::F64);

struct LoadedContainer {
  FeatureSet features;
  Manifest manifest;
  DType dtype = DType::F64;
};

/// Reads and validates a container and its manifest; f32 payloads are widened.
LoadedContainer read_container(const std::filesystem::path& path);

/// Current UTC time as YYYY-MM-DDTHH:MM:SSZ.
std::string utc_timestamp();

}  // namespace dirmix
