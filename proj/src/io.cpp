#include "dirmix/io.hpp"

#include <bit>
#include <chrono>
#include <cstring>
#include <ctime>
#include <fstream>
#include <iterator>
#include <limits>

namespace dirmix {

namespace {

void put_le(std::vector<unsigned char>& out, std::uint64_t value, int bytes) {
  for (int b = 0; b < bytes; ++b) out.push_back(static_cast<unsigned char>(value >> (8 * b)));
}

std::uint64_t get_le(const unsigned char* p, int bytes) {
  std::uint64_t v = 0;
  for (int b = 0; b < bytes; ++b) v |= static_cast<std::uint64_t>(p[b]) << (8 * b);
  return v;
}

std::size_t dtype_bytes(DType dtype) { return dtype == DType::F32 ? 4 : 8; }

std::string kind_name(ContentKind kind) {
  return kind == ContentKind::SimplexProbabilities ? "simplex probabilities" : "raw embeddings";
}

void check_manifest(const FeatureSet& features, const Manifest& manifest) {
  if (features.kind == ContentKind::SimplexProbabilities &&
      static_cast<Index>(manifest.class_names.size()) != features.dim()) {
    throw ValidationError("manifest lists " + std::to_string(manifest.class_names.size()) +
                          " class names for " + std::to_string(features.dim()) +
                          " probability columns");
  }
  if (!(manifest.temperature > 0.0)) throw ValidationError("manifest temperature must be positive");
}

}  // namespace

nlohmann::json to_json(const Manifest& m) {
  return {{"dataset", m.dataset},         {"class_names", m.class_names},
          {"temperature", m.temperature}, {"encoder", m.encoder},
          {"prompt_template", m.prompt_template}, {"created", m.created}};
}

Manifest manifest_from_json(const nlohmann::json& j) {
  try {
    Manifest m;
    m.dataset = j.at("dataset").get<std::string>();
    m.class_names = j.at("class_names").get<std::vector<std::string>>();
    m.temperature = j.at("temperature").get<double>();
    m.encoder = j.at("encoder").get<std::string>();
    m.prompt_template = j.at("prompt_template").get<std::string>();
    m.created = j.at("created").get<std::string>();
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed manifest: ") + e.what());
  }
}

std::filesystem::path manifest_path(const std::filesystem::path& container) {
  std::filesystem::path p = container;
  p += ".json";
  return p;
}

std::uint64_t container_size(std::uint64_t n_samples, std::uint64_t dim, DType dtype,
                             bool has_labels) {
  return kHeaderBytes + n_samples * dim * dtype_bytes(dtype) + (has_labels ? 4 * n_samples : 0);
}

void write_container(const FeatureSet& features, const Manifest& manifest,
                     const std::filesystem::path& path, DType dtype) {
  features.validate(kContainerRowSumTol);
  check_manifest(features, manifest);
  if (!features.class_names.empty() && features.class_names != manifest.class_names) {
    throw ValidationError("feature class names differ from the manifest");
  }
  if (dtype != DType::F32 && dtype != DType::F64) throw ValidationError("unknown dtype");

  const auto n = static_cast<std::uint64_t>(features.n_samples());
  const auto d = static_cast<std::uint64_t>(features.dim());
  std::vector<unsigned char> buf;
  buf.reserve(container_size(n, d, dtype, features.has_labels()));
  buf.insert(buf.end(), std::begin(kContainerMagic), std::end(kContainerMagic));
  put_le(buf, kContainerVersion, 2);
  put_le(buf, static_cast<std::uint8_t>(features.kind), 1);
  put_le(buf, static_cast<std::uint8_t>(dtype), 1);
  put_le(buf, features.has_labels() ? 1 : 0, 1);
  put_le(buf, 0, 3);
  put_le(buf, n, 8);
  put_le(buf, d, 8);
  for (Index r = 0; r < features.n_samples(); ++r) {
    for (Index c = 0; c < features.dim(); ++c) {
      if (dtype == DType::F32) {
        put_le(buf, std::bit_cast<std::uint32_t>(static_cast<float>(features.rows(r, c))), 4);
      } else {
        put_le(buf, std::bit_cast<std::uint64_t>(features.rows(r, c)), 8);
      }
    }
  }
  if (features.labels) {
    for (auto y : *features.labels) put_le(buf, static_cast<std::uint32_t>(y), 4);
  }

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (!out) throw IoError("write failed for " + path.string());
  out.close();

  std::ofstream side(manifest_path(path), std::ios::trunc);
  if (!side) throw IoError("cannot open " + manifest_path(path).string() + " for writing");
  side << to_json(manifest).dump(2) << '\n';
  if (!side) throw IoError("write failed for " + manifest_path(path).string());
}

LoadedContainer read_container(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  const std::vector<unsigned char> buf((std::istreambuf_iterator<char>(in)),
                                       std::istreambuf_iterator<char>());
  const std::string where = path.string() + ": ";

  if (buf.size() < sizeof(kContainerMagic) ||
      std::memcmp(buf.data(), kContainerMagic, sizeof(kContainerMagic)) != 0) {
    throw FormatError(where + "not a feature container (bad magic)");
  }
  if (buf.size() < kHeaderBytes) {
    throw FormatError(where + "truncated header: expected " + std::to_string(kHeaderBytes) +
                      " bytes, found " + std::to_string(buf.size()));
  }
  const auto version = get_le(buf.data() + 8, 2);
  if (version != kContainerVersion) {
    throw FormatError(where + "unsupported container version " + std::to_string(version));
  }
  const auto kind = buf[10];
  if (kind != 1 && kind != 2) throw FormatError(where + "unknown content kind " + std::to_string(kind));
  const auto dtype_code = buf[11];
  if (dtype_code != 1 && dtype_code != 2) {
    throw FormatError(where + "unknown dtype " + std::to_string(dtype_code));
  }
  const auto has_labels = buf[12];
  if (has_labels > 1) throw FormatError(where + "has_labels must be 0 or 1");
  const std::uint64_t n = get_le(buf.data() + 16, 8);
  const std::uint64_t d = get_le(buf.data() + 24, 8);
  const auto dtype = static_cast<DType>(dtype_code);

  // Guard the size arithmetic against absurd headers before multiplying.
  const std::uint64_t limit = std::uint64_t{1} << 40;
  if (n > limit || d > limit || (d != 0 && n > limit / d)) {
    throw FormatError(where + "implausible shape " + std::to_string(n) + " x " + std::to_string(d));
  }
  const std::uint64_t expected = container_size(n, d, dtype, has_labels == 1);
  if (buf.size() != expected) {
    throw FormatError(where + "size mismatch: expected " + std::to_string(expected) +
                      " bytes, found " + std::to_string(buf.size()));
  }

  LoadedContainer out;
  out.dtype = dtype;
  FeatureSet& f = out.features;
  f.kind = static_cast<ContentKind>(kind);
  f.rows.resize(static_cast<Index>(n), static_cast<Index>(d));
  const unsigned char* p = buf.data() + kHeaderBytes;
  for (Index r = 0; r < f.rows.rows(); ++r) {
    for (Index c = 0; c < f.rows.cols(); ++c) {
      if (dtype == DType::F32) {
        f.rows(r, c) = std::bit_cast<float>(static_cast<std::uint32_t>(get_le(p, 4)));
        p += 4;
      } else {
        f.rows(r, c) = std::bit_cast<double>(get_le(p, 8));
        p += 8;
      }
    }
  }
  if (has_labels == 1) {
    f.labels.emplace(static_cast<std::size_t>(n));
    for (auto& y : *f.labels) {
      const auto raw = get_le(p, 4);
      p += 4;
      if (raw > static_cast<std::uint64_t>(std::numeric_limits<std::int32_t>::max())) {
        throw FormatError(where + "label " + std::to_string(raw) + " out of range");
      }
      y = static_cast<std::int32_t>(raw);
    }
  }

  const auto side_path = manifest_path(path);
  std::ifstream side(side_path);
  if (!side) throw IoError("missing manifest " + side_path.string());
  nlohmann::json j;
  try {
    side >> j;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("malformed manifest " + side_path.string() + ": " + e.what());
  }
  out.manifest = manifest_from_json(j);
  try {
    check_manifest(f, out.manifest);
  } catch (const ValidationError& e) {
    throw FormatError(where + e.what());
  }
  f.class_names = out.manifest.class_names;
  try {
    f.validate(kContainerRowSumTol);
  } catch (const ValidationError& e) {
    throw FormatError(where + kind_name(f.kind) + ": " + e.what());
  }
  return out;
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char text[32];
  std::strftime(text, sizeof(text), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return text;
}

}  // namespace dirmix
