#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "forgesr/imgcore/color.hpp"
#include "forgesr/imgcore/image.hpp"

namespace forgesr::forge {

inline constexpr int kDatasetFormatVersion = 1;

/// How the LR side was produced.
struct Generator {
  std::string type = "bicubic";  // "bicubic" | "recon" | "degraded"
  std::string recon_kind;        // recon only
  int epoch = 0;
  std::string checkpoint_sha256;
  std::uint64_t train_seed = 0;
  nlohmann::json recipe;  // degraded only: kinds and severity range

  bool operator==(const Generator&) const = default;
};

struct DatasetManifest {
  int format_version = kDatasetFormatVersion;
  int scale = 4;
  std::string hr_source;
  Generator generator;
  int crop_size = 0;  // HR side
  std::uint64_t seed = 0;
  std::string mask_seed_rule;  // how per-pair MAE mask seeds derive from seed
  int pair_count = 0;
  std::string hr_digest;
  std::optional<ShiftSpec> shift;
  nlohmann::json stats = nlohmann::json::object();  // e.g. mean_delta_e, entropy
};

nlohmann::json to_json(const DatasetManifest& m);
DatasetManifest manifest_from_json(const nlohmann::json& j);

struct Pair {
  Image lr;  // x_deg
  Image hr;  // y
};

struct PairedDataset {
  std::vector<Pair> pairs;
  DatasetManifest manifest;

  std::size_t size() const { return pairs.size(); }
};

/// Throws ValidationError with the pair index if any pair breaks
/// dims(hr) = scale * dims(lr), or if the manifest count disagrees.
void check_shape_law(const PairedDataset& d);

/// SHA-256 over the 8-bit bytes and dims of every image, in order.
std::string images_digest(const std::vector<const Image*>& images);
std::string hr_digest(const PairedDataset& d);

/// Writes hr/%06d.png, lr/%06d.png and manifest.json, replacing any previous
/// hr/ and lr/ contents. If d carries no stats and the existing manifest
/// matches it on every other field, the existing stats are kept. Returns the
/// manifest path.
std::string save_dataset(const PairedDataset& d, const std::string& dir);

/// Loads and validates a dataset directory. Missing or extra files, dims or
/// scale mismatches and unknown format versions raise ValidationError, with
/// the pair index when one pair is at fault.
PairedDataset load_dataset(const std::string& dir);

/// Reads only the manifest.
DatasetManifest read_manifest(const std::string& dir);
void write_manifest(const DatasetManifest& m, const std::string& dir);

}  // namespace forgesr::forge
