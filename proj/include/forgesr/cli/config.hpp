#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "forgesr/analysis/degradation.hpp"
#include "forgesr/imgcore/color.hpp"
#include "forgesr/recon/models.hpp"
#include "forgesr/sr/sr.hpp"

namespace forgesr::cli {

inline constexpr int kConfigFormatVersion = 1;

// Bad or unknown configuration; maps to exit code 1.
class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct ReconConfig {
  std::vector<recon::ReconKind> kinds = {recon::ReconKind::vqvae, recon::ReconKind::vqvae2, recon::ReconKind::mae};
  int epochs = 64;
  std::vector<int> checkpoint_epochs = {4, 8, 16, 32, 64};
  int batch_size = 64;
  double learning_rate = 3e-4;
  int train_count = 2000;  // HR crops used (via their bicubic LR); 0 = all
  std::vector<recon::ReconModelSpec> specs;  // one per kind, defaults filled in
};

struct ForgeConfig {
  recon::ReconKind kind = recon::ReconKind::vqvae2;
  int epoch = 8;
};

struct EvalConfig {
  std::vector<DegradationKind> degradations = {
      DegradationKind::kGaussianNoise, DegradationKind::kShotNoise, DegradationKind::kGaussianBlur,
      DegradationKind::kDefocusBlur,   DegradationKind::kMotionBlur, DegradationKind::kJpegCompression,
      DegradationKind::kPixelate};
  int min_severity = 1;
  int max_severity = 3;
  std::string perceptual_command;
};

struct SrConfig {
  sr::SrSpec spec;
  long pretrain_iters = 5000;
  long finetune_iters = 2000;
  double learning_rate = 2e-4;
  double finetune_learning_rate = 1e-4;
  int batch_size = 16;
  int lr_patch = 16;
  int log_every = 100;
};

struct ExperimentConfig {
  int format_version = kConfigFormatVersion;
  std::uint64_t seed = 20240607;
  int threads = 1;
  std::string workdir = "work";
  // "synthetic:N" renders N procedural scenes; "dir:PATH" crops PNGs found
  // under PATH on a grid.
  std::string hr_source = "synthetic:2200";
  int scale = 4;
  int crop_size = 128;
  int crop_stride = 128;
  int eval_count = 200;
  ReconConfig recon;
  ForgeConfig forge;
  analysis::ClassifierSpec classifier;
  int classifier_per_class = 200;
  std::vector<ShiftSpec> shifts;
  SrConfig sr;
  EvalConfig eval;

  int lr_size() const { return crop_size / scale; }
  const recon::ReconModelSpec& recon_spec(recon::ReconKind kind) const;
};

/// Strict parse: unknown keys, wrong types and out-of-range values raise
/// ConfigError naming the offending key path.
ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::string& path);
ExperimentConfig default_config();

/// Normalized form with every default spelled out.
nlohmann::json to_json(const ExperimentConfig& c);

/// SHA-256 of the normalized JSON.
std::string config_hash(const ExperimentConfig& c);

}  // namespace forgesr::cli
