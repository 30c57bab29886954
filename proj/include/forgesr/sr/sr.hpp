#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "forgesr/forge/dataset.hpp"
#include "forgesr/nn/checkpoint.hpp"
#include "forgesr/nn/layers.hpp"

namespace forgesr::sr {

struct SrSpec {
  int scale = 4;
  int width = 32;
  int blocks = 4;

  bool operator==(const SrSpec&) const = default;
};

nlohmann::json to_json(const SrSpec& s);
SrSpec sr_spec_from_json(const nlohmann::json& j);

/// Residual CNN with a single sub-pixel upsampler. The network predicts a
/// correction that is added to the bicubic upscale of its input:
///   f(x) = bicubic_up(x) + tail(shuffle(up(body(head(x - 0.5)))))
/// The output is unclamped here; super_resolve clamps.
template <typename Scalar>
class SrNetwork {
public:
  SrNetwork(const SrSpec& spec, std::uint64_t init_seed);

  nn::Tensor<Scalar> forward(const nn::Tensor<Scalar>& lr);
  nn::Tensor<Scalar> backward(const nn::Tensor<Scalar>& grad);
  nn::ParamList<Scalar> params();
  const SrSpec& spec() const { return spec_; }

private:
  SrSpec spec_;
  nn::Sequential<Scalar> head_, body_, up_;
};

struct TrainLogEntry {
  long iteration = 0;  // last iteration covered
  double loss = 0.0;   // mean L1 over the logging window
};

struct SRModel {
  SrSpec spec;
  std::uint64_t init_seed = 0;
  std::vector<nn::NamedArray> parameters;
  long iterations = 0;
  std::vector<TrainLogEntry> history;
};

/// Scale must be 2 or 4.
SRModel build_sr_model(const SrSpec& spec, std::uint64_t seed);

void save_sr_model(const SRModel& m, const std::string& path);
SRModel load_sr_model(const std::string& path);

struct SrTrainOptions {
  long iterations = 5000;
  double learning_rate = 2e-4;
  int batch_size = 16;
  int lr_patch = 16;
  int log_every = 100;
  std::uint64_t seed = 0;
  std::function<void(const TrainLogEntry&)> on_log;
};

/// L1 training on random aligned crops. Warm-starts from the model's
/// parameters, so the same call serves pretraining and fine-tuning.
SRModel train_sr(const SRModel& model, const forge::PairedDataset& data, const SrTrainOptions& opts);

/// Output dims are scale x input dims, values clamped to [0, 1].
Image super_resolve(const SRModel& model, const Image& lr);
std::vector<Image> super_resolve(const SRModel& model, const std::vector<Image>& lr);

struct MetricsRow {
  std::size_t index = 0;
  double psnr = 0.0;
  double ssim = 0.0;
  std::optional<double> perceptual;
};

struct MetricsReport {
  std::string eval_id;
  std::vector<MetricsRow> rows;
  double psnr_mean = 0.0;
  double ssim_mean = 0.0;
  std::optional<double> perceptual_mean;  // set only when every row scored
};

struct EvalOptions {
  std::string eval_id;
  // External perceptual scorer: invoked as `<command> <image_a> <image_b>`
  // and expected to print one real number. Empty means not used; a missing
  // or failing scorer leaves the perceptual fields empty.
  std::string perceptual_command;
  std::string scratch_dir;  // temp PNGs for the scorer; defaults to the system temp dir
};

MetricsReport evaluate_sr(const SRModel& model, const forge::PairedDataset& eval, const EvalOptions& opts = {});

/// Per-row CSV with a trailing "mean" row.
void write_metrics_csv(const MetricsReport& r, const std::string& path);

/// Runs the external scorer on two images; nullopt when it is absent, fails,
/// or prints something that is not a number.
std::optional<double> run_perceptual_scorer(const std::string& command, const Image& a, const Image& b,
                                            const std::string& scratch_dir = "");

}  // namespace forgesr::sr
