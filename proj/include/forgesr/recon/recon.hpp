#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "forgesr/imgcore/image.hpp"
#include "forgesr/nn/checkpoint.hpp"
#include "forgesr/recon/models.hpp"

namespace forgesr::recon {

inline const std::vector<int> kDefaultCheckpointEpochs = {4, 8, 16, 32, 64};

struct ReconCheckpoint {
  ReconModelSpec spec;
  int epoch = 0;
  std::uint64_t train_seed = 0;
  std::vector<nn::NamedArray> parameters;
};

nn::Checkpoint to_container(const ReconCheckpoint& ckpt);
ReconCheckpoint from_container(const nn::Checkpoint& c);
void save_recon_checkpoint(const ReconCheckpoint& ckpt, const std::string& path);
ReconCheckpoint load_recon_checkpoint(const std::string& path);

/// SHA-256 of the serialized container; identifies a generator in manifests.
std::string checkpoint_digest(const ReconCheckpoint& ckpt);

struct TrainReconOptions {
  int epochs = 64;
  std::vector<int> checkpoint_epochs = kDefaultCheckpointEpochs;
  std::uint64_t train_seed = 0;
  int batch_size = 64;
  double learning_rate = 3e-4;
  // Called after every epoch with the mean training loss.
  std::function<void(int epoch, double mean_loss)> on_epoch;
};

struct ReconTrainingRun {
  std::vector<ReconCheckpoint> checkpoints;  // ascending epoch
  std::vector<double> epoch_loss;            // index e-1 holds epoch e
};

/// Trains from scratch on square crops of spec.input_size. Throws
/// TrainingDiverged (carrying the epoch) on a non-finite loss.
ReconTrainingRun train_recon(const ReconModelSpec& spec, const std::vector<Image>& images, const TrainReconOptions& opts);

/// Mask seed for image i of a forge or comparison pass.
std::uint64_t mae_mask_seed(std::uint64_t seed, std::uint64_t index);

/// Inference wrapper holding one instantiated model. Not thread-safe; use
/// one runner per thread.
class ReconRunner {
public:
  explicit ReconRunner(const ReconCheckpoint& ckpt);
  ~ReconRunner();
  ReconRunner(ReconRunner&&) noexcept;
  ReconRunner& operator=(ReconRunner&&) noexcept;

  Image operator()(const Image& img, std::uint64_t mask_seed = 0);
  std::vector<Image> run(const std::vector<const Image*>& batch, const std::vector<std::uint64_t>& mask_seeds);

  const ReconModelSpec& spec() const;

private:
  std::unique_ptr<ReconModel<float>> model_;
};

/// G(img) with the checkpoint's weights; dims must equal spec.input_size.
Image recon_forward(const ReconCheckpoint& ckpt, const Image& img, std::uint64_t mask_seed = 0);

struct ReconComparison {
  Image grid;                            // rows = samples, cols = input + ckpts
  std::vector<std::string> column_labels;
  std::vector<std::vector<double>> psnr;  // [sample][column], column 0 = input
  int rows = 0;
  int cols = 0;
};

ReconComparison compare_recons(const std::vector<ReconCheckpoint>& ckpts, const std::vector<Image>& samples,
                               std::uint64_t mask_seed = 0);

/// Writes grid.png and psnr.csv into dir; returns the two paths.
std::pair<std::string, std::string> write_comparison(const ReconComparison& cmp, const std::string& dir);

}  // namespace forgesr::recon
