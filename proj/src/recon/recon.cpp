#include "forgesr/recon/recon.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "forgesr/core/seed.hpp"
#include "forgesr/imgcore/image_io.hpp"
#include "forgesr/imgcore/metrics.hpp"
#include "forgesr/nn/optim.hpp"

namespace forgesr::recon {

namespace fs = std::filesystem;

nn::Checkpoint to_container(const ReconCheckpoint& ckpt) {
  nn::Checkpoint c;
  c.header = {{"kind", "recon"},
              {"spec", to_json(ckpt.spec)},
              {"epoch", ckpt.epoch},
              {"train_seed", std::to_string(ckpt.train_seed)}};
  c.arrays = ckpt.parameters;
  return c;
}

ReconCheckpoint from_container(const nn::Checkpoint& c) {
  if (c.header.value("kind", "") != "recon") throw ValidationError("checkpoint is not a reconstruction model");
  ReconCheckpoint ckpt;
  try {
    ckpt.spec = spec_from_json(c.header.at("spec"));
    ckpt.epoch = c.header.at("epoch").get<int>();
    ckpt.train_seed = std::stoull(c.header.at("train_seed").get<std::string>());
  } catch (const std::exception& e) {
    throw ValidationError(std::string("bad reconstruction checkpoint header: ") + e.what());
  }
  ckpt.parameters = c.arrays;
  return ckpt;
}

void save_recon_checkpoint(const ReconCheckpoint& ckpt, const std::string& path) {
  nn::write_checkpoint(to_container(ckpt), path);
}

ReconCheckpoint load_recon_checkpoint(const std::string& path) {
  return from_container(nn::read_checkpoint(path));
}

std::string checkpoint_digest(const ReconCheckpoint& ckpt) {
  return sha256_hex(nn::encode_checkpoint(to_container(ckpt)));
}

namespace {

ReconCheckpoint snapshot(ReconModel<float>& model, int epoch, std::uint64_t seed) {
  ReconCheckpoint c;
  c.spec = model.spec();
  c.epoch = epoch;
  c.train_seed = seed;
  c.parameters = nn::export_params(model.params());
  return c;
}

}  // namespace

// Steps between dead-code restarts in the VQ models.
constexpr long kRestartEvery = 10;

ReconTrainingRun train_recon(const ReconModelSpec& spec, const std::vector<Image>& images, const TrainReconOptions& opts) {
  validate(spec);
  if (images.empty()) throw InvalidArgument("train_recon: empty corpus");
  if (opts.batch_size < 1) throw InvalidArgument("train_recon: batch_size must be >= 1");
  for (int e : opts.checkpoint_epochs)
    if (e < 1 || e > opts.epochs) throw InvalidArgument("train_recon: checkpoint epoch " + std::to_string(e) + " outside [1, epochs]");
  for (std::size_t i = 0; i < images.size(); ++i)
    if (images[i].height() != spec.input_size || images[i].width() != spec.input_size)
      throw InvalidArgument("train_recon: image " + std::to_string(i) + " is not " + std::to_string(spec.input_size) + " square");

  auto model = make_recon_model<float>(spec, seed_for(opts.train_seed, "recon-init", 0));
  const auto params = model->params();
  nn::Adam<float> adam(params, opts.learning_rate);
  Rng rng(seed_for(opts.train_seed, "recon-train", 0));

  std::vector<int> ckpt_epochs = opts.checkpoint_epochs;
  std::sort(ckpt_epochs.begin(), ckpt_epochs.end());
  ckpt_epochs.erase(std::unique(ckpt_epochs.begin(), ckpt_epochs.end()), ckpt_epochs.end());

  ReconTrainingRun run;
  std::vector<std::size_t> order(images.size());
  std::iota(order.begin(), order.end(), 0);
  bool first_step = true;
  long step = 0;
  for (int epoch = 1; epoch <= opts.epochs; ++epoch) {
    rng.shuffle(order.begin(), order.end());
    double loss_sum = 0.0;
    std::size_t seen = 0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(opts.batch_size)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(opts.batch_size));
      std::vector<const Image*> batch;
      std::vector<std::uint64_t> seeds;
      for (std::size_t k = start; k < end; ++k) {
        batch.push_back(&images[order[k]]);
        seeds.push_back(rng.next_u64());
      }
      const auto x = nn::images_to_tensor<float>(batch);
      adam.zero_grad();
      model->forward(x, seeds);
      if (first_step) {
        model->init_from_batch(rng);
        model->forward(x, seeds);
        first_step = false;
      }
      const VqLossTerms terms = model->backward(x);
      if (!std::isfinite(terms.total))
        throw TrainingDiverged("non-finite training loss at epoch " + std::to_string(epoch), epoch);
      adam.step();
      if (++step % kRestartEvery == 0) model->restart_dead_codes(rng);
      loss_sum += terms.total * static_cast<double>(end - start);
      seen += end - start;
    }
    const double mean = loss_sum / static_cast<double>(seen);
    run.epoch_loss.push_back(mean);
    if (opts.on_epoch) opts.on_epoch(epoch, mean);
    if (std::binary_search(ckpt_epochs.begin(), ckpt_epochs.end(), epoch))
      run.checkpoints.push_back(snapshot(*model, epoch, opts.train_seed));
  }
  return run;
}

std::uint64_t mae_mask_seed(std::uint64_t seed, std::uint64_t index) { return seed_for(seed, "mae-mask", index); }

ReconRunner::ReconRunner(const ReconCheckpoint& ckpt) : model_(make_recon_model<float>(ckpt.spec, 0)) {
  nn::Checkpoint c;
  c.arrays = ckpt.parameters;
  nn::import_params(model_->params(), c);
}

ReconRunner::~ReconRunner() = default;
ReconRunner::ReconRunner(ReconRunner&&) noexcept = default;
ReconRunner& ReconRunner::operator=(ReconRunner&&) noexcept = default;

const ReconModelSpec& ReconRunner::spec() const { return model_->spec(); }

std::vector<Image> ReconRunner::run(const std::vector<const Image*>& batch, const std::vector<std::uint64_t>& mask_seeds) {
  const int s = spec().input_size;
  for (const Image* img : batch)
    if (img->height() != s || img->width() != s)
      throw InvalidArgument("recon_forward: expected " + std::to_string(s) + "x" + std::to_string(s) + " input, got " +
                            std::to_string(img->height()) + "x" + std::to_string(img->width()));
  const auto y = model_->forward(nn::images_to_tensor<float>(batch), mask_seeds);
  std::vector<Image> out;
  out.reserve(batch.size());
  for (int b = 0; b < y.n; ++b) out.push_back(nn::tensor_to_image(y, b));
  return out;
}

Image ReconRunner::operator()(const Image& img, std::uint64_t mask_seed) {
  return std::move(run({&img}, {mask_seed}).front());
}

Image recon_forward(const ReconCheckpoint& ckpt, const Image& img, std::uint64_t mask_seed) {
  ReconRunner runner(ckpt);
  return runner(img, mask_seed);
}

ReconComparison compare_recons(const std::vector<ReconCheckpoint>& ckpts, const std::vector<Image>& samples,
                               std::uint64_t mask_seed) {
  if (ckpts.empty() || samples.empty()) throw InvalidArgument("compare_recons: need at least one checkpoint and one sample");
  constexpr int gutter = 2;
  ReconComparison cmp;
  cmp.rows = static_cast<int>(samples.size());
  cmp.cols = static_cast<int>(ckpts.size()) + 1;
  cmp.column_labels.push_back("input");
  for (const auto& c : ckpts) cmp.column_labels.push_back(to_string(c.spec.kind) + "_ep" + std::to_string(c.epoch));

  std::vector<std::vector<Image>> cells(samples.size());
  for (std::size_t r = 0; r < samples.size(); ++r) cells[r].push_back(samples[r]);
  for (const auto& c : ckpts) {
    ReconRunner runner(c);
    for (std::size_t r = 0; r < samples.size(); ++r) cells[r].push_back(runner(samples[r], mae_mask_seed(mask_seed, r)));
  }

  const int th = samples.front().height(), tw = samples.front().width();
  cmp.grid = Image::filled(cmp.rows * th + (cmp.rows + 1) * gutter, cmp.cols * tw + (cmp.cols + 1) * gutter, 1.f, 1.f, 1.f);
  cmp.psnr.assign(samples.size(), std::vector<double>(static_cast<std::size_t>(cmp.cols)));
  for (int r = 0; r < cmp.rows; ++r) {
    for (int c = 0; c < cmp.cols; ++c) {
      const Image& cell = cells[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
      cmp.psnr[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)] = psnr(cell, samples[static_cast<std::size_t>(r)]);
      const int oy = gutter + r * (th + gutter), ox = gutter + c * (tw + gutter);
      for (int ch = 0; ch < 3; ++ch) cmp.grid.plane(ch).block(oy, ox, th, tw) = cell.plane(ch);
    }
  }
  return cmp;
}

std::pair<std::string, std::string> write_comparison(const ReconComparison& cmp, const std::string& dir) {
  fs::create_directories(dir);
  const std::string png = (fs::path(dir) / "grid.png").string();
  const std::string csv = (fs::path(dir) / "psnr.csv").string();
  write_png(cmp.grid, png);
  std::ofstream out(csv);
  out << "sample,column,label,psnr_db\n";
  for (int r = 0; r < cmp.rows; ++r)
    for (int c = 0; c < cmp.cols; ++c)
      out << r << ',' << c << ',' << cmp.column_labels[static_cast<std::size_t>(c)] << ','
          << cmp.psnr[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)] << '\n';
  if (!out) throw std::runtime_error("cannot write " + csv);
  return {png, csv};
}

}  // namespace forgesr::recon
