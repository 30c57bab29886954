#include <cmath>

#include "forgesr/core/seed.hpp"
#include "forgesr/imgcore/resample.hpp"
#include "forgesr/nn/loss.hpp"
#include "forgesr/nn/optim.hpp"
#include "forgesr/sr/sr.hpp"

namespace forgesr::sr {

SRModel train_sr(const SRModel& model, const forge::PairedDataset& data, const SrTrainOptions& opts) {
  if (data.manifest.scale != model.spec.scale)
    throw InvalidArgument("train_sr: dataset scale " + std::to_string(data.manifest.scale) + " differs from model scale " +
                          std::to_string(model.spec.scale));
  if (data.pairs.empty()) throw InvalidArgument("train_sr: empty dataset");
  if (opts.iterations < 0 || opts.batch_size < 1 || opts.lr_patch < 1 || opts.log_every < 1)
    throw InvalidArgument("train_sr: iterations >= 0, batch_size, lr_patch, log_every >= 1 required");
  SRModel out = model;
  if (opts.iterations == 0) return out;

  const int s = model.spec.scale;
  SrNetwork<float> net(model.spec, 0);
  {
    nn::Checkpoint c;
    c.arrays = model.parameters;
    nn::import_params(net.params(), c);
  }
  const auto params = net.params();
  nn::Adam<float> adam(params, opts.learning_rate);
  Rng rng(seed_for(opts.seed, "sr-train", 0));

  double window = 0.0;
  long window_n = 0;
  for (long it = 1; it <= opts.iterations; ++it) {
    std::vector<Image> lr_crops, hr_crops;
    for (int b = 0; b < opts.batch_size; ++b) {
      const auto& pair = data.pairs[rng.below(data.pairs.size())];
      const int ph = std::min(opts.lr_patch, pair.lr.height()), pw = std::min(opts.lr_patch, pair.lr.width());
      const int y = static_cast<int>(rng.below(static_cast<std::uint64_t>(pair.lr.height() - ph + 1)));
      const int x = static_cast<int>(rng.below(static_cast<std::uint64_t>(pair.lr.width() - pw + 1)));
      lr_crops.push_back(crop(pair.lr, y, x, ph, pw));
      hr_crops.push_back(crop(pair.hr, y * s, x * s, ph * s, pw * s));
    }
    std::vector<const Image*> lr_ptr, hr_ptr;
    for (int b = 0; b < opts.batch_size; ++b) {
      lr_ptr.push_back(&lr_crops[static_cast<std::size_t>(b)]);
      hr_ptr.push_back(&hr_crops[static_cast<std::size_t>(b)]);
    }
    adam.zero_grad();
    const auto pred = net.forward(nn::images_to_tensor<float>(lr_ptr));
    const auto loss = nn::l1_loss(pred, nn::images_to_tensor<float>(hr_ptr));
    if (!std::isfinite(loss.value))
      throw TrainingDiverged("SR loss non-finite at iteration " + std::to_string(out.iterations + it), static_cast<int>(out.iterations + it));
    net.backward(loss.grad);
    adam.step();

    window += loss.value;
    ++window_n;
    if (it % opts.log_every == 0 || it == opts.iterations) {
      TrainLogEntry e{out.iterations + it, window / static_cast<double>(window_n)};
      out.history.push_back(e);
      if (opts.on_log) opts.on_log(e);
      window = 0.0;
      window_n = 0;
    }
  }
  out.iterations += opts.iterations;
  out.parameters = nn::export_params(params);
  return out;
}

}  // namespace forgesr::sr
