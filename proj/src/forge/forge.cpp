#include "forgesr/forge/forge.hpp"

#include <algorithm>

#include "forgesr/core/parallel.hpp"
#include "forgesr/core/rng.hpp"
#include "forgesr/core/seed.hpp"
#include "forgesr/imgcore/resample.hpp"

namespace forgesr::forge {

namespace {

constexpr std::size_t kForgeChunk = 32;

void check_divisible(const std::vector<Image>& hr, int scale) {
  if (hr.empty()) throw InvalidArgument("dataset needs at least one HR image");
  if (scale < 1) throw InvalidArgument("scale must be >= 1");
  for (std::size_t i = 0; i < hr.size(); ++i)
    if (hr[i].height() % scale != 0 || hr[i].width() % scale != 0)
      throw InvalidArgument("HR image " + std::to_string(i) + " (" + std::to_string(hr[i].height()) + "x" +
                            std::to_string(hr[i].width()) + ") is not divisible by scale " + std::to_string(scale));
}

DatasetManifest base_manifest(const std::vector<Image>& hr, int scale, const std::string& hr_source) {
  DatasetManifest m;
  m.scale = scale;
  m.hr_source = hr_source;
  m.pair_count = static_cast<int>(hr.size());
  const bool uniform = std::all_of(hr.begin(), hr.end(), [&](const Image& y) {
    return y.height() == hr.front().height() && y.width() == hr.front().width() && y.height() == y.width();
  });
  m.crop_size = uniform ? hr.front().height() : 0;
  return m;
}

}  // namespace

PairedDataset make_bicubic_dataset(const std::vector<Image>& hr_images, int scale, const std::string& hr_source) {
  check_divisible(hr_images, scale);
  PairedDataset d;
  d.manifest = base_manifest(hr_images, scale, hr_source);
  d.pairs.resize(hr_images.size());
  parallel_for(hr_images.size(), [&](std::size_t i) {
    const Image& y = hr_images[i];
    d.pairs[i].hr = quantize8(y);
    d.pairs[i].lr = quantize8(bicubic_resample(d.pairs[i].hr, y.height() / scale, y.width() / scale));
  });
  d.manifest.hr_digest = hr_digest(d);
  return d;
}

PairedDataset forge_dataset(const std::vector<Image>& hr_images, const recon::ReconCheckpoint& ckpt, int scale,
                            std::uint64_t seed, const std::string& hr_source) {
  check_divisible(hr_images, scale);
  const int in = ckpt.spec.input_size;
  for (std::size_t i = 0; i < hr_images.size(); ++i)
    if (hr_images[i].height() != in * scale || hr_images[i].width() != in * scale)
      throw InvalidArgument("HR image " + std::to_string(i) + " downsampled by " + std::to_string(scale) +
                            " does not match checkpoint input size " + std::to_string(in));

  PairedDataset d;
  d.manifest = base_manifest(hr_images, scale, hr_source);
  d.manifest.seed = seed;
  d.manifest.mask_seed_rule = "seed_for(seed, \"mae-mask\", index)";
  d.manifest.generator.type = "recon";
  d.manifest.generator.recon_kind = recon::to_string(ckpt.spec.kind);
  d.manifest.generator.epoch = ckpt.epoch;
  d.manifest.generator.checkpoint_sha256 = recon::checkpoint_digest(ckpt);
  d.manifest.generator.train_seed = ckpt.train_seed;
  d.pairs.resize(hr_images.size());

  // Fixed chunks, each with its own model instance: the batch composition and
  // therefore every output byte is independent of the thread count.
  const std::size_t chunks = (hr_images.size() + kForgeChunk - 1) / kForgeChunk;
  parallel_for(chunks, [&](std::size_t c) {
    recon::ReconRunner runner(ckpt);
    const std::size_t begin = c * kForgeChunk, end = std::min(hr_images.size(), begin + kForgeChunk);
    std::vector<Image> clean;
    std::vector<std::uint64_t> seeds;
    for (std::size_t i = begin; i < end; ++i) {
      d.pairs[i].hr = quantize8(hr_images[i]);
      clean.push_back(quantize8(bicubic_resample(d.pairs[i].hr, in, in)));
      seeds.push_back(recon::mae_mask_seed(seed, i));
    }
    std::vector<const Image*> batch;
    for (const auto& x : clean) batch.push_back(&x);
    auto out = runner.run(batch, seeds);
    for (std::size_t i = begin; i < end; ++i) d.pairs[i].lr = quantize8(std::move(out[i - begin]));
  });
  d.manifest.hr_digest = hr_digest(d);
  return d;
}

PairedDataset make_degraded_dataset(const std::vector<Image>& hr_images, int scale, const std::vector<DegradationKind>& kinds,
                                    int min_severity, int max_severity, std::uint64_t seed, const std::string& hr_source) {
  if (kinds.empty()) throw InvalidArgument("make_degraded_dataset: no degradation kinds");
  if (min_severity < 1 || max_severity > 5 || min_severity > max_severity)
    throw InvalidArgument("make_degraded_dataset: severity range must lie in [1, 5]");
  PairedDataset d = make_bicubic_dataset(hr_images, scale, hr_source);
  d.manifest.seed = seed;
  d.manifest.generator.type = "degraded";
  std::vector<std::string> names;
  for (auto k : kinds) names.emplace_back(to_string(k));
  d.manifest.generator.recipe = {{"kinds", names},
                                 {"min_severity", min_severity},
                                 {"max_severity", max_severity},
                                 {"pair_seed_rule", "seed_for(seed, \"degrade\", index)"}};
  parallel_for(d.pairs.size(), [&](std::size_t i) {
    Rng rng(seed_for(seed, "degrade", i));
    const auto kind = kinds[rng.below(kinds.size())];
    const int severity = rng.range(min_severity, max_severity);
    d.pairs[i].lr = quantize8(apply_degradation(d.pairs[i].lr, {kind, severity}, rng.next_u64()));
  });
  return d;
}

}  // namespace forgesr::forge
