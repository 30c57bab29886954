#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "forgesr/forge/dataset.hpp"
#include "forgesr/imgcore/degrade.hpp"
#include "forgesr/recon/recon.hpp"

namespace forgesr::forge {

/// x = bicubic(y, H/s, W/s) for every HR image. Both sides are snapped to
/// 8-bit levels so that saving is lossless.
PairedDataset make_bicubic_dataset(const std::vector<Image>& hr_images, int scale, const std::string& hr_source = "");

/// x_deg = G(bicubic(y)) with G the checkpoint's model. Pair i uses mask seed
/// mae_mask_seed(seed, i); the output is independent of the worker count.
PairedDataset forge_dataset(const std::vector<Image>& hr_images, const recon::ReconCheckpoint& ckpt, int scale,
                            std::uint64_t seed, const std::string& hr_source = "");

/// x = D(bicubic(y)) with D a corruption drawn per pair from `kinds` at a
/// severity uniform in [min_severity, max_severity]; pair i draws from
/// seed_for(seed, "degrade", i). Stands in for real-world degraded LR sets.
PairedDataset make_degraded_dataset(const std::vector<Image>& hr_images, int scale, const std::vector<DegradationKind>& kinds,
                                    int min_severity, int max_severity, std::uint64_t seed, const std::string& hr_source = "");

}  // namespace forgesr::forge
