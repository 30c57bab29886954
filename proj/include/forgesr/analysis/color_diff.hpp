#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "forgesr/forge/dataset.hpp"
#include "forgesr/imgcore/color.hpp"

namespace forgesr::analysis {

struct ColorDiffReport {
  std::string dataset_id;
  std::vector<double> per_pair;
  double mean = 0.0;
};

/// Per pair: HR bicubic-downsampled to LR dims (snapped to 8-bit levels, like
/// stored LR images), then mean per-pixel CIEDE2000 against LR.
ColorDiffReport dataset_color_diff(const forge::PairedDataset& d, const std::string& dataset_id = "");

/// Per-pair rows then a "mean" summary row.
void write_color_diff_csv(const ColorDiffReport& r, const std::string& path);

/// (+-5,0,0), (+-10,0,0), (0,+-10,0), (0,0,+-10).
std::vector<ShiftSpec> default_shifts();

/// Dataset 0 is the bicubic baseline; dataset k >= 1 applies shifts[k-1] to
/// the baseline LR. Every manifest records its shift and measured mean dE.
std::vector<forge::PairedDataset> make_shifted_datasets(const std::vector<Image>& hr_images, const std::vector<ShiftSpec>& shifts,
                                                        int scale, std::uint64_t seed, const std::string& hr_source = "");

}  // namespace forgesr::analysis
