#include "forgesr/analysis/color_diff.hpp"

#include <fstream>
#include <numeric>

#include "forgesr/core/parallel.hpp"
#include "forgesr/forge/forge.hpp"
#include "forgesr/imgcore/resample.hpp"

namespace forgesr::analysis {

ColorDiffReport dataset_color_diff(const forge::PairedDataset& d, const std::string& dataset_id) {
  if (d.pairs.empty()) throw InvalidArgument("dataset_color_diff: empty dataset");
  ColorDiffReport r;
  r.dataset_id = dataset_id;
  r.per_pair.resize(d.pairs.size());
  parallel_for(d.pairs.size(), [&](std::size_t i) {
    const auto& p = d.pairs[i];
    const Image ref = quantize8(bicubic_resample(p.hr, p.lr.height(), p.lr.width()));
    r.per_pair[i] = mean_ciede2000(ref, p.lr);
  });
  r.mean = std::accumulate(r.per_pair.begin(), r.per_pair.end(), 0.0) / static_cast<double>(r.per_pair.size());
  return r;
}

void write_color_diff_csv(const ColorDiffReport& r, const std::string& path) {
  std::ofstream out(path);
  out.precision(10);
  out << "dataset,pair,delta_e\n";
  for (std::size_t i = 0; i < r.per_pair.size(); ++i) out << r.dataset_id << ',' << i << ',' << r.per_pair[i] << '\n';
  out << r.dataset_id << ",mean," << r.mean << '\n';
  if (!out) throw std::runtime_error("cannot write " + path);
}

std::vector<ShiftSpec> default_shifts() {
  return {{5, 0, 0}, {-5, 0, 0}, {10, 0, 0}, {-10, 0, 0}, {0, 10, 0}, {0, -10, 0}, {0, 0, 10}, {0, 0, -10}};
}

std::vector<forge::PairedDataset> make_shifted_datasets(const std::vector<Image>& hr_images, const std::vector<ShiftSpec>& shifts,
                                                        int scale, std::uint64_t seed, const std::string& hr_source) {
  if (shifts.size() != 8) throw InvalidArgument("make_shifted_datasets: expected 8 shifts, got " + std::to_string(shifts.size()));
  forge::PairedDataset base = forge::make_bicubic_dataset(hr_images, scale, hr_source);
  base.manifest.seed = seed;
  std::vector<forge::PairedDataset> out;
  out.reserve(9);
  out.push_back(base);
  out.front().manifest.shift = ShiftSpec{};
  for (const auto& s : shifts) {
    forge::PairedDataset d = base;
    d.manifest.shift = s;
    parallel_for(d.pairs.size(), [&](std::size_t i) { d.pairs[i].lr = quantize8(color_shift_lab(base.pairs[i].lr, s)); });
    out.push_back(std::move(d));
  }
  for (std::size_t k = 0; k < out.size(); ++k)
    out[k].manifest.stats["mean_delta_e"] = dataset_color_diff(out[k], "shift_" + std::to_string(k)).mean;
  return out;
}

}  // namespace forgesr::analysis
