#include "forgesr/imgcore/resample.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace forgesr {
namespace {

constexpr double kCubicA = -0.5;

struct Tap {
  int index;
  double weight;
};

// Per-output-sample taps along one axis.
std::vector<std::vector<Tap>> axis_taps(int in_size, int out_size) {
  const double scale = static_cast<double>(out_size) / in_size;
  const double stretch = scale < 1.0 ? 1.0 / scale : 1.0;
  const double support = 2.0 * stretch;
  std::vector<std::vector<Tap>> taps(static_cast<std::size_t>(out_size));
  for (int i = 0; i < out_size; ++i) {
    const double center = (i + 0.5) / scale - 0.5;
    const int lo = static_cast<int>(std::floor(center - support));
    const int hi = static_cast<int>(std::ceil(center + support));
    double total = 0.0;
    auto& row = taps[static_cast<std::size_t>(i)];
    for (int j = lo; j <= hi; ++j) {
      const double w = cubic_kernel((j - center) / stretch);
      if (w == 0.0) continue;
      row.push_back({std::clamp(j, 0, in_size - 1), w});
      total += w;
    }
    for (auto& t : row) t.weight /= total;
  }
  return taps;
}

}  // namespace

double cubic_kernel(double x) {
  const double ax = std::abs(x);
  if (ax <= 1.0) return ((kCubicA + 2.0) * ax - (kCubicA + 3.0)) * ax * ax + 1.0;
  if (ax < 2.0) return (((ax - 5.0) * ax + 8.0) * ax - 4.0) * kCubicA;
  return 0.0;
}

Image bicubic_resample(const Image& img, int out_h, int out_w) {
  if (out_h < 1 || out_w < 1)
    throw InvalidArgument("bicubic_resample: target dims must be positive, got " + std::to_string(out_h) + "x" +
                          std::to_string(out_w));
  const int in_h = img.height();
  const int in_w = img.width();
  const auto xtaps = axis_taps(in_w, out_w);
  const auto ytaps = axis_taps(in_h, out_h);

  Image out(out_h, out_w);
  Eigen::ArrayXXd tmp(in_h, out_w);
  for (int c = 0; c < 3; ++c) {
    const auto src = img.plane(c);
    for (int y = 0; y < in_h; ++y) {
      for (int x = 0; x < out_w; ++x) {
        double acc = 0.0;
        for (const auto& t : xtaps[static_cast<std::size_t>(x)]) acc += t.weight * src(y, t.index);
        tmp(y, x) = acc;
      }
    }
    auto dst = out.plane(c);
    for (int y = 0; y < out_h; ++y) {
      for (int x = 0; x < out_w; ++x) {
        double acc = 0.0;
        for (const auto& t : ytaps[static_cast<std::size_t>(y)]) acc += t.weight * tmp(t.index, x);
        dst(y, x) = static_cast<float>(std::clamp(acc, 0.0, 1.0));
      }
    }
  }
  return out;
}

Image crop(const Image& img, int y, int x, int h, int w) {
  if (y < 0 || x < 0 || h < 1 || w < 1 || y + h > img.height() || x + w > img.width())
    throw InvalidArgument("crop: window outside image");
  Image out(h, w);
  for (int c = 0; c < 3; ++c) out.plane(c) = img.plane(c).block(y, x, h, w);
  return out;
}

std::vector<Image> crop_grid(const Image& img, int size, int stride) {
  if (size < 1 || stride < 1) throw InvalidArgument("crop_grid: size and stride must be positive");
  if (size > img.height() || size > img.width())
    throw InvalidArgument("crop_grid: crop size " + std::to_string(size) + " exceeds image " +
                          std::to_string(img.height()) + "x" + std::to_string(img.width()));
  std::vector<Image> crops;
  for (int y = 0; y + size <= img.height(); y += stride)
    for (int x = 0; x + size <= img.width(); x += stride) crops.push_back(crop(img, y, x, size, size));
  return crops;
}

}  // namespace forgesr
