#include "forgesr/imgcore/degrade.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "forgesr/core/rng.hpp"
#include "forgesr/imgcore/image_io.hpp"
#include "forgesr/imgcore/resample.hpp"

namespace forgesr {
namespace {

constexpr std::array<std::string_view, 10> kNames = {
    "gaussian-noise", "shot-noise", "impulse-noise", "gaussian-blur", "defocus-blur",
    "motion-blur",    "jpeg-compression", "pixelate", "contrast", "brightness",
};

// Severity tables, index = severity - 1.
constexpr std::array<double, 5> kGaussianNoiseSigma = {0.04, 0.08, 0.12, 0.15, 0.18};
constexpr std::array<double, 5> kShotNoiseRate = {500, 250, 100, 75, 50};
constexpr std::array<double, 5> kImpulseAmount = {0.01, 0.02, 0.05, 0.08, 0.14};
constexpr std::array<double, 5> kGaussianBlurSigma = {0.4, 0.6, 0.7, 0.8, 1.0};
constexpr std::array<double, 5> kDefocusRadius = {0.5, 1.0, 1.5, 2.0, 2.5};
constexpr std::array<double, 5> kMotionLength = {3, 5, 7, 9, 11};
constexpr std::array<double, 5> kPixelateFactor = {0.9, 0.8, 0.7, 0.6, 0.5};
constexpr std::array<double, 5> kContrastFactor = {0.4, 0.3, 0.2, 0.1, 0.05};
constexpr std::array<double, 5> kBrightnessShift = {0.1, 0.2, 0.3, 0.4, 0.5};

using Kernel = Eigen::ArrayXXd;

// Dense 2D correlation with a normalized kernel and replicated borders.
Image convolve(const Image& img, Kernel k) {
  k /= k.sum();
  const int kh = static_cast<int>(k.rows()), kw = static_cast<int>(k.cols());
  const int oy = kh / 2, ox = kw / 2;
  const int h = img.height(), w = img.width();
  Image out(h, w);
  for (int c = 0; c < 3; ++c) {
    const auto src = img.plane(c);
    auto dst = out.plane(c);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        double acc = 0.0;
        for (int i = 0; i < kh; ++i) {
          const int sy = std::clamp(y + i - oy, 0, h - 1);
          for (int j = 0; j < kw; ++j) {
            if (k(i, j) == 0.0) continue;
            acc += k(i, j) * src(sy, std::clamp(x + j - ox, 0, w - 1));
          }
        }
        dst(y, x) = static_cast<float>(std::clamp(acc, 0.0, 1.0));
      }
    }
  }
  return out;
}

// Anti-aliased disk by 8x8 supersampling of each kernel cell.
Kernel disk_kernel(double radius) {
  const int r = static_cast<int>(std::ceil(radius));
  Kernel k = Kernel::Zero(2 * r + 1, 2 * r + 1);
  constexpr int kSub = 8;
  for (int i = -r; i <= r; ++i) {
    for (int j = -r; j <= r; ++j) {
      int inside = 0;
      for (int si = 0; si < kSub; ++si) {
        for (int sj = 0; sj < kSub; ++sj) {
          const double dy = i - 0.5 + (si + 0.5) / kSub;
          const double dx = j - 0.5 + (sj + 0.5) / kSub;
          if (dy * dy + dx * dx <= radius * radius) ++inside;
        }
      }
      k(i + r, j + r) = inside;
    }
  }
  if (k.sum() == 0.0) k(r, r) = 1.0;
  return k;
}

// Line segment of the given length through the center at angle theta.
Kernel motion_kernel(double length, double theta) {
  const int r = static_cast<int>(std::ceil(length / 2.0));
  Kernel k = Kernel::Zero(2 * r + 1, 2 * r + 1);
  const int steps = static_cast<int>(length * 8);
  for (int s = 0; s <= steps; ++s) {
    const double t = -length / 2.0 + length * s / steps;
    const double y = t * std::sin(theta), x = t * std::cos(theta);
    const int iy = std::clamp(static_cast<int>(std::lround(y)) + r, 0, 2 * r);
    const int ix = std::clamp(static_cast<int>(std::lround(x)) + r, 0, 2 * r);
    k(iy, ix) += 1.0;
  }
  return k;
}

Image nearest_resize(const Image& img, int out_h, int out_w) {
  Image out(out_h, out_w);
  for (int y = 0; y < out_h; ++y) {
    const int sy = std::min(img.height() - 1, static_cast<int>((y + 0.5) * img.height() / out_h));
    for (int x = 0; x < out_w; ++x) {
      const int sx = std::min(img.width() - 1, static_cast<int>((x + 0.5) * img.width() / out_w));
      for (int c = 0; c < 3; ++c) out(c, y, x) = img(c, sy, sx);
    }
  }
  return out;
}

void rgb_to_hsv(double r, double g, double b, double& h, double& s, double& v) {
  const double mx = std::max({r, g, b}), mn = std::min({r, g, b});
  const double d = mx - mn;
  v = mx;
  s = mx > 0.0 ? d / mx : 0.0;
  if (d <= 0.0) {
    h = 0.0;
    return;
  }
  if (mx == r)
    h = (g - b) / d;
  else if (mx == g)
    h = 2.0 + (b - r) / d;
  else
    h = 4.0 + (r - g) / d;
  h /= 6.0;
  if (h < 0.0) h += 1.0;
}

void hsv_to_rgb(double h, double s, double v, double& r, double& g, double& b) {
  const double hh = h * 6.0;
  const int i = static_cast<int>(std::floor(hh)) % 6;
  const double f = hh - std::floor(hh);
  const double p = v * (1.0 - s), q = v * (1.0 - s * f), t = v * (1.0 - s * (1.0 - f));
  switch (i) {
    case 0: r = v, g = t, b = p; break;
    case 1: r = q, g = v, b = p; break;
    case 2: r = p, g = v, b = t; break;
    case 3: r = p, g = q, b = v; break;
    case 4: r = t, g = p, b = v; break;
    default: r = v, g = p, b = q; break;
  }
}

}  // namespace

std::string_view to_string(DegradationKind kind) {
  const auto i = static_cast<std::size_t>(kind);
  if (i >= kNames.size()) throw InvalidArgument("unknown degradation kind");
  return kNames[i];
}

DegradationKind parse_degradation_kind(std::string_view name) {
  for (std::size_t i = 0; i < kNames.size(); ++i)
    if (kNames[i] == name) return static_cast<DegradationKind>(i);
  throw InvalidArgument("unknown degradation kind '" + std::string(name) + "'");
}

Image gaussian_blur(const Image& img, double sigma) {
  const int r = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  Kernel row(1, 2 * r + 1);
  for (int i = -r; i <= r; ++i) row(0, i + r) = std::exp(-(i * i) / (2.0 * sigma * sigma));
  row /= row.sum();
  const Kernel col = row.transpose();
  return convolve(convolve(img, row), col);
}

Image apply_degradation(const Image& img, const Degradation& d, std::uint64_t rng_seed) {
  if (d.severity < 1 || d.severity > 5) throw InvalidArgument("degradation severity must be in 1..5");
  const auto s = static_cast<std::size_t>(d.severity - 1);
  Rng rng(rng_seed);
  Image out = img;
  auto& p = out.planes();
  switch (d.kind) {
    case DegradationKind::kGaussianNoise: {
      const double sigma = kGaussianNoiseSigma[s];
      for (Eigen::Index i = 0; i < p.cols(); ++i)
        for (int c = 0; c < 3; ++c) p(c, i) = static_cast<float>(p(c, i) + sigma * rng.normal());
      return clamp01(std::move(out));
    }
    case DegradationKind::kShotNoise: {
      const double rate = kShotNoiseRate[s];
      for (Eigen::Index i = 0; i < p.cols(); ++i)
        for (int c = 0; c < 3; ++c)
          p(c, i) = static_cast<float>(static_cast<double>(rng.poisson(p(c, i) * rate)) / rate);
      return clamp01(std::move(out));
    }
    case DegradationKind::kImpulseNoise: {
      const double amount = kImpulseAmount[s];
      for (Eigen::Index i = 0; i < p.cols(); ++i)
        for (int c = 0; c < 3; ++c) {
          const double u = rng.uniform();
          if (u < amount / 2.0)
            p(c, i) = 0.0f;
          else if (u < amount)
            p(c, i) = 1.0f;
        }
      return out;
    }
    case DegradationKind::kGaussianBlur:
      return gaussian_blur(img, kGaussianBlurSigma[s]);
    case DegradationKind::kDefocusBlur:
      return convolve(img, disk_kernel(kDefocusRadius[s]));
    case DegradationKind::kMotionBlur:
      return convolve(img, motion_kernel(kMotionLength[s], rng.uniform(0.0, std::numbers::pi)));
    case DegradationKind::kJpegCompression:
      return jpeg_roundtrip(img, kJpegQuality[s]);
    case DegradationKind::kPixelate: {
      const int h = std::max(1, static_cast<int>(std::lround(img.height() * kPixelateFactor[s])));
      const int w = std::max(1, static_cast<int>(std::lround(img.width() * kPixelateFactor[s])));
      return nearest_resize(bicubic_resample(img, h, w), img.height(), img.width());
    }
    case DegradationKind::kContrast: {
      const float mean = p.mean();
      p = (p - mean) * static_cast<float>(kContrastFactor[s]) + mean;
      return clamp01(std::move(out));
    }
    case DegradationKind::kBrightness: {
      for (Eigen::Index i = 0; i < p.cols(); ++i) {
        double h, sat, v, r, g, b;
        rgb_to_hsv(p(0, i), p(1, i), p(2, i), h, sat, v);
        v = std::min(1.0, v + kBrightnessShift[s]);
        hsv_to_rgb(h, sat, v, r, g, b);
        p(0, i) = static_cast<float>(r);
        p(1, i) = static_cast<float>(g);
        p(2, i) = static_cast<float>(b);
      }
      return clamp01(std::move(out));
    }
  }
  throw InvalidArgument("unknown degradation kind");
}

}  // namespace forgesr
