#pragma once

// Independent reference implementations shared by the unit and acceptance
// tests. They are written for clarity, not speed, and share no code with the
// library beyond the Image container.

#include <algorithm>
#include <array>
#include <cmath>

#include "forgesr/imgcore/image.hpp"

namespace oracle {

struct CiedePair {
  std::array<double, 3> lab1;
  std::array<double, 3> lab2;
  double delta_e;
};

// 34-pair CIEDE2000 verification set; values at full precision from an
// independent implementation (tests/oracles/ciede2000_oracle.py).
inline const CiedePair kCiedePairs[] = {
#include "data/ciede2000_pairs.inc"
};

// Keys cubic with a = -0.5, written in expanded polynomial form.
inline double keys(double x) {
  x = std::abs(x);
  if (x < 1.0) return 1.5 * x * x * x - 2.5 * x * x + 1.0;
  if (x < 2.0) return -0.5 * x * x * x + 2.5 * x * x - 4.0 * x + 2.0;
  return 0.0;
}

// Direct 2-D convolution: every input pixel (with edge replication over a
// generous margin) weighted by the widened kernel, then normalized.
inline double bicubic_pixel(const forgesr::Image& img, int c, int oy, int ox, int out_h, int out_w) {
  const double sy = static_cast<double>(img.height()) / out_h;
  const double sx = static_cast<double>(img.width()) / out_w;
  const double wy = std::max(1.0, sy), wx = std::max(1.0, sx);
  const double cy = (oy + 0.5) * sy - 0.5, cx = (ox + 0.5) * sx - 0.5;
  double num = 0.0, den = 0.0;
  for (int j = -3 * img.height(); j < 4 * img.height(); ++j) {
    const double ky = keys((j - cy) / wy);
    if (ky == 0.0) continue;
    for (int i = -3 * img.width(); i < 4 * img.width(); ++i) {
      const double kx = keys((i - cx) / wx);
      if (kx == 0.0) continue;
      const int yy = std::clamp(j, 0, img.height() - 1), xx = std::clamp(i, 0, img.width() - 1);
      num += ky * kx * img(c, yy, xx);
      den += ky * kx;
    }
  }
  return std::clamp(num / den, 0.0, 1.0);
}

// SSIM evaluated window by window with the centred variance formula.
inline double ssim(const forgesr::Image& a, const forgesr::Image& b) {
  constexpr int n = 11;
  constexpr double sigma = 1.5, c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
  double g[n][n], total = 0.0;
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x) {
      g[y][x] = std::exp(-((y - 5) * (y - 5) + (x - 5) * (x - 5)) / (2 * sigma * sigma));
      total += g[y][x];
    }
  for (auto& row : g)
    for (double& v : row) v /= total;
  double acc = 0.0;
  int windows = 0;
  for (int c = 0; c < 3; ++c)
    for (int oy = 0; oy + n <= a.height(); ++oy)
      for (int ox = 0; ox + n <= a.width(); ++ox) {
        double mx = 0, my = 0;
        for (int y = 0; y < n; ++y)
          for (int x = 0; x < n; ++x) {
            mx += g[y][x] * a(c, oy + y, ox + x);
            my += g[y][x] * b(c, oy + y, ox + x);
          }
        double vx = 0, vy = 0, cov = 0;
        for (int y = 0; y < n; ++y)
          for (int x = 0; x < n; ++x) {
            const double dx = a(c, oy + y, ox + x) - mx, dy = b(c, oy + y, ox + x) - my;
            vx += g[y][x] * dx * dx;
            vy += g[y][x] * dy * dy;
            cov += g[y][x] * dx * dy;
          }
        acc += ((2 * mx * my + c1) * (2 * cov + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2));
        ++windows;
      }
  return acc / windows;
}

}  // namespace oracle
