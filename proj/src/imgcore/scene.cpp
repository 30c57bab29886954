#include "forgesr/imgcore/scene.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "forgesr/core/parallel.hpp"
#include "forgesr/core/rng.hpp"
#include "forgesr/core/seed.hpp"

namespace forgesr {
namespace {

using Color = std::array<double, 3>;
constexpr double kPi = std::numbers::pi;

Color hsv(double h, double s, double v) {
  const double hh = (h - std::floor(h)) * 6.0;
  const int i = static_cast<int>(hh) % 6;
  const double f = hh - std::floor(hh);
  const double p = v * (1 - s), q = v * (1 - s * f), t = v * (1 - s * (1 - f));
  switch (i) {
    case 0: return {v, t, p};
    case 1: return {q, v, p};
    case 2: return {p, v, t};
    case 3: return {p, q, v};
    case 4: return {t, p, v};
    default: return {v, p, q};
  }
}

Color random_color(Rng& rng) {
  return hsv(rng.uniform(), rng.uniform(0.05, 0.9), rng.uniform(0.15, 1.0));
}

// Bilinearly interpolated value noise on a coarse grid, range about [-1, 1].
class ValueNoise {
public:
  ValueNoise(Rng& rng, int cells) : cells_(cells), grid_((cells + 1) * (cells + 1)) {
    for (auto& v : grid_) v = rng.uniform(-1.0, 1.0);
  }
  double operator()(double u, double v) const {
    const double x = std::clamp(u, 0.0, 1.0) * cells_, y = std::clamp(v, 0.0, 1.0) * cells_;
    const int x0 = std::min(static_cast<int>(x), cells_ - 1), y0 = std::min(static_cast<int>(y), cells_ - 1);
    const double fx = x - x0, fy = y - y0;
    const double sx = fx * fx * (3 - 2 * fx), sy = fy * fy * (3 - 2 * fy);
    auto at = [&](int i, int j) { return grid_[static_cast<std::size_t>(j * (cells_ + 1) + i)]; };
    const double a = at(x0, y0) + sx * (at(x0 + 1, y0) - at(x0, y0));
    const double b = at(x0, y0 + 1) + sx * (at(x0 + 1, y0 + 1) - at(x0, y0 + 1));
    return a + sy * (b - a);
  }

private:
  int cells_;
  std::vector<double> grid_;
};

enum class ShapeKind { kEllipse, kRect, kTriangle, kRing, kBand };
enum class FillKind { kSolid, kGradient, kStripes, kChecker, kGrain };

struct Shape {
  ShapeKind kind;
  FillKind fill;
  double cx, cy, rx, ry, angle, ca, sa;
  double inner;  // ring inner radius fraction
  std::array<double, 6> tri;
  Color c0, c1;
  double freq, phase, alpha;
  std::uint64_t grain_seed;

  // Unit-square coordinates.
  bool contains(double x, double y) const {
    const double dx = x - cx, dy = y - cy;
    const double u = ca * dx + sa * dy, v = -sa * dx + ca * dy;
    switch (kind) {
      case ShapeKind::kEllipse: return (u * u) / (rx * rx) + (v * v) / (ry * ry) <= 1.0;
      case ShapeKind::kRect: return std::abs(u) <= rx && std::abs(v) <= ry;
      case ShapeKind::kRing: {
        const double r = (u * u) / (rx * rx) + (v * v) / (ry * ry);
        return r <= 1.0 && r >= inner * inner;
      }
      case ShapeKind::kBand: return std::abs(v) <= ry;
      case ShapeKind::kTriangle: {
        auto side = [&](int i, int j) {
          return (tri[j * 2] - tri[i * 2]) * (y - tri[i * 2 + 1]) - (tri[j * 2 + 1] - tri[i * 2 + 1]) * (x - tri[i * 2]);
        };
        const double d0 = side(0, 1), d1 = side(1, 2), d2 = side(2, 0);
        const bool neg = d0 < 0 || d1 < 0 || d2 < 0, pos = d0 > 0 || d1 > 0 || d2 > 0;
        return !(neg && pos);
      }
    }
    return false;
  }

  Color color_at(double x, double y) const {
    const double u = ca * (x - cx) + sa * (y - cy);
    const double v = -sa * (x - cx) + ca * (y - cy);
    double t = 0.0;
    switch (fill) {
      case FillKind::kSolid: return c0;
      case FillKind::kGradient: t = std::clamp(0.5 + u / (2.0 * std::max(rx, 0.05)), 0.0, 1.0); break;
      case FillKind::kStripes: t = 0.5 + 0.5 * std::sin(2 * kPi * freq * u + phase); break;
      case FillKind::kChecker: {
        const int a = static_cast<int>(std::floor(u * freq)), b = static_cast<int>(std::floor(v * freq));
        t = ((a + b) & 1) ? 1.0 : 0.0;
        break;
      }
      case FillKind::kGrain: {
        // Hash of the sample position, stable for a given shape.
        std::uint64_t h = grain_seed ^ (static_cast<std::uint64_t>(std::llround(x * 4096)) * 0x9E3779B97F4A7C15ull) ^
                          (static_cast<std::uint64_t>(std::llround(y * 4096)) * 0xC2B2AE3D27D4EB4Full);
        h ^= h >> 31;
        h *= 0xBF58476D1CE4E5B9ull;
        h ^= h >> 29;
        t = 0.5 + 0.35 * (static_cast<double>(h >> 11) * 0x1.0p-53 - 0.5);
        break;
      }
    }
    return {c0[0] + t * (c1[0] - c0[0]), c0[1] + t * (c1[1] - c0[1]), c0[2] + t * (c1[2] - c0[2])};
  }
};

Shape random_shape(Rng& rng) {
  Shape s{};
  const double pick = rng.uniform();
  s.kind = pick < 0.35 ? ShapeKind::kEllipse
           : pick < 0.65 ? ShapeKind::kRect
           : pick < 0.85 ? ShapeKind::kTriangle
           : pick < 0.93 ? ShapeKind::kRing
                         : ShapeKind::kBand;
  const double fpick = rng.uniform();
  s.fill = fpick < 0.4 ? FillKind::kSolid
           : fpick < 0.6 ? FillKind::kGradient
           : fpick < 0.78 ? FillKind::kStripes
           : fpick < 0.88 ? FillKind::kChecker
                          : FillKind::kGrain;
  s.cx = rng.uniform(-0.1, 1.1);
  s.cy = rng.uniform(-0.1, 1.1);
  const double scale = std::exp(rng.uniform(std::log(0.04), std::log(0.45)));
  s.rx = scale * rng.uniform(0.5, 1.5);
  s.ry = scale * rng.uniform(0.5, 1.5);
  if (s.kind == ShapeKind::kBand) s.ry = rng.uniform(0.01, 0.06);
  s.angle = rng.uniform(0.0, kPi);
  s.ca = std::cos(s.angle);
  s.sa = std::sin(s.angle);
  s.inner = rng.uniform(0.4, 0.85);
  for (int i = 0; i < 3; ++i) {
    const double a = rng.uniform(0.0, 2 * kPi);
    const double r = scale * rng.uniform(0.6, 1.6);
    s.tri[static_cast<std::size_t>(i * 2)] = s.cx + r * std::cos(a);
    s.tri[static_cast<std::size_t>(i * 2 + 1)] = s.cy + r * std::sin(a);
  }
  s.c0 = random_color(rng);
  s.c1 = rng.uniform() < 0.5 ? random_color(rng) : Color{s.c0[0] * 0.5, s.c0[1] * 0.5, s.c0[2] * 0.5};
  s.freq = std::exp(rng.uniform(std::log(6.0), std::log(40.0)));
  s.phase = rng.uniform(0.0, 2 * kPi);
  s.alpha = rng.uniform() < 0.7 ? 1.0 : rng.uniform(0.4, 0.9);
  s.grain_seed = rng.next_u64();
  return s;
}

}  // namespace

Image render_scene(int height, int width, std::uint64_t seed) {
  if (height < 1 || width < 1) throw InvalidArgument("render_scene: dims must be positive");
  Rng rng(seed);
  constexpr int kSuper = 2;
  const int sh = height * kSuper, sw = width * kSuper;

  const Color bg0 = random_color(rng), bg1 = random_color(rng);
  const double ga = rng.uniform(0.0, 2 * kPi);
  const ValueNoise low(rng, 4);
  const ValueNoise mid(rng, 12);
  const double low_amp = rng.uniform(0.03, 0.15), mid_amp = rng.uniform(0.0, 0.06);

  std::vector<Color> canvas(static_cast<std::size_t>(sh) * sw);
  for (int y = 0; y < sh; ++y) {
    for (int x = 0; x < sw; ++x) {
      const double u = (x + 0.5) / sw, v = (y + 0.5) / sh;
      const double t = std::clamp(0.5 + (u - 0.5) * std::cos(ga) + (v - 0.5) * std::sin(ga), 0.0, 1.0);
      const double n = low_amp * low(u, v) + mid_amp * mid(u, v);
      auto& px = canvas[static_cast<std::size_t>(y) * sw + x];
      for (int c = 0; c < 3; ++c) px[static_cast<std::size_t>(c)] = bg0[c] + t * (bg1[c] - bg0[c]) + n;
    }
  }

  const int shapes = rng.range(8, 24);
  for (int k = 0; k < shapes; ++k) {
    const Shape s = random_shape(rng);
    for (int y = 0; y < sh; ++y) {
      const double v = (y + 0.5) / sh;
      for (int x = 0; x < sw; ++x) {
        const double u = (x + 0.5) / sw;
        if (!s.contains(u, v)) continue;
        const Color col = s.color_at(u, v);
        auto& px = canvas[static_cast<std::size_t>(y) * sw + x];
        for (int c = 0; c < 3; ++c)
          px[static_cast<std::size_t>(c)] = (1 - s.alpha) * px[static_cast<std::size_t>(c)] + s.alpha * col[c];
      }
    }
  }

  // Thin strokes.
  const int strokes = rng.range(0, 4);
  for (int k = 0; k < strokes; ++k) {
    const double x0 = rng.uniform(), y0 = rng.uniform(), x1 = rng.uniform(), y1 = rng.uniform();
    const double half_width = rng.uniform(0.4, 1.5) / sh;
    const Color col = random_color(rng);
    const double lx = x1 - x0, ly = y1 - y0, len2 = lx * lx + ly * ly + 1e-12;
    for (int y = 0; y < sh; ++y) {
      for (int x = 0; x < sw; ++x) {
        const double u = (x + 0.5) / sw, v = (y + 0.5) / sh;
        const double t = std::clamp(((u - x0) * lx + (v - y0) * ly) / len2, 0.0, 1.0);
        const double du = u - (x0 + t * lx), dv = v - (y0 + t * ly);
        if (du * du + dv * dv <= half_width * half_width)
          canvas[static_cast<std::size_t>(y) * sw + x] = col;
      }
    }
  }

  Image out(height, width);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      for (int c = 0; c < 3; ++c) {
        double acc = 0.0;
        for (int dy = 0; dy < kSuper; ++dy)
          for (int dx = 0; dx < kSuper; ++dx)
            acc += canvas[static_cast<std::size_t>(y * kSuper + dy) * sw + x * kSuper + dx][static_cast<std::size_t>(c)];
        out(c, y, x) = static_cast<float>(std::clamp(acc / (kSuper * kSuper), 0.0, 1.0));
      }
    }
  }
  return quantize8(std::move(out));
}

std::vector<Image> render_scenes(int count, int height, int width, std::uint64_t master_seed) {
  std::vector<Image> out(static_cast<std::size_t>(count));
  parallel_for(out.size(), [&](std::size_t i) { out[i] = render_scene(height, width, seed_for(master_seed, "scene", i)); });
  return out;
}

}  // namespace forgesr
