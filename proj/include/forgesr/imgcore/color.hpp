#pragma once

#include <Eigen/Core>
#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "forgesr/imgcore/image.hpp"

namespace forgesr {

template <typename Scalar>
using Lab = Eigen::Matrix<Scalar, 3, 1>;
template <typename Scalar>
using Rgb = Eigen::Matrix<Scalar, 3, 1>;

/// Additive offsets applied in LAB space.
struct ShiftSpec {
  double dL = 0.0;
  double da = 0.0;
  double db = 0.0;

  bool is_identity() const { return dL == 0.0 && da == 0.0 && db == 0.0; }
  double magnitude() const { return std::sqrt(dL * dL + da * da + db * db); }
};

namespace color_detail {

template <typename Scalar>
const Eigen::Matrix<Scalar, 3, 3>& rgb_to_xyz() {
  // Linear sRGB (D65) to CIE XYZ.
  static const Eigen::Matrix<Scalar, 3, 3> m = (Eigen::Matrix<Scalar, 3, 3>() << Scalar(0.4124564),
                                                Scalar(0.3575761), Scalar(0.1804375), Scalar(0.2126729),
                                                Scalar(0.7151522), Scalar(0.0721750), Scalar(0.0193339),
                                                Scalar(0.1191920), Scalar(0.9503041))
                                                   .finished();
  return m;
}

template <typename Scalar>
const Eigen::Matrix<Scalar, 3, 3>& xyz_to_rgb() {
  static const Eigen::Matrix<Scalar, 3, 3> m = rgb_to_xyz<Scalar>().inverse();
  return m;
}

// D65 reference white as the image of sRGB white, so (1,1,1) maps to a = b = 0.
template <typename Scalar>
const Eigen::Matrix<Scalar, 3, 1>& white() {
  static const Eigen::Matrix<Scalar, 3, 1> w = rgb_to_xyz<Scalar>().rowwise().sum();
  return w;
}

template <typename Scalar>
Scalar srgb_eotf(Scalar v) {
  return v <= Scalar(0.04045) ? v / Scalar(12.92) : std::pow((v + Scalar(0.055)) / Scalar(1.055), Scalar(2.4));
}

template <typename Scalar>
Scalar srgb_oetf(Scalar v) {
  return v <= Scalar(0.0031308) ? v * Scalar(12.92) : Scalar(1.055) * std::pow(v, Scalar(1) / Scalar(2.4)) - Scalar(0.055);
}

template <typename Scalar>
Scalar lab_f(Scalar t) {
  constexpr Scalar delta = Scalar(6) / Scalar(29);
  return t > delta * delta * delta ? std::cbrt(t) : t / (Scalar(3) * delta * delta) + Scalar(4) / Scalar(29);
}

template <typename Scalar>
Scalar lab_finv(Scalar f) {
  constexpr Scalar delta = Scalar(6) / Scalar(29);
  return f > delta ? f * f * f : Scalar(3) * delta * delta * (f - Scalar(4) / Scalar(29));
}

}  // namespace color_detail

template <typename Scalar>
Lab<Scalar> srgb_to_lab(const Rgb<Scalar>& rgb) {
  using namespace color_detail;
  Eigen::Matrix<Scalar, 3, 1> lin;
  for (int c = 0; c < 3; ++c) lin(c) = srgb_eotf(rgb(c));
  const Eigen::Matrix<Scalar, 3, 1> xyz = (rgb_to_xyz<Scalar>() * lin).cwiseQuotient(white<Scalar>());
  const Scalar fx = lab_f(xyz(0)), fy = lab_f(xyz(1)), fz = lab_f(xyz(2));
  return {Scalar(116) * fy - Scalar(16), Scalar(500) * (fx - fy), Scalar(200) * (fy - fz)};
}

/// Inverse of srgb_to_lab; out-of-gamut results are clamped to [0, 1].
template <typename Scalar>
Rgb<Scalar> lab_to_srgb(const Lab<Scalar>& lab) {
  using namespace color_detail;
  const Scalar fy = (lab(0) + Scalar(16)) / Scalar(116);
  const Scalar fx = fy + lab(1) / Scalar(500);
  const Scalar fz = fy - lab(2) / Scalar(200);
  const Eigen::Matrix<Scalar, 3, 1> xyz =
      Eigen::Matrix<Scalar, 3, 1>(lab_finv(fx), lab_finv(fy), lab_finv(fz)).cwiseProduct(white<Scalar>());
  const Eigen::Matrix<Scalar, 3, 1> lin = xyz_to_rgb<Scalar>() * xyz;
  Rgb<Scalar> out;
  for (int c = 0; c < 3; ++c) {
    const Scalar l = std::clamp(lin(c), Scalar(0), Scalar(1));
    out(c) = std::clamp(srgb_oetf(l), Scalar(0), Scalar(1));
  }
  return out;
}

/// CIEDE2000 color difference with kL = kC = kH = 1.
template <typename Scalar>
Scalar ciede2000(const Lab<Scalar>& c1, const Lab<Scalar>& c2) {
  using std::atan2, std::cos, std::exp, std::sin, std::sqrt, std::pow, std::abs;
  constexpr Scalar pi = std::numbers::pi_v<Scalar>;
  constexpr Scalar deg = pi / Scalar(180);
  const Scalar pow25_7 = Scalar(6103515625);  // 25^7

  const Scalar C1 = sqrt(c1(1) * c1(1) + c1(2) * c1(2));
  const Scalar C2 = sqrt(c2(1) * c2(1) + c2(2) * c2(2));
  const Scalar Cbar7 = pow((C1 + C2) / Scalar(2), Scalar(7));
  const Scalar G = Scalar(0.5) * (Scalar(1) - sqrt(Cbar7 / (Cbar7 + pow25_7)));

  const Scalar a1p = (Scalar(1) + G) * c1(1);
  const Scalar a2p = (Scalar(1) + G) * c2(1);
  const Scalar C1p = sqrt(a1p * a1p + c1(2) * c1(2));
  const Scalar C2p = sqrt(a2p * a2p + c2(2) * c2(2));

  auto hue = [&](Scalar b, Scalar ap) {
    if (b == Scalar(0) && ap == Scalar(0)) return Scalar(0);
    Scalar h = atan2(b, ap);
    if (h < Scalar(0)) h += Scalar(2) * pi;
    return h;
  };
  const Scalar h1p = hue(c1(2), a1p);
  const Scalar h2p = hue(c2(2), a2p);

  const Scalar dLp = c2(0) - c1(0);
  const Scalar dCp = C2p - C1p;
  Scalar dhp = 0;
  if (C1p * C2p != Scalar(0)) {
    dhp = h2p - h1p;
    if (dhp > pi)
      dhp -= Scalar(2) * pi;
    else if (dhp < -pi)
      dhp += Scalar(2) * pi;
  }
  const Scalar dHp = Scalar(2) * sqrt(C1p * C2p) * sin(dhp / Scalar(2));

  const Scalar Lbarp = (c1(0) + c2(0)) / Scalar(2);
  const Scalar Cbarp = (C1p + C2p) / Scalar(2);
  Scalar hbarp = h1p + h2p;
  if (C1p * C2p != Scalar(0)) {
    if (abs(h1p - h2p) > pi) hbarp += (hbarp < Scalar(2) * pi) ? Scalar(2) * pi : -Scalar(2) * pi;
    hbarp /= Scalar(2);
  }

  const Scalar T = Scalar(1) - Scalar(0.17) * cos(hbarp - Scalar(30) * deg) + Scalar(0.24) * cos(Scalar(2) * hbarp) +
                   Scalar(0.32) * cos(Scalar(3) * hbarp + Scalar(6) * deg) -
                   Scalar(0.20) * cos(Scalar(4) * hbarp - Scalar(63) * deg);
  const Scalar dtheta = Scalar(30) * deg * exp(-pow((hbarp / deg - Scalar(275)) / Scalar(25), Scalar(2)));
  const Scalar Cbarp7 = pow(Cbarp, Scalar(7));
  const Scalar RC = Scalar(2) * sqrt(Cbarp7 / (Cbarp7 + pow25_7));
  const Scalar Lm50sq = (Lbarp - Scalar(50)) * (Lbarp - Scalar(50));
  const Scalar SL = Scalar(1) + Scalar(0.015) * Lm50sq / sqrt(Scalar(20) + Lm50sq);
  const Scalar SC = Scalar(1) + Scalar(0.045) * Cbarp;
  const Scalar SH = Scalar(1) + Scalar(0.015) * Cbarp * T;
  const Scalar RT = -sin(Scalar(2) * dtheta) * RC;

  const Scalar tL = dLp / SL;
  const Scalar tC = dCp / SC;
  const Scalar tH = dHp / SH;
  const Scalar sq = tL * tL + tC * tC + tH * tH + RT * tC * tH;
  return sq > Scalar(0) ? sqrt(sq) : Scalar(0);
}

// Whole-image conversions (double precision LAB).
LabImage srgb_to_lab(const Image& img);
Image lab_to_srgb(const LabImage& lab);

/// Converts to LAB, adds the shift to every pixel, converts back with gamut
/// clamping.
Image color_shift_lab(const Image& img, const ShiftSpec& shift);

/// Mean per-pixel CIEDE2000 between two equally sized images.
double mean_ciede2000(const Image& a, const Image& b);

}  // namespace forgesr
