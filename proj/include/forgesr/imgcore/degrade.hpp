#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>

#include "forgesr/imgcore/image.hpp"

namespace forgesr {

enum class DegradationKind : int {
  kGaussianNoise,
  kShotNoise,
  kImpulseNoise,
  kGaussianBlur,
  kDefocusBlur,
  kMotionBlur,
  kJpegCompression,
  kPixelate,
  kContrast,
  kBrightness,
};

inline constexpr std::array<DegradationKind, 10> kAllDegradationKinds = {
    DegradationKind::kGaussianNoise, DegradationKind::kShotNoise,       DegradationKind::kImpulseNoise,
    DegradationKind::kGaussianBlur,  DegradationKind::kDefocusBlur,     DegradationKind::kMotionBlur,
    DegradationKind::kJpegCompression, DegradationKind::kPixelate,      DegradationKind::kContrast,
    DegradationKind::kBrightness,
};

// JPEG quality per severity 1..5.
inline constexpr std::array<int, 5> kJpegQuality = {25, 18, 15, 10, 7};

std::string_view to_string(DegradationKind kind);
DegradationKind parse_degradation_kind(std::string_view name);

/// A corruption type at a severity in 1..5.
struct Degradation {
  DegradationKind kind;
  int severity;
};

/// Applies the corruption; a pure function of (img, d, rng_seed).
Image apply_degradation(const Image& img, const Degradation& d, std::uint64_t rng_seed);

/// Normalized separable Gaussian blur with replicated borders.
Image gaussian_blur(const Image& img, double sigma);

}  // namespace forgesr
