#pragma once

#include <vector>

#include "forgesr/imgcore/image.hpp"

namespace forgesr {

/// Keys cubic convolution kernel with a = -0.5.
double cubic_kernel(double x);

/// Separable bicubic resampling to exactly out_h x out_w.
///
/// Sample centers follow the half-pixel convention. When shrinking along an
/// axis the kernel is stretched by the inverse scale (anti-aliasing); weights
/// are normalized per output sample and borders replicate edge pixels.
/// Results are clamped to [0, 1].
Image bicubic_resample(const Image& img, int out_h, int out_w);

/// All full size x size crops on a stride grid, row-major order.
std::vector<Image> crop_grid(const Image& img, int size, int stride);

/// Single crop with top-left corner (y, x).
Image crop(const Image& img, int y, int x, int h, int w);

}  // namespace forgesr
