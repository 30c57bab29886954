#pragma once

#include "forgesr/imgcore/image.hpp"

namespace forgesr {

inline constexpr double kPsnrCapDb = 100.0;
inline constexpr int kSsimWindow = 11;
inline constexpr double kSsimSigma = 1.5;
inline constexpr double kSsimK1 = 0.01;
inline constexpr double kSsimK2 = 0.03;

/// Mean squared error over all RGB channels.
double mse(const Image& a, const Image& b);

/// PSNR in dB with peak 1 over RGB; 100 dB when MSE < 1e-10.
double psnr(const Image& a, const Image& b);

/// Mean SSIM over all valid 11x11 Gaussian (sigma 1.5) windows, computed per
/// RGB channel and averaged. Requires both dims >= 11.
double ssim(const Image& a, const Image& b);

}  // namespace forgesr
