#pragma once

#include <cstdint>
#include <vector>

#include "forgesr/imgcore/image.hpp"

namespace forgesr::recon {

/// Patch indices are row-major over the patch grid; both lists are sorted.
struct MaeMask {
  std::vector<int> visible;
  std::vector<int> masked;
};

/// Random patch mask with |masked| = round(ratio * patch count).
MaeMask mae_mask(int height, int width, int patch, double ratio, std::uint64_t seed);
MaeMask mae_mask(const Image& img, int patch, double ratio, std::uint64_t seed);

}  // namespace forgesr::recon
