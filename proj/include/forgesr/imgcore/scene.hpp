#pragma once

#include <cstdint>
#include <vector>

#include "forgesr/imgcore/image.hpp"

namespace forgesr {

/// Procedural HR stand-in: a gradient background with low-frequency noise,
/// overlaid with anti-aliased shapes carrying solid, gradient, stripe,
/// checker, and grain fills, plus thin strokes. Deterministic in seed.
Image render_scene(int height, int width, std::uint64_t seed);

/// count scenes with seeds derived from (master_seed, "scene", i).
std::vector<Image> render_scenes(int count, int height, int width, std::uint64_t master_seed);

}  // namespace forgesr
