#include "forgesr/recon/mae_mask.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "forgesr/core/rng.hpp"

namespace forgesr::recon {

MaeMask mae_mask(int height, int width, int patch, double ratio, std::uint64_t seed) {
  if (patch < 1 || height < 1 || width < 1 || height % patch != 0 || width % patch != 0)
    throw InvalidArgument("mae_mask: image sides must be positive multiples of the patch size");
  if (!(ratio >= 0.0 && ratio < 1.0)) throw InvalidArgument("mae_mask: ratio must be in [0, 1)");
  const int total = (height / patch) * (width / patch);
  const int n_masked = static_cast<int>(std::lround(ratio * total));

  std::vector<int> order(static_cast<std::size_t>(total));
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  rng.shuffle(order.begin(), order.end());

  MaeMask m;
  m.masked.assign(order.begin(), order.begin() + n_masked);
  m.visible.assign(order.begin() + n_masked, order.end());
  std::sort(m.masked.begin(), m.masked.end());
  std::sort(m.visible.begin(), m.visible.end());
  return m;
}

MaeMask mae_mask(const Image& img, int patch, double ratio, std::uint64_t seed) {
  return mae_mask(img.height(), img.width(), patch, ratio, seed);
}

}  // namespace forgesr::recon
