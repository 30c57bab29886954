#include "forgesr/imgcore/metrics.hpp"

#include <array>
#include <cmath>

namespace forgesr {
namespace {

std::array<double, kSsimWindow> gaussian_window() {
  std::array<double, kSsimWindow> w{};
  double total = 0.0;
  for (int i = 0; i < kSsimWindow; ++i) {
    const double d = i - (kSsimWindow - 1) / 2.0;
    w[static_cast<std::size_t>(i)] = std::exp(-d * d / (2.0 * kSsimSigma * kSsimSigma));
    total += w[static_cast<std::size_t>(i)];
  }
  for (auto& v : w) v /= total;
  return w;
}

// Separable "valid" filtering: output is (H-10) x (W-10).
Eigen::ArrayXXd filter_valid(const Eigen::ArrayXXd& src, const std::array<double, kSsimWindow>& w) {
  const auto h = src.rows(), wd = src.cols();
  const auto oh = h - kSsimWindow + 1, ow = wd - kSsimWindow + 1;
  Eigen::ArrayXXd tmp = Eigen::ArrayXXd::Zero(h, ow);
  for (int k = 0; k < kSsimWindow; ++k) tmp += w[static_cast<std::size_t>(k)] * src.middleCols(k, ow);
  Eigen::ArrayXXd out = Eigen::ArrayXXd::Zero(oh, ow);
  for (int k = 0; k < kSsimWindow; ++k) out += w[static_cast<std::size_t>(k)] * tmp.middleRows(k, oh);
  return out;
}

}  // namespace

double mse(const Image& a, const Image& b) {
  if (!a.same_dims(b)) throw InvalidArgument("mse: dimension mismatch");
  return (a.planes().cast<double>() - b.planes().cast<double>()).square().mean();
}

double psnr(const Image& a, const Image& b) {
  if (!a.same_dims(b)) throw InvalidArgument("psnr: dimension mismatch");
  const double m = mse(a, b);
  if (m < 1e-10) return kPsnrCapDb;
  return 10.0 * std::log10(1.0 / m);
}

double ssim(const Image& a, const Image& b) {
  if (!a.same_dims(b)) throw InvalidArgument("ssim: dimension mismatch");
  if (a.height() < kSsimWindow || a.width() < kSsimWindow)
    throw InvalidArgument("ssim: image smaller than the 11x11 window");
  const auto w = gaussian_window();
  const double c1 = (kSsimK1 * 1.0) * (kSsimK1 * 1.0);
  const double c2 = (kSsimK2 * 1.0) * (kSsimK2 * 1.0);
  double total = 0.0;
  for (int c = 0; c < 3; ++c) {
    const Eigen::ArrayXXd x = a.plane(c).cast<double>();
    const Eigen::ArrayXXd y = b.plane(c).cast<double>();
    const Eigen::ArrayXXd mx = filter_valid(x, w);
    const Eigen::ArrayXXd my = filter_valid(y, w);
    const Eigen::ArrayXXd sxx = filter_valid(x * x, w) - mx * mx;
    const Eigen::ArrayXXd syy = filter_valid(y * y, w) - my * my;
    const Eigen::ArrayXXd sxy = filter_valid(x * y, w) - mx * my;
    const Eigen::ArrayXXd num = (2.0 * mx * my + c1) * (2.0 * sxy + c2);
    const Eigen::ArrayXXd den = (mx * mx + my * my + c1) * (sxx + syy + c2);
    total += (num / den).mean();
  }
  return total / 3.0;
}

}  // namespace forgesr
