#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "forgesr/core/error.hpp"

namespace forgesr {

// Three planar channels stored as a 3 x (H*W) row-major array, so every
// channel plane is contiguous and pixel (y, x) lives at column y*W + x.
template <typename Scalar, typename Tag>
class Planar3 {
public:
  using Planes = Eigen::Array<Scalar, 3, Eigen::Dynamic, Eigen::RowMajor>;
  using PlaneMap = Eigen::Map<Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
  using ConstPlaneMap =
      Eigen::Map<const Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

  Planar3() = default;
  Planar3(int height, int width) : height_(height), width_(width) {
    if (height < 1 || width < 1) throw InvalidArgument("image dims must be positive");
    data_ = Planes::Zero(3, static_cast<Eigen::Index>(height) * width);
  }

  static Planar3 filled(int height, int width, Scalar c0, Scalar c1, Scalar c2) {
    Planar3 p(height, width);
    p.data_.row(0).setConstant(c0);
    p.data_.row(1).setConstant(c1);
    p.data_.row(2).setConstant(c2);
    return p;
  }

  int height() const { return height_; }
  int width() const { return width_; }
  Eigen::Index pixel_count() const { return data_.cols(); }
  bool empty() const { return data_.cols() == 0; }

  Scalar& operator()(int c, int y, int x) { return data_(c, static_cast<Eigen::Index>(y) * width_ + x); }
  Scalar operator()(int c, int y, int x) const {
    return data_(c, static_cast<Eigen::Index>(y) * width_ + x);
  }

  Planes& planes() { return data_; }
  const Planes& planes() const { return data_; }

  PlaneMap plane(int c) { return PlaneMap(data_.row(c).data(), height_, width_); }
  ConstPlaneMap plane(int c) const { return ConstPlaneMap(data_.row(c).data(), height_, width_); }

  bool same_dims(const Planar3& o) const { return height_ == o.height_ && width_ == o.width_; }

  template <typename Other>
  Planar3<Other, Tag> cast() const {
    Planar3<Other, Tag> out(height_, width_);
    out.planes() = data_.template cast<Other>();
    return out;
  }

  friend bool operator==(const Planar3& a, const Planar3& b) {
    return a.same_dims(b) && (a.data_ == b.data_).all();
  }

private:
  int height_ = 0;
  int width_ = 0;
  Planes data_;
};

struct SrgbTag {};
struct LabTag {};

/// sRGB raster with channel values in [0, 1].
template <typename Scalar>
using ImageT = Planar3<Scalar, SrgbTag>;
/// CIELAB raster: plane 0 is L in [0, 100], planes 1 and 2 are a and b.
template <typename Scalar>
using LabImageT = Planar3<Scalar, LabTag>;

using Image = ImageT<float>;
using LabImage = LabImageT<double>;

template <typename Scalar>
bool is_valid(const ImageT<Scalar>& img) {
  if (img.empty()) return false;
  const auto& p = img.planes();
  return p.isFinite().all() && (p >= Scalar(0)).all() && (p <= Scalar(1)).all();
}

template <typename Scalar>
ImageT<Scalar> clamp01(ImageT<Scalar> img) {
  img.planes() = img.planes().max(Scalar(0)).min(Scalar(1));
  return img;
}

// Snaps every channel to the nearest k/255, matching an 8-bit round trip.
template <typename Scalar>
ImageT<Scalar> quantize8(ImageT<Scalar> img) {
  img.planes() = ((img.planes().max(Scalar(0)).min(Scalar(1)) * Scalar(255)).round()) / Scalar(255);
  return img;
}

// Interleaved 8-bit RGB bytes in row-major pixel order.
std::vector<std::uint8_t> to_rgb8(const Image& img);
Image from_rgb8(const std::uint8_t* rgb, int height, int width);

}  // namespace forgesr
