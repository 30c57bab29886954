#pragma once

#include <Eigen/Core>

#include <string>
#include <vector>

#include "forgesr/core/error.hpp"
#include "forgesr/core/rng.hpp"
#include "forgesr/imgcore/image.hpp"

namespace forgesr::nn {

template <typename Scalar>
using MatrixR = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename Scalar>
using VectorC = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Batch of feature maps stored channel-major: data is C x (N*H*W) and the
/// column for (sample b, row y, col x) is (b*H + y)*W + x. Token sequences
/// use H = 1, W = sequence length.
template <typename Scalar>
struct Tensor {
  int n = 0, c = 0, h = 0, w = 0;
  MatrixR<Scalar> data;

  Tensor() = default;
  Tensor(int n_, int c_, int h_, int w_) : n(n_), c(c_), h(h_), w(w_), data(MatrixR<Scalar>::Zero(c_, Eigen::Index(n_) * h_ * w_)) {}
  Tensor(int n_, int c_, int h_, int w_, MatrixR<Scalar> d) : n(n_), c(c_), h(h_), w(w_), data(std::move(d)) {}

  Eigen::Index spatial() const { return Eigen::Index(h) * w; }
  bool same_shape(const Tensor& o) const { return n == o.n && c == o.c && h == o.h && w == o.w; }

  auto sample(int b) { return data.middleCols(b * spatial(), spatial()); }
  auto sample(int b) const { return data.middleCols(b * spatial(), spatial()); }
};

/// Learnable array with its accumulated gradient.
template <typename Scalar>
struct Param {
  std::string name;
  MatrixR<Scalar> value;
  MatrixR<Scalar> grad;

  Param() = default;
  Param(std::string n, MatrixR<Scalar> v) : name(std::move(n)), value(std::move(v)) {
    grad = MatrixR<Scalar>::Zero(value.rows(), value.cols());
  }
  void zero_grad() { grad.setZero(); }
};

template <typename Scalar>
using ParamList = std::vector<Param<Scalar>*>;

template <typename Scalar>
MatrixR<Scalar> uniform_init(Eigen::Index rows, Eigen::Index cols, double bound, Rng& rng) {
  MatrixR<Scalar> m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<Scalar>(rng.uniform(-bound, bound));
  return m;
}

// Images <-> batch tensors. Pixel columns line up with Image planes.
template <typename Scalar>
Tensor<Scalar> images_to_tensor(const std::vector<const Image*>& images) {
  if (images.empty()) throw InvalidArgument("images_to_tensor: empty batch");
  const int h = images.front()->height(), w = images.front()->width();
  Tensor<Scalar> t(static_cast<int>(images.size()), 3, h, w);
  for (int b = 0; b < t.n; ++b) {
    const Image& img = *images[static_cast<std::size_t>(b)];
    if (img.height() != h || img.width() != w) throw InvalidArgument("images_to_tensor: mixed sizes in batch");
    t.sample(b) = img.planes().matrix().template cast<Scalar>();
  }
  return t;
}

template <typename Scalar>
Tensor<Scalar> image_to_tensor(const Image& img) {
  return images_to_tensor<Scalar>({&img});
}

template <typename Scalar>
Image tensor_to_image(const Tensor<Scalar>& t, int b) {
  if (t.c != 3) throw InvalidArgument("tensor_to_image: expected 3 channels");
  Image img(t.h, t.w);
  img.planes() = t.sample(b).template cast<float>().array();
  return clamp01(std::move(img));
}

}  // namespace forgesr::nn
