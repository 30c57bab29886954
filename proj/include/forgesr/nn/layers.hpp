#pragma once

#include <array>
#include <cmath>
#include <memory>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "forgesr/nn/tensor.hpp"

namespace forgesr::nn {

/// A differentiable stage. forward caches what backward needs; backward
/// accumulates parameter gradients and returns the gradient w.r.t. the input
/// of the most recent forward call.
template <typename Scalar>
class Module {
public:
  virtual ~Module() = default;
  virtual Tensor<Scalar> forward(const Tensor<Scalar>& x) = 0;
  virtual Tensor<Scalar> backward(const Tensor<Scalar>& grad) = 0;
  virtual void collect(ParamList<Scalar>& /*out*/) {}
};

namespace detail {

// cols((ci*k + ky)*k + kx, (b*ho + oy)*wo + ox) = x(ci, b, oy*s + ky - p, ox*s + kx - p)
template <typename Scalar>
void im2col(const MatrixR<Scalar>& x, int n, int c, int h, int w, int k, int s, int p, int ho, int wo,
            MatrixR<Scalar>& cols) {
  cols.setZero(Eigen::Index(c) * k * k, Eigen::Index(n) * ho * wo);
  const Eigen::Index hw = Eigen::Index(h) * w, howo = Eigen::Index(ho) * wo;
  for (int ci = 0; ci < c; ++ci) {
    const Scalar* src_c = x.row(ci).data();
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        Scalar* dst = cols.row((Eigen::Index(ci) * k + ky) * k + kx).data();
        for (int b = 0; b < n; ++b) {
          const Scalar* src = src_c + b * hw;
          Scalar* out = dst + b * howo;
          for (int oy = 0; oy < ho; ++oy) {
            const int iy = oy * s + ky - p;
            if (iy < 0 || iy >= h) continue;
            const Scalar* srow = src + Eigen::Index(iy) * w;
            Scalar* orow = out + Eigen::Index(oy) * wo;
            for (int ox = 0; ox < wo; ++ox) {
              const int ix = ox * s + kx - p;
              if (ix >= 0 && ix < w) orow[ox] = srow[ix];
            }
          }
        }
      }
    }
  }
}

// Adjoint of im2col: scatter-add columns back onto a zeroed C x (N*H*W) map.
template <typename Scalar>
void col2im(const MatrixR<Scalar>& cols, int n, int c, int h, int w, int k, int s, int p, int ho, int wo,
            MatrixR<Scalar>& x) {
  x.setZero(c, Eigen::Index(n) * h * w);
  const Eigen::Index hw = Eigen::Index(h) * w, howo = Eigen::Index(ho) * wo;
  for (int ci = 0; ci < c; ++ci) {
    Scalar* dst_c = x.row(ci).data();
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        const Scalar* src = cols.row((Eigen::Index(ci) * k + ky) * k + kx).data();
        for (int b = 0; b < n; ++b) {
          Scalar* dst = dst_c + b * hw;
          const Scalar* in = src + b * howo;
          for (int oy = 0; oy < ho; ++oy) {
            const int iy = oy * s + ky - p;
            if (iy < 0 || iy >= h) continue;
            Scalar* drow = dst + Eigen::Index(iy) * w;
            const Scalar* irow = in + Eigen::Index(oy) * wo;
            for (int ox = 0; ox < wo; ++ox) {
              const int ix = ox * s + kx - p;
              if (ix >= 0 && ix < w) drow[ix] += irow[ox];
            }
          }
        }
      }
    }
  }
}

}  // namespace detail

/// 2D convolution (cross-correlation), square kernel, zero padding.
/// A 1x1 conv on token tensors is a per-token linear layer.
template <typename Scalar>
class Conv2d : public Module<Scalar> {
public:
  Conv2d(std::string name, int in, int out, int k, int stride, int pad, Rng& rng)
      : in_(in), out_(out), k_(k), s_(stride), p_(pad) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(in) * k * k);
    weight_ = Param<Scalar>(name + ".weight", uniform_init<Scalar>(out, Eigen::Index(in) * k * k, bound, rng));
    bias_ = Param<Scalar>(name + ".bias", uniform_init<Scalar>(out, 1, bound, rng));
  }

  Tensor<Scalar> forward(const Tensor<Scalar>& x) override {
    if (x.c != in_) throw InvalidArgument(weight_.name + ": channel mismatch");
    in_shape_ = {x.n, x.h, x.w};
    ho_ = (x.h + 2 * p_ - k_) / s_ + 1;
    wo_ = (x.w + 2 * p_ - k_) / s_ + 1;
    Tensor<Scalar> y(x.n, out_, ho_, wo_);
    if (pointwise()) {
      cols_ = x.data;
    } else {
      detail::im2col(x.data, x.n, x.c, x.h, x.w, k_, s_, p_, ho_, wo_, cols_);
    }
    y.data.noalias() = weight_.value * cols_;
    y.data.colwise() += bias_.value.col(0);
    return y;
  }

  Tensor<Scalar> backward(const Tensor<Scalar>& g) override {
    weight_.grad.noalias() += g.data * cols_.transpose();
    bias_.grad.col(0) += g.data.rowwise().sum();
    Tensor<Scalar> dx(in_shape_[0], in_, in_shape_[1], in_shape_[2]);
    if (pointwise()) {
      dx.data.noalias() = weight_.value.transpose() * g.data;
    } else {
      MatrixR<Scalar> dcols = weight_.value.transpose() * g.data;
      detail::col2im(dcols, dx.n, in_, dx.h, dx.w, k_, s_, p_, ho_, wo_, dx.data);
    }
    return dx;
  }

  void collect(ParamList<Scalar>& out) override {
    out.push_back(&weight_);
    out.push_back(&bias_);
  }

  Param<Scalar>& weight() { return weight_; }
  Param<Scalar>& bias() { return bias_; }

private:
  bool pointwise() const { return k_ == 1 && s_ == 1 && p_ == 0; }

  int in_, out_, k_, s_, p_;
  Param<Scalar> weight_, bias_;
  MatrixR<Scalar> cols_;
  std::array<int, 3> in_shape_{};
  int ho_ = 0, wo_ = 0;
};

template <typename Scalar>
std::unique_ptr<Conv2d<Scalar>> make_linear(std::string name, int in, int out, Rng& rng) {
  return std::make_unique<Conv2d<Scalar>>(std::move(name), in, out, 1, 1, 0, rng);
}

/// Transposed convolution, the adjoint of Conv2d in its input.
/// Output size (H-1)*stride - 2*pad + k. Weight layout in x (out*k*k).
template <typename Scalar>
class ConvTranspose2d : public Module<Scalar> {
public:
  ConvTranspose2d(std::string name, int in, int out, int k, int stride, int pad, Rng& rng)
      : in_(in), out_(out), k_(k), s_(stride), p_(pad) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(out) * k * k);
    weight_ = Param<Scalar>(name + ".weight", uniform_init<Scalar>(in, Eigen::Index(out) * k * k, bound, rng));
    bias_ = Param<Scalar>(name + ".bias", uniform_init<Scalar>(out, 1, bound, rng));
  }

  Tensor<Scalar> forward(const Tensor<Scalar>& x) override {
    if (x.c != in_) throw InvalidArgument(weight_.name + ": channel mismatch");
    x_ = x;
    const int ho = (x.h - 1) * s_ - 2 * p_ + k_;
    const int wo = (x.w - 1) * s_ - 2 * p_ + k_;
    MatrixR<Scalar> cols = weight_.value.transpose() * x.data;
    Tensor<Scalar> y(x.n, out_, ho, wo);
    detail::col2im(cols, x.n, out_, ho, wo, k_, s_, p_, x.h, x.w, y.data);
    y.data.colwise() += bias_.value.col(0);
    return y;
  }

  Tensor<Scalar> backward(const Tensor<Scalar>& g) override {
    MatrixR<Scalar> gcols;
    detail::im2col(g.data, g.n, out_, g.h, g.w, k_, s_, p_, x_.h, x_.w, gcols);
    weight_.grad.noalias() += x_.data * gcols.transpose();
    bias_.grad.col(0) += g.data.rowwise().sum();
    Tensor<Scalar> dx(x_.n, in_, x_.h, x_.w);
    dx.data.noalias() = weight_.value * gcols;
    return dx;
  }

  void collect(ParamList<Scalar>& out) override {
    out.push_back(&weight_);
    out.push_back(&bias_);
  }

private:
  int in_, out_, k_, s_, p_;
  Param<Scalar> weight_, bias_;
  Tensor<Scalar> x_;
};

/// Sub-pixel rearrangement: (C*r*r, H, W) -> (C, H*r, W*r) with
/// out(c, y*r + i, x*r + j) = in(c*r*r + i*r + j, y, x).
template <typename Scalar>
class PixelShuffle : public Module<Scalar> {
public:
  explicit PixelShuffle(int r) : r_(r) {}

  Tensor<Scalar> forward(const Tensor<Scalar>& x) override {
    if (x.c % (r_ * r_) != 0) throw InvalidArgument("PixelShuffle: channels not divisible by r^2");
    Tensor<Scalar> y(x.n, x.c / (r_ * r_), x.h * r_, x.w * r_);
    for_each(x.n, y.c, x.h, x.w, [&](int lc, Eigen::Index lcol, int c, Eigen::Index hcol) { y.data(c, hcol) = x.data(lc, lcol); });
    return y;
  }

  Tensor<Scalar> backward(const Tensor<Scalar>& g) override {
    Tensor<Scalar> dx(g.n, g.c * r_ * r_, g.h / r_, g.w / r_);
    for_each(dx.n, g.c, dx.h, dx.w, [&](int lc, Eigen::Index lcol, int c, Eigen::Index hcol) { dx.data(lc, lcol) = g.data(c, hcol); });
    return dx;
  }

private:
  // Visits every (low channel, low column) <-> (high channel, high column) pair.
  template <typename F>
  void for_each(int n, int hc, int lh, int lw, F&& f) const {
    const int hh = lh * r_, hw = lw * r_;
    for (int c = 0; c < hc; ++c)
      for (int i = 0; i < r_; ++i)
        for (int j = 0; j < r_; ++j) {
          const int lc = (c * r_ + i) * r_ + j;
          for (int b = 0; b < n; ++b)
            for (int y = 0; y < lh; ++y)
              for (int x = 0; x < lw; ++x)
                f(lc, (Eigen::Index(b) * lh + y) * lw + x, c, (Eigen::Index(b) * hh + y * r_ + i) * hw + x * r_ + j);
        }
  }

  int r_;
};

template <typename Scalar>
class ReLU : public Module<Scalar> {
public:
  Tensor<Scalar> forward(const Tensor<Scalar>& x) override {
    mask_ = (x.data.array() > Scalar(0)).template cast<Scalar>();
    Tensor<Scalar> y = x;
    y.data = x.data.cwiseMax(Scalar(0));
    return y;
  }
  Tensor<Scalar> backward(const Tensor<Scalar>& g) override {
    Tensor<Scalar> dx = g;
    dx.data = (g.data.array() * mask_.array()).matrix();
    return dx;
  }

private:
  MatrixR<Scalar> mask_;
};

template <typename Scalar>
class Sigmoid : public Module<Scalar> {
public:
  Tensor<Scalar> forward(const Tensor<Scalar>& x) override {
    Tensor<Scalar> y = x;
    y.data = (Scalar(1) / (Scalar(1) + (-x.data.array()).exp())).matrix();
    y_ = y.data;
    return y;
  }
  Tensor<Scalar> backward(const Tensor<Scalar>& g) override {
    Tensor<Scalar> dx = g;
    dx.data = (g.data.array() * y_.array() * (Scalar(1) - y_.array())).matrix();
    return dx;
  }

private:
  MatrixR<Scalar> y_;
};

/// Exact (erf) GELU.
template <typename Scalar>
class GELU : public Module<Scalar> {
public:
  Tensor<Scalar> forward(const Tensor<Scalar>& x) override {
    x_ = x.data;
    Tensor<Scalar> y = x;
    y.data = x.data.unaryExpr([](Scalar v) { return Scalar(0.5) * v * (Scalar(1) + std::erf(v / std::numbers::sqrt2_v<Scalar>)); });
    return y;
  }
  Tensor<Scalar> backward(const Tensor<Scalar>& g) override {
    const Scalar inv_sqrt_2pi = Scalar(1) / std::sqrt(Scalar(2) * std::numbers::pi_v<Scalar>);
    Tensor<Scalar> dx = g;
    dx.data = x_.unaryExpr([&](Scalar v) {
                   const Scalar cdf = Scalar(0.5) * (Scalar(1) + std::erf(v / std::numbers::sqrt2_v<Scalar>));
                   return cdf + v * inv_sqrt_2pi * std::exp(Scalar(-0.5) * v * v);
                 }).cwiseProduct(g.data);
    return dx;
  }

private:
  MatrixR<Scalar> x_;
};

/// Normalizes each column (pixel or token) over channels.
template <typename Scalar>
class LayerNorm : public Module<Scalar> {
public:
  LayerNorm(std::string name, int dim, double eps = 1e-5) : eps_(eps) {
    gamma_ = Param<Scalar>(name + ".gamma", MatrixR<Scalar>::Ones(dim, 1));
    beta_ = Param<Scalar>(name + ".beta", MatrixR<Scalar>::Zero(dim, 1));
  }

  Tensor<Scalar> forward(const Tensor<Scalar>& x) override {
    const auto mean = x.data.colwise().mean();
    MatrixR<Scalar> centered = x.data.rowwise() - mean;
    const auto var = centered.array().square().colwise().mean();
    inv_std_ = (var + Scalar(eps_)).sqrt().inverse().matrix();
    xhat_ = (centered.array().rowwise() * inv_std_.row(0).array()).matrix();
    Tensor<Scalar> y = x;
    y.data = (xhat_.array().colwise() * gamma_.value.col(0).array()).matrix();
    y.data.colwise() += beta_.value.col(0);
    return y;
  }

  Tensor<Scalar> backward(const Tensor<Scalar>& g) override {
    gamma_.grad.col(0) += (g.data.array() * xhat_.array()).rowwise().sum().matrix();
    beta_.grad.col(0) += g.data.rowwise().sum();
    const MatrixR<Scalar> dxhat = (g.data.array().colwise() * gamma_.value.col(0).array()).matrix();
    const auto mean_dxhat = dxhat.colwise().mean();
    const auto mean_dxhat_xhat = (dxhat.array() * xhat_.array()).colwise().mean();
    MatrixR<Scalar> t = dxhat.rowwise() - mean_dxhat;
    t.array() -= xhat_.array().rowwise() * mean_dxhat_xhat;
    Tensor<Scalar> dx = g;
    dx.data = (t.array().rowwise() * inv_std_.row(0).array()).matrix();
    return dx;
  }

  void collect(ParamList<Scalar>& out) override {
    out.push_back(&gamma_);
    out.push_back(&beta_);
  }

private:
  double eps_;
  Param<Scalar> gamma_, beta_;
  MatrixR<Scalar> xhat_, inv_std_;
};

/// Mean over spatial positions: (N, C, H, W) -> (N, C, 1, 1).
template <typename Scalar>
class GlobalAvgPool : public Module<Scalar> {
public:
  Tensor<Scalar> forward(const Tensor<Scalar>& x) override {
    shape_ = {x.n, x.c, x.h, x.w};
    Tensor<Scalar> y(x.n, x.c, 1, 1);
    for (int b = 0; b < x.n; ++b) y.data.col(b) = x.sample(b).rowwise().mean();
    return y;
  }
  Tensor<Scalar> backward(const Tensor<Scalar>& g) override {
    Tensor<Scalar> dx(shape_[0], shape_[1], shape_[2], shape_[3]);
    const Scalar inv = Scalar(1) / static_cast<Scalar>(dx.spatial());
    for (int b = 0; b < dx.n; ++b) dx.sample(b).colwise() = g.data.col(b) * inv;
    return dx;
  }

private:
  std::array<int, 4> shape_{};
};

template <typename Scalar>
class Sequential : public Module<Scalar> {
public:
  Sequential() = default;

  template <typename M>
  M& add(std::unique_ptr<M> m) {
    M& ref = *m;
    layers_.push_back(std::move(m));
    return ref;
  }

  template <typename M, typename... Args>
  M& emplace(Args&&... args) {
    return add(std::make_unique<M>(std::forward<Args>(args)...));
  }

  Tensor<Scalar> forward(const Tensor<Scalar>& x) override {
    Tensor<Scalar> y = x;
    for (auto& l : layers_) y = l->forward(y);
    return y;
  }

  Tensor<Scalar> backward(const Tensor<Scalar>& g) override {
    Tensor<Scalar> d = g;
    for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) d = (*it)->backward(d);
    return d;
  }

  void collect(ParamList<Scalar>& out) override {
    for (auto& l : layers_) l->collect(out);
  }

  bool empty() const { return layers_.empty(); }

private:
  std::vector<std::unique_ptr<Module<Scalar>>> layers_;
};

/// y = x + scale * body(x).
template <typename Scalar>
class Residual : public Module<Scalar> {
public:
  explicit Residual(std::unique_ptr<Module<Scalar>> body, Scalar scale = Scalar(1)) : body_(std::move(body)), scale_(scale) {}

  Tensor<Scalar> forward(const Tensor<Scalar>& x) override {
    Tensor<Scalar> y = body_->forward(x);
    y.data = x.data + scale_ * y.data;
    return y;
  }
  Tensor<Scalar> backward(const Tensor<Scalar>& g) override {
    Tensor<Scalar> scaled = g;
    scaled.data *= scale_;
    Tensor<Scalar> dx = body_->backward(scaled);
    dx.data += g.data;
    return dx;
  }
  void collect(ParamList<Scalar>& out) override { body_->collect(out); }

private:
  std::unique_ptr<Module<Scalar>> body_;
  Scalar scale_;
};

}  // namespace forgesr::nn
