#pragma once

#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "forgesr/nn/layers.hpp"

namespace forgesr::nn {

/// Multi-head self-attention over token tensors (N, D, 1, T).
template <typename Scalar>
class MultiHeadSelfAttention : public Module<Scalar> {
public:
  MultiHeadSelfAttention(const std::string& name, int dim, int heads, Rng& rng)
      : dim_(dim), heads_(heads), head_dim_(dim / heads) {
    if (dim % heads != 0) throw InvalidArgument(name + ": dim not divisible by heads");
    qkv_ = make_linear<Scalar>(name + ".qkv", dim, 3 * dim, rng);
    proj_ = make_linear<Scalar>(name + ".proj", dim, dim, rng);
  }

  Tensor<Scalar> forward(const Tensor<Scalar>& x) override {
    if (x.h != 1) throw InvalidArgument("attention expects token tensors with h == 1");
    const int n = x.n, t = x.w;
    qkv_out_ = qkv_->forward(x);
    const Scalar scale = Scalar(1) / std::sqrt(static_cast<Scalar>(head_dim_));
    attn_.assign(static_cast<std::size_t>(n * heads_), MatrixR<Scalar>());
    Tensor<Scalar> mixed(n, dim_, 1, t);
    for (int b = 0; b < n; ++b) {
      for (int hd = 0; hd < heads_; ++hd) {
        const auto q = qkv_out_.data.block(hd * head_dim_, Eigen::Index(b) * t, head_dim_, t);
        const auto k = qkv_out_.data.block(dim_ + hd * head_dim_, Eigen::Index(b) * t, head_dim_, t);
        const auto v = qkv_out_.data.block(2 * dim_ + hd * head_dim_, Eigen::Index(b) * t, head_dim_, t);
        // scores(i, j): query i against key j; softmax over j.
        MatrixR<Scalar> a = scale * (q.transpose() * k);
        for (Eigen::Index i = 0; i < a.rows(); ++i) {
          const Scalar m = a.row(i).maxCoeff();
          a.row(i) = (a.row(i).array() - m).exp().matrix();
          a.row(i) /= a.row(i).sum();
        }
        mixed.data.block(hd * head_dim_, Eigen::Index(b) * t, head_dim_, t).noalias() = v * a.transpose();
        attn_[static_cast<std::size_t>(b * heads_ + hd)] = std::move(a);
      }
    }
    return proj_->forward(mixed);
  }

  Tensor<Scalar> backward(const Tensor<Scalar>& g) override {
    const Tensor<Scalar> dmixed = proj_->backward(g);
    const int n = dmixed.n, t = dmixed.w;
    const Scalar scale = Scalar(1) / std::sqrt(static_cast<Scalar>(head_dim_));
    Tensor<Scalar> dqkv(n, 3 * dim_, 1, t);
    for (int b = 0; b < n; ++b) {
      for (int hd = 0; hd < heads_; ++hd) {
        const auto& a = attn_[static_cast<std::size_t>(b * heads_ + hd)];
        const auto q = qkv_out_.data.block(hd * head_dim_, Eigen::Index(b) * t, head_dim_, t);
        const auto k = qkv_out_.data.block(dim_ + hd * head_dim_, Eigen::Index(b) * t, head_dim_, t);
        const auto v = qkv_out_.data.block(2 * dim_ + hd * head_dim_, Eigen::Index(b) * t, head_dim_, t);
        const auto dout = dmixed.data.block(hd * head_dim_, Eigen::Index(b) * t, head_dim_, t);
        const MatrixR<Scalar> da = dout.transpose() * v;
        dqkv.data.block(2 * dim_ + hd * head_dim_, Eigen::Index(b) * t, head_dim_, t).noalias() = dout * a;
        // Softmax Jacobian row by row.
        MatrixR<Scalar> ds = a.cwiseProduct(da);
        const VectorC<Scalar> row_dot = ds.rowwise().sum();
        ds -= (a.array().colwise() * row_dot.array()).matrix();
        dqkv.data.block(hd * head_dim_, Eigen::Index(b) * t, head_dim_, t).noalias() = scale * (k * ds.transpose());
        dqkv.data.block(dim_ + hd * head_dim_, Eigen::Index(b) * t, head_dim_, t).noalias() = scale * (q * ds);
      }
    }
    return qkv_->backward(dqkv);
  }

  void collect(ParamList<Scalar>& out) override {
    qkv_->collect(out);
    proj_->collect(out);
  }

private:
  int dim_, heads_, head_dim_;
  std::unique_ptr<Conv2d<Scalar>> qkv_, proj_;
  Tensor<Scalar> qkv_out_;
  std::vector<MatrixR<Scalar>> attn_;
};

/// Pre-norm transformer block: x + attn(ln(x)), then x + mlp(ln(x)).
template <typename Scalar>
class TransformerBlock : public Module<Scalar> {
public:
  TransformerBlock(const std::string& name, int dim, int heads, int mlp_ratio, Rng& rng) {
    auto attn = std::make_unique<Sequential<Scalar>>();
    attn->template emplace<LayerNorm<Scalar>>(name + ".ln1", dim);
    attn->template emplace<MultiHeadSelfAttention<Scalar>>(name + ".attn", dim, heads, rng);
    auto mlp = std::make_unique<Sequential<Scalar>>();
    mlp->template emplace<LayerNorm<Scalar>>(name + ".ln2", dim);
    mlp->add(make_linear<Scalar>(name + ".fc1", dim, dim * mlp_ratio, rng));
    mlp->template emplace<GELU<Scalar>>();
    mlp->add(make_linear<Scalar>(name + ".fc2", dim * mlp_ratio, dim, rng));
    body_.template emplace<Residual<Scalar>>(std::move(attn));
    body_.template emplace<Residual<Scalar>>(std::move(mlp));
  }

  Tensor<Scalar> forward(const Tensor<Scalar>& x) override { return body_.forward(x); }
  Tensor<Scalar> backward(const Tensor<Scalar>& g) override { return body_.backward(g); }
  void collect(ParamList<Scalar>& out) override { body_.collect(out); }

private:
  Sequential<Scalar> body_;
};

}  // namespace forgesr::nn
