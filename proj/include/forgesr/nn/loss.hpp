#pragma once

#include <cmath>
#include <vector>

#include "forgesr/nn/tensor.hpp"

namespace forgesr::nn {

template <typename Scalar>
struct LossGrad {
  double value = 0.0;
  Tensor<Scalar> grad;
};

/// Mean squared error over every element.
template <typename Scalar>
LossGrad<Scalar> mse_loss(const Tensor<Scalar>& pred, const Tensor<Scalar>& target) {
  if (!pred.same_shape(target)) throw InvalidArgument("mse_loss: shape mismatch");
  LossGrad<Scalar> out;
  const MatrixR<Scalar> diff = pred.data - target.data;
  const auto count = static_cast<double>(diff.size());
  out.value = diff.template cast<double>().squaredNorm() / count;
  out.grad = pred;
  out.grad.data = diff * static_cast<Scalar>(2.0 / count);
  return out;
}

/// Mean absolute error; the subgradient at 0 is 0.
template <typename Scalar>
LossGrad<Scalar> l1_loss(const Tensor<Scalar>& pred, const Tensor<Scalar>& target) {
  if (!pred.same_shape(target)) throw InvalidArgument("l1_loss: shape mismatch");
  LossGrad<Scalar> out;
  const MatrixR<Scalar> diff = pred.data - target.data;
  const auto count = static_cast<double>(diff.size());
  out.value = diff.template cast<double>().cwiseAbs().sum() / count;
  out.grad = pred;
  out.grad.data = diff.unaryExpr([](Scalar v) { return v > Scalar(0) ? Scalar(1) : (v < Scalar(0) ? Scalar(-1) : Scalar(0)); }) *
                  static_cast<Scalar>(1.0 / count);
  return out;
}

/// Softmax cross-entropy, averaged over the batch. logits: (N, K, 1, 1).
template <typename Scalar>
LossGrad<Scalar> cross_entropy(const Tensor<Scalar>& logits, const std::vector<int>& labels) {
  if (static_cast<int>(labels.size()) != logits.n || logits.spatial() != 1)
    throw InvalidArgument("cross_entropy: expects one label per sample and (N, K, 1, 1) logits");
  LossGrad<Scalar> out;
  out.grad = logits;
  double total = 0.0;
  for (int b = 0; b < logits.n; ++b) {
    const VectorC<double> z = logits.data.col(b).template cast<double>();
    const double m = z.maxCoeff();
    const VectorC<double> e = (z.array() - m).exp().matrix();
    const double s = e.sum();
    total += -(z(labels[static_cast<std::size_t>(b)]) - m - std::log(s));
    VectorC<double> p = e / s;
    p(labels[static_cast<std::size_t>(b)]) -= 1.0;
    out.grad.data.col(b) = (p / logits.n).template cast<Scalar>();
  }
  out.value = total / logits.n;
  return out;
}

}  // namespace forgesr::nn
