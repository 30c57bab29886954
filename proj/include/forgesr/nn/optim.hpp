#pragma once

#include <cmath>
#include <vector>

#include "forgesr/nn/tensor.hpp"

namespace forgesr::nn {

template <typename Scalar>
void zero_grad(const ParamList<Scalar>& params) {
  for (auto* p : params) p->zero_grad();
}

/// Adam with bias correction.
template <typename Scalar>
class Adam {
public:
  Adam(ParamList<Scalar> params, double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : params_(std::move(params)), lr_(lr), b1_(beta1), b2_(beta2), eps_(eps) {
    for (auto* p : params_) {
      m_.push_back(MatrixR<Scalar>::Zero(p->value.rows(), p->value.cols()));
      v_.push_back(MatrixR<Scalar>::Zero(p->value.rows(), p->value.cols()));
    }
  }

  void zero_grad() { nn::zero_grad(params_); }

  void step() {
    ++t_;
    const double c1 = 1.0 - std::pow(b1_, t_);
    const double c2 = 1.0 - std::pow(b2_, t_);
    const auto step_size = static_cast<Scalar>(lr_ / c1);
    const auto inv_c2 = static_cast<Scalar>(1.0 / c2);
    for (std::size_t i = 0; i < params_.size(); ++i) {
      auto& p = *params_[i];
      m_[i] = Scalar(b1_) * m_[i] + Scalar(1 - b1_) * p.grad;
      v_[i] = Scalar(b2_) * v_[i] + Scalar(1 - b2_) * p.grad.cwiseAbs2();
      p.value.array() -= step_size * m_[i].array() / ((v_[i].array() * inv_c2).sqrt() + Scalar(eps_));
    }
  }

  void set_lr(double lr) { lr_ = lr; }
  double lr() const { return lr_; }

private:
  ParamList<Scalar> params_;
  double lr_, b1_, b2_, eps_;
  int t_ = 0;
  std::vector<MatrixR<Scalar>> m_, v_;
};

}  // namespace forgesr::nn
