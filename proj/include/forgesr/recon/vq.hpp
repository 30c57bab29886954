#pragma once

#include <limits>
#include <string>
#include <vector>

#include "forgesr/nn/tensor.hpp"

namespace forgesr::recon {

using nn::MatrixR;
using nn::Tensor;

/// K x d code table, one entry per row.
template <typename Scalar>
struct Codebook {
  MatrixR<Scalar> entries;

  int size() const { return static_cast<int>(entries.rows()); }
  int dim() const { return static_cast<int>(entries.cols()); }
};

template <typename Scalar>
bool is_valid(const Codebook<Scalar>& cb) {
  return cb.entries.rows() >= 2 && cb.entries.cols() >= 1 && cb.entries.allFinite();
}

template <typename Scalar>
struct Quantized {
  MatrixR<Scalar> z_q;       // N x d
  std::vector<int> indices;  // N
};

/// Nearest codebook entry per row of z (Euclidean); ties go to the lowest
/// index.
template <typename Scalar>
Quantized<Scalar> vq_quantize(const MatrixR<Scalar>& z, const MatrixR<Scalar>& entries) {
  if (z.cols() != entries.cols()) throw InvalidArgument("vq_quantize: code dim mismatch");
  if (entries.rows() < 1) throw InvalidArgument("vq_quantize: empty codebook");
  Quantized<Scalar> out;
  out.z_q.resize(z.rows(), z.cols());
  out.indices.resize(static_cast<std::size_t>(z.rows()));
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    int best = 0;
    Scalar best_d = std::numeric_limits<Scalar>::infinity();
    for (Eigen::Index k = 0; k < entries.rows(); ++k) {
      const Scalar d = (entries.row(k) - z.row(i)).squaredNorm();
      if (d < best_d) {
        best_d = d;
        best = static_cast<int>(k);
      }
    }
    out.indices[static_cast<std::size_t>(i)] = best;
    out.z_q.row(i) = entries.row(best);
  }
  return out;
}

template <typename Scalar>
Quantized<Scalar> vq_quantize(const MatrixR<Scalar>& z, const Codebook<Scalar>& cb) {
  return vq_quantize(z, cb.entries);
}

/// Loss terms. codebook = mse(sg(z_e), z_q), commit = beta * mse(z_e, sg(z_q)),
/// recon = mse(x, x_hat), total = recon + codebook + commit. Every mse is a
/// mean over all elements.
struct VqLossTerms {
  double total = 0.0;
  double recon = 0.0;
  double codebook = 0.0;
  double commit = 0.0;
};

template <typename Scalar>
VqLossTerms vqvae_loss(const Tensor<Scalar>& x, const Tensor<Scalar>& x_hat, const MatrixR<Scalar>& z_e,
                       const MatrixR<Scalar>& z_q, double beta) {
  if (!x.same_shape(x_hat)) throw InvalidArgument("vqvae_loss: image shape mismatch");
  if (z_e.rows() != z_q.rows() || z_e.cols() != z_q.cols()) throw InvalidArgument("vqvae_loss: latent shape mismatch");
  VqLossTerms t;
  t.recon = (x.data - x_hat.data).template cast<double>().squaredNorm() / static_cast<double>(x.data.size());
  const double latent_mse = z_e.size() == 0 ? 0.0 : (z_e - z_q).template cast<double>().squaredNorm() / static_cast<double>(z_e.size());
  t.codebook = latent_mse;
  t.commit = beta * latent_mse;
  t.total = t.recon + t.codebook + t.commit;
  return t;
}

/// Quantization stage of a VQ model, operating on latent maps (N, d, h, w).
///
/// forward snaps each latent column to its nearest code. backward takes the
/// gradient w.r.t. the quantized map and returns the gradient w.r.t. the
/// encoder output: the incoming gradient unchanged (straight-through) plus
/// the commitment term. The codebook term's gradient goes to the entries.
template <typename Scalar>
class VectorQuantizer {
public:
  VectorQuantizer(const std::string& name, int codes, int dim, double beta, Rng& rng) : beta_(beta) {
    if (codes < 2) throw InvalidArgument(name + ": codebook needs at least 2 entries");
    codebook_ = nn::Param<Scalar>(name + ".codebook", nn::uniform_init<Scalar>(codes, dim, 1.0 / codes, rng));
  }

  Tensor<Scalar> forward(const Tensor<Scalar>& z_e) {
    if (z_e.c != dim()) throw InvalidArgument(codebook_.name + ": latent channel mismatch");
    z_e_ = z_e.data.transpose();
    Quantized<Scalar> q = vq_quantize(z_e_, codebook_.value);
    indices_ = std::move(q.indices);
    z_q_ = std::move(q.z_q);
    hits_.resize(static_cast<std::size_t>(codebook_.value.rows()), 0);
    for (int k : indices_) ++hits_[static_cast<std::size_t>(k)];
    Tensor<Scalar> out(z_e.n, z_e.c, z_e.h, z_e.w);
    out.data = z_q_.transpose();
    return out;
  }

  /// Latent mse between the last forward's encoder output and its codes.
  double latent_mse() const {
    return (z_e_ - z_q_).template cast<double>().squaredNorm() / static_cast<double>(z_e_.size());
  }

  Tensor<Scalar> backward(const Tensor<Scalar>& g_zq) {
    const Scalar scale = Scalar(2.0 / static_cast<double>(z_e_.size()));
    const MatrixR<Scalar> diff = z_e_ - z_q_;  // N x d
    for (std::size_t i = 0; i < indices_.size(); ++i)
      codebook_.grad.row(indices_[i]) -= scale * diff.row(static_cast<Eigen::Index>(i));
    Tensor<Scalar> g = g_zq;
    g.data += (Scalar(beta_) * scale) * diff.transpose();
    return g;
  }

  void collect(nn::ParamList<Scalar>& out) { out.push_back(&codebook_); }

  /// Overwrites entries with rows drawn from the latents of the last forward;
  /// used once at the start of training so no code starts far from the data.
  void init_from_latents(Rng& rng) {
    for (Eigen::Index k = 0; k < codebook_.value.rows(); ++k)
      codebook_.value.row(k) = z_e_.row(static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(z_e_.rows()))));
  }

  /// Moves every code that no forward picked since the last call onto a
  /// random latent of the last forward, then clears the counts. Returns the
  /// number of codes moved.
  int restart_dead_codes(Rng& rng) {
    int moved = 0;
    for (std::size_t k = 0; k < hits_.size(); ++k) {
      if (hits_[k] == 0) {
        codebook_.value.row(static_cast<Eigen::Index>(k)) =
            z_e_.row(static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(z_e_.rows()))));
        ++moved;
      }
      hits_[k] = 0;
    }
    return moved;
  }

  int dim() const { return static_cast<int>(codebook_.value.cols()); }
  double beta() const { return beta_; }
  const std::vector<int>& indices() const { return indices_; }
  nn::Param<Scalar>& codebook() { return codebook_; }

private:
  double beta_;
  nn::Param<Scalar> codebook_;
  MatrixR<Scalar> z_e_, z_q_;
  std::vector<int> indices_;
  std::vector<int> hits_;
};

}  // namespace forgesr::recon
