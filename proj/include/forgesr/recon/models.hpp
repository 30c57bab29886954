#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "forgesr/nn/tensor.hpp"
#include "forgesr/recon/vq.hpp"

namespace forgesr::recon {

enum class ReconKind { vqvae, vqvae2, mae };

std::string to_string(ReconKind kind);
ReconKind parse_recon_kind(std::string_view name);

/// Architecture of a reconstruction model. The conv fields apply to the VQ
/// kinds, the transformer fields to mae.
struct ReconModelSpec {
  ReconKind kind = ReconKind::vqvae;
  int input_size = 32;

  int width = 32;
  int res_blocks = 2;
  int codebook_size = 128;
  int code_dim = 32;
  double beta = 0.25;

  int patch = 4;
  int embed_dim = 64;
  int depth = 4;
  int heads = 4;
  double mask_ratio = 0.75;
  int decoder_dim = 64;
  int decoder_depth = 2;

  bool operator==(const ReconModelSpec&) const = default;
};

ReconModelSpec default_recon_spec(ReconKind kind, int input_size = 32);

/// Total spatial reduction of the encoder: 4 (vqvae), 8 (vqvae2), patch (mae).
int downsample_factor(const ReconModelSpec& spec);

/// Throws InvalidArgument when the spec breaks its invariants.
void validate(const ReconModelSpec& spec);

nlohmann::json to_json(const ReconModelSpec& spec);
ReconModelSpec spec_from_json(const nlohmann::json& j);

/// Trainable reconstructor x -> x_hat with outputs in [0, 1].
template <typename Scalar>
class ReconModel {
public:
  explicit ReconModel(ReconModelSpec spec) : spec_(std::move(spec)) {}
  virtual ~ReconModel() = default;

  /// Reconstructs a batch (N, 3, S, S). mask_seeds holds one seed per sample
  /// and is only read by mae.
  virtual nn::Tensor<Scalar> forward(const nn::Tensor<Scalar>& x, const std::vector<std::uint64_t>& mask_seeds) = 0;

  /// Training loss of the last forward against its input x; accumulates
  /// parameter gradients.
  virtual VqLossTerms backward(const nn::Tensor<Scalar>& x) = 0;

  virtual void collect(nn::ParamList<Scalar>& out) = 0;

  /// Hook run once after the first training forward (codebook seeding).
  virtual void init_from_batch(Rng& /*rng*/) {}

  /// Training hook: reseeds codes unused since the last call from the last
  /// forward's latents. Returns the number of codes moved.
  virtual int restart_dead_codes(Rng& /*rng*/) { return 0; }

  nn::ParamList<Scalar> params() {
    nn::ParamList<Scalar> p;
    collect(p);
    return p;
  }

  const ReconModelSpec& spec() const { return spec_; }

private:
  ReconModelSpec spec_;
};

template <typename Scalar>
std::unique_ptr<ReconModel<Scalar>> make_recon_model(const ReconModelSpec& spec, std::uint64_t init_seed);

namespace detail {

// Token layout helpers shared with tests: (N, 3, H, W) <-> (N, 3*p*p, 1, T),
// token t = py*(W/p) + px, feature (c*p + dy)*p + dx.
template <typename Scalar>
nn::Tensor<Scalar> patchify(const nn::Tensor<Scalar>& img, int patch);
template <typename Scalar>
nn::Tensor<Scalar> unpatchify(const nn::Tensor<Scalar>& tokens, int patch, int height, int width);

// Fixed 2D sin-cos position table, dim x (gh*gw).
template <typename Scalar>
nn::MatrixR<Scalar> sincos_position_table(int dim, int gh, int gw);

}  // namespace detail

}  // namespace forgesr::recon
