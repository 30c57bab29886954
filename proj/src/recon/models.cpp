#include "forgesr/recon/models.hpp"

#include <cmath>

#include "forgesr/nn/attention.hpp"
#include "forgesr/nn/layers.hpp"
#include "forgesr/nn/loss.hpp"
#include "forgesr/recon/mae_mask.hpp"

namespace forgesr::recon {

using nn::Conv2d;
using nn::ConvTranspose2d;
using nn::ReLU;
using nn::Sequential;
using nn::Sigmoid;

std::string to_string(ReconKind kind) {
  switch (kind) {
    case ReconKind::vqvae: return "vqvae";
    case ReconKind::vqvae2: return "vqvae2";
    case ReconKind::mae: return "mae";
  }
  return "?";
}

ReconKind parse_recon_kind(std::string_view name) {
  if (name == "vqvae") return ReconKind::vqvae;
  if (name == "vqvae2") return ReconKind::vqvae2;
  if (name == "mae") return ReconKind::mae;
  throw InvalidArgument("unknown reconstruction model kind '" + std::string(name) + "'");
}

ReconModelSpec default_recon_spec(ReconKind kind, int input_size) {
  ReconModelSpec s;
  s.kind = kind;
  s.input_size = input_size;
  return s;
}

int downsample_factor(const ReconModelSpec& spec) {
  switch (spec.kind) {
    case ReconKind::vqvae: return 4;
    case ReconKind::vqvae2: return 8;
    case ReconKind::mae: return spec.patch;
  }
  return 1;
}

void validate(const ReconModelSpec& s) {
  auto fail = [](const std::string& what) { throw InvalidArgument("recon spec: " + what); };
  if (s.kind == ReconKind::mae && s.patch < 1) fail("patch must be >= 1");
  if (s.input_size < 1 || s.input_size % downsample_factor(s) != 0)
    fail("input_size " + std::to_string(s.input_size) + " not divisible by " + std::to_string(downsample_factor(s)));
  if (s.kind == ReconKind::mae) {
    if (s.embed_dim < 4 || s.embed_dim % 4 != 0 || s.decoder_dim < 4 || s.decoder_dim % 4 != 0)
      fail("embed_dim and decoder_dim must be positive multiples of 4");
    if (s.heads < 1 || s.embed_dim % s.heads != 0 || s.decoder_dim % s.heads != 0)
      fail("heads must divide embed_dim and decoder_dim");
    if (s.depth < 1 || s.decoder_depth < 1) fail("depth and decoder_depth must be >= 1");
    if (!(s.mask_ratio >= 0.0 && s.mask_ratio < 1.0)) fail("mask_ratio must be in [0, 1)");
    const int tokens = (s.input_size / s.patch) * (s.input_size / s.patch);
    if (std::lround(s.mask_ratio * tokens) >= tokens) fail("mask_ratio leaves no visible patch");
  } else {
    if (s.width < 1 || s.res_blocks < 0 || s.code_dim < 1) fail("width, res_blocks, code_dim out of range");
    if (s.codebook_size < 2) fail("codebook_size must be >= 2");
    if (!(s.beta >= 0.0) || !std::isfinite(s.beta)) fail("beta must be finite and >= 0");
  }
}

nlohmann::json to_json(const ReconModelSpec& s) {
  return {{"kind", to_string(s.kind)},         {"input_size", s.input_size},
          {"width", s.width},                  {"res_blocks", s.res_blocks},
          {"codebook_size", s.codebook_size},  {"code_dim", s.code_dim},
          {"beta", s.beta},                    {"patch", s.patch},
          {"embed_dim", s.embed_dim},          {"depth", s.depth},
          {"heads", s.heads},                  {"mask_ratio", s.mask_ratio},
          {"decoder_dim", s.decoder_dim},      {"decoder_depth", s.decoder_depth}};
}

ReconModelSpec spec_from_json(const nlohmann::json& j) {
  ReconModelSpec s;
  for (const auto& [key, value] : j.items()) {
    if (key == "kind") s.kind = parse_recon_kind(value.get<std::string>());
    else if (key == "input_size") s.input_size = value.get<int>();
    else if (key == "width") s.width = value.get<int>();
    else if (key == "res_blocks") s.res_blocks = value.get<int>();
    else if (key == "codebook_size") s.codebook_size = value.get<int>();
    else if (key == "code_dim") s.code_dim = value.get<int>();
    else if (key == "beta") s.beta = value.get<double>();
    else if (key == "patch") s.patch = value.get<int>();
    else if (key == "embed_dim") s.embed_dim = value.get<int>();
    else if (key == "depth") s.depth = value.get<int>();
    else if (key == "heads") s.heads = value.get<int>();
    else if (key == "mask_ratio") s.mask_ratio = value.get<double>();
    else if (key == "decoder_dim") s.decoder_dim = value.get<int>();
    else if (key == "decoder_depth") s.decoder_depth = value.get<int>();
    else throw InvalidArgument("recon spec: unknown key '" + key + "'");
  }
  validate(s);
  return s;
}

namespace detail {

template <typename Scalar>
nn::Tensor<Scalar> patchify(const nn::Tensor<Scalar>& img, int p) {
  if (img.h % p != 0 || img.w % p != 0) throw InvalidArgument("patchify: size not divisible by patch");
  const int gh = img.h / p, gw = img.w / p, t = gh * gw;
  nn::Tensor<Scalar> out(img.n, img.c * p * p, 1, t);
  for (int b = 0; b < img.n; ++b)
    for (int c = 0; c < img.c; ++c)
      for (int y = 0; y < img.h; ++y)
        for (int x = 0; x < img.w; ++x) {
          const int tok = (y / p) * gw + x / p;
          const int feat = (c * p + y % p) * p + x % p;
          out.data(feat, Eigen::Index(b) * t + tok) = img.data(c, (Eigen::Index(b) * img.h + y) * img.w + x);
        }
  return out;
}

template <typename Scalar>
nn::Tensor<Scalar> unpatchify(const nn::Tensor<Scalar>& tokens, int p, int height, int width) {
  const int gw = width / p, t = (height / p) * gw, c = tokens.c / (p * p);
  if (tokens.w != t || tokens.h != 1 || c * p * p != tokens.c) throw InvalidArgument("unpatchify: token shape mismatch");
  nn::Tensor<Scalar> out(tokens.n, c, height, width);
  for (int b = 0; b < tokens.n; ++b)
    for (int ch = 0; ch < c; ++ch)
      for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x) {
          const int tok = (y / p) * gw + x / p;
          const int feat = (ch * p + y % p) * p + x % p;
          out.data(ch, (Eigen::Index(b) * height + y) * width + x) = tokens.data(feat, Eigen::Index(b) * t + tok);
        }
  return out;
}

template <typename Scalar>
nn::MatrixR<Scalar> sincos_position_table(int dim, int gh, int gw) {
  if (dim % 4 != 0) throw InvalidArgument("sincos_position_table: dim must be a multiple of 4");
  const int q = dim / 4;
  nn::MatrixR<Scalar> table(dim, gh * gw);
  for (int gy = 0; gy < gh; ++gy)
    for (int gx = 0; gx < gw; ++gx) {
      const int col = gy * gw + gx;
      for (int i = 0; i < q; ++i) {
        const double omega = 1.0 / std::pow(10000.0, static_cast<double>(i) / q);
        table(i, col) = static_cast<Scalar>(std::sin(gy * omega));
        table(q + i, col) = static_cast<Scalar>(std::cos(gy * omega));
        table(2 * q + i, col) = static_cast<Scalar>(std::sin(gx * omega));
        table(3 * q + i, col) = static_cast<Scalar>(std::cos(gx * omega));
      }
    }
  return table;
}

}  // namespace detail

namespace {

template <typename S>
void add_res_stack(Sequential<S>& seq, const std::string& name, int width, int blocks, Rng& rng) {
  for (int i = 0; i < blocks; ++i) {
    auto body = std::make_unique<Sequential<S>>();
    const std::string base = name + ".res" + std::to_string(i);
    body->template emplace<ReLU<S>>();
    body->template emplace<Conv2d<S>>(base + ".conv0", width, width, 3, 1, 1, rng);
    body->template emplace<ReLU<S>>();
    body->template emplace<Conv2d<S>>(base + ".conv1", width, width, 1, 1, 0, rng);
    seq.template emplace<nn::Residual<S>>(std::move(body));
  }
  seq.template emplace<ReLU<S>>();
}

template <typename S>
nn::Tensor<S> centered(const nn::Tensor<S>& x) {
  nn::Tensor<S> c = x;
  c.data.array() -= S(0.5);
  return c;
}

template <typename S>
nn::Tensor<S> concat_channels(const nn::Tensor<S>& a, const nn::Tensor<S>& b) {
  nn::Tensor<S> out(a.n, a.c + b.c, a.h, a.w);
  out.data.topRows(a.c) = a.data;
  out.data.bottomRows(b.c) = b.data;
  return out;
}

template <typename S>
std::pair<nn::Tensor<S>, nn::Tensor<S>> split_channels(const nn::Tensor<S>& g, int first) {
  nn::Tensor<S> a(g.n, first, g.h, g.w, g.data.topRows(first));
  nn::Tensor<S> b(g.n, g.c - first, g.h, g.w, g.data.bottomRows(g.c - first));
  return {std::move(a), std::move(b)};
}

// Encoder stem halving resolution `halvings` times.
template <typename S>
void add_down_stem(Sequential<S>& seq, const std::string& name, int in, int width, int halvings, Rng& rng) {
  for (int i = 0; i < halvings; ++i) {
    seq.template emplace<Conv2d<S>>(name + ".down" + std::to_string(i), i == 0 ? in : width, width, 4, 2, 1, rng);
    seq.template emplace<ReLU<S>>();
  }
  seq.template emplace<Conv2d<S>>(name + ".conv", width, width, 3, 1, 1, rng);
}

// Decoder tail: width -> x2 -> x2 -> RGB in [0, 1].
template <typename S>
void add_up_tail(Sequential<S>& seq, const std::string& name, int width, Rng& rng) {
  seq.template emplace<ConvTranspose2d<S>>(name + ".up0", width, width, 4, 2, 1, rng);
  seq.template emplace<ReLU<S>>();
  seq.template emplace<ConvTranspose2d<S>>(name + ".up1", width, 3, 4, 2, 1, rng);
  seq.template emplace<Sigmoid<S>>();
}

template <typename S>
class VqVae final : public ReconModel<S> {
public:
  VqVae(const ReconModelSpec& spec, Rng& rng) : ReconModel<S>(spec), vq_("vq", spec.codebook_size, spec.code_dim, spec.beta, rng) {
    add_down_stem(enc_, "enc", 3, spec.width, 2, rng);
    add_res_stack(enc_, "enc", spec.width, spec.res_blocks, rng);
    enc_.template emplace<Conv2d<S>>("enc.proj", spec.width, spec.code_dim, 1, 1, 0, rng);

    dec_.template emplace<Conv2d<S>>("dec.conv", spec.code_dim, spec.width, 3, 1, 1, rng);
    add_res_stack(dec_, "dec", spec.width, spec.res_blocks, rng);
    add_up_tail(dec_, "dec", spec.width, rng);
  }

  nn::Tensor<S> forward(const nn::Tensor<S>& x, const std::vector<std::uint64_t>&) override {
    const nn::Tensor<S> z_e = enc_.forward(centered(x));
    x_hat_ = dec_.forward(vq_.forward(z_e));
    return x_hat_;
  }

  VqLossTerms backward(const nn::Tensor<S>& x) override {
    const auto rec = nn::mse_loss(x_hat_, x);
    enc_.backward(vq_.backward(dec_.backward(rec.grad)));
    VqLossTerms t;
    t.recon = rec.value;
    t.codebook = vq_.latent_mse();
    t.commit = vq_.beta() * t.codebook;
    t.total = t.recon + t.codebook + t.commit;
    return t;
  }

  void collect(nn::ParamList<S>& out) override {
    enc_.collect(out);
    vq_.collect(out);
    dec_.collect(out);
  }

  void init_from_batch(Rng& rng) override { vq_.init_from_latents(rng); }
  int restart_dead_codes(Rng& rng) override { return vq_.restart_dead_codes(rng); }

private:
  VectorQuantizer<S> vq_;
  Sequential<S> enc_, dec_;
  nn::Tensor<S> x_hat_;
};

// Two-level hierarchy: bottom latents at 1/4 resolution, top at 1/8. The
// bottom quantizer is conditioned on the decoded top level, and the image
// decoder sees both levels.
template <typename S>
class VqVae2 final : public ReconModel<S> {
public:
  VqVae2(const ReconModelSpec& spec, Rng& rng)
      : ReconModel<S>(spec),
        vq_top_("vq_top", spec.codebook_size, spec.code_dim, spec.beta, rng),
        vq_bottom_("vq_bottom", spec.codebook_size, spec.code_dim, spec.beta, rng) {
    const int w = spec.width, d = spec.code_dim;
    add_down_stem(enc_b_, "enc_b", 3, w, 2, rng);
    add_res_stack(enc_b_, "enc_b", w, spec.res_blocks, rng);
    add_down_stem(enc_t_, "enc_t", w, w, 1, rng);
    add_res_stack(enc_t_, "enc_t", w, spec.res_blocks, rng);
    pre_t_.template emplace<Conv2d<S>>("pre_t", w, d, 1, 1, 0, rng);

    dec_t_.template emplace<Conv2d<S>>("dec_t.conv", d, w, 3, 1, 1, rng);
    add_res_stack(dec_t_, "dec_t", w, spec.res_blocks, rng);
    dec_t_.template emplace<ConvTranspose2d<S>>("dec_t.up", w, d, 4, 2, 1, rng);
    pre_b_.template emplace<Conv2d<S>>("pre_b", w + d, d, 1, 1, 0, rng);
    up_t_.template emplace<ConvTranspose2d<S>>("up_t", d, d, 4, 2, 1, rng);

    dec_.template emplace<Conv2d<S>>("dec.conv", 2 * d, w, 3, 1, 1, rng);
    add_res_stack(dec_, "dec", w, spec.res_blocks, rng);
    add_up_tail(dec_, "dec", w, rng);
  }

  nn::Tensor<S> forward(const nn::Tensor<S>& x, const std::vector<std::uint64_t>&) override {
    const nn::Tensor<S> h_b = enc_b_.forward(centered(x));
    const nn::Tensor<S> q_t = vq_top_.forward(pre_t_.forward(enc_t_.forward(h_b)));
    const nn::Tensor<S> t_dec = dec_t_.forward(q_t);
    const nn::Tensor<S> q_b = vq_bottom_.forward(pre_b_.forward(concat_channels(h_b, t_dec)));
    x_hat_ = dec_.forward(concat_channels(q_b, up_t_.forward(q_t)));
    return x_hat_;
  }

  VqLossTerms backward(const nn::Tensor<S>& x) override {
    const int w = this->spec().width, d = this->spec().code_dim;
    const auto rec = nn::mse_loss(x_hat_, x);
    auto [g_qb, g_up] = split_channels(dec_.backward(rec.grad), d);
    nn::Tensor<S> g_qt = up_t_.backward(g_up);
    auto [g_hb, g_tdec] = split_channels(pre_b_.backward(vq_bottom_.backward(g_qb)), w);
    g_qt.data += dec_t_.backward(g_tdec).data;
    g_hb.data += enc_t_.backward(pre_t_.backward(vq_top_.backward(g_qt))).data;
    enc_b_.backward(g_hb);

    VqLossTerms t;
    t.recon = rec.value;
    t.codebook = vq_top_.latent_mse() + vq_bottom_.latent_mse();
    t.commit = this->spec().beta * t.codebook;
    t.total = t.recon + t.codebook + t.commit;
    return t;
  }

  void collect(nn::ParamList<S>& out) override {
    enc_b_.collect(out);
    enc_t_.collect(out);
    pre_t_.collect(out);
    vq_top_.collect(out);
    dec_t_.collect(out);
    pre_b_.collect(out);
    vq_bottom_.collect(out);
    up_t_.collect(out);
    dec_.collect(out);
  }

  void init_from_batch(Rng& rng) override {
    vq_top_.init_from_latents(rng);
    vq_bottom_.init_from_latents(rng);
  }
  int restart_dead_codes(Rng& rng) override { return vq_top_.restart_dead_codes(rng) + vq_bottom_.restart_dead_codes(rng); }

private:
  VectorQuantizer<S> vq_top_, vq_bottom_;
  Sequential<S> enc_b_, enc_t_, pre_t_, dec_t_, pre_b_, up_t_, dec_;
  nn::Tensor<S> x_hat_;
};

// Masked autoencoder: the encoder sees only visible patches, the decoder
// fills masked slots with a learned token and predicts every patch.
template <typename S>
class Mae final : public ReconModel<S> {
public:
  Mae(const ReconModelSpec& spec, Rng& rng) : ReconModel<S>(spec) {
    const int p = spec.patch, grid = spec.input_size / p, in = 3 * p * p;
    tokens_ = grid * grid;
    pos_ = detail::sincos_position_table<S>(spec.embed_dim, grid, grid);
    dec_pos_ = detail::sincos_position_table<S>(spec.decoder_dim, grid, grid);

    embed_.add(nn::make_linear<S>("embed", in, spec.embed_dim, rng));
    for (int i = 0; i < spec.depth; ++i)
      enc_.template emplace<nn::TransformerBlock<S>>("enc" + std::to_string(i), spec.embed_dim, spec.heads, 4, rng);
    enc_.template emplace<nn::LayerNorm<S>>("enc_norm", spec.embed_dim);
    dec_embed_.add(nn::make_linear<S>("dec_embed", spec.embed_dim, spec.decoder_dim, rng));
    mask_token_ = nn::Param<S>("mask_token", nn::uniform_init<S>(spec.decoder_dim, 1, 0.02, rng));
    for (int i = 0; i < spec.decoder_depth; ++i)
      dec_.template emplace<nn::TransformerBlock<S>>("dec" + std::to_string(i), spec.decoder_dim, spec.heads, 4, rng);
    dec_.template emplace<nn::LayerNorm<S>>("dec_norm", spec.decoder_dim);
    dec_.add(nn::make_linear<S>("dec_pred", spec.decoder_dim, in, rng));
    dec_.template emplace<Sigmoid<S>>();
  }

  nn::Tensor<S> forward(const nn::Tensor<S>& x, const std::vector<std::uint64_t>& mask_seeds) override {
    const auto& spec = this->spec();
    if (static_cast<int>(mask_seeds.size()) != x.n) throw InvalidArgument("mae: need one mask seed per sample");
    masks_.clear();
    for (int b = 0; b < x.n; ++b)
      masks_.push_back(mae_mask(x.h, x.w, spec.patch, spec.mask_ratio, mask_seeds[static_cast<std::size_t>(b)]));
    const int t = tokens_, tv = static_cast<int>(masks_.front().visible.size());

    nn::Tensor<S> emb = embed_.forward(detail::patchify(centered(x), spec.patch));
    nn::Tensor<S> vis(x.n, spec.embed_dim, 1, tv);
    for (int b = 0; b < x.n; ++b)
      for (int j = 0; j < tv; ++j) {
        const int tok = masks_[static_cast<std::size_t>(b)].visible[static_cast<std::size_t>(j)];
        vis.data.col(Eigen::Index(b) * tv + j) = emb.data.col(Eigen::Index(b) * t + tok) + pos_.col(tok);
      }

    const nn::Tensor<S> d = dec_embed_.forward(enc_.forward(vis));
    nn::Tensor<S> full(x.n, spec.decoder_dim, 1, t);
    for (int b = 0; b < x.n; ++b) {
      const auto& m = masks_[static_cast<std::size_t>(b)];
      for (int j = 0; j < tv; ++j) full.data.col(Eigen::Index(b) * t + m.visible[static_cast<std::size_t>(j)]) = d.data.col(Eigen::Index(b) * tv + j);
      for (int tok : m.masked) full.data.col(Eigen::Index(b) * t + tok) = mask_token_.value.col(0);
      full.sample(b) += dec_pos_;
    }
    x_hat_ = detail::unpatchify(dec_.forward(full), spec.patch, x.h, x.w);
    return x_hat_;
  }

  VqLossTerms backward(const nn::Tensor<S>& x) override {
    const auto& spec = this->spec();
    const int t = tokens_, tv = static_cast<int>(masks_.front().visible.size());
    const auto rec = nn::mse_loss(x_hat_, x);
    const nn::Tensor<S> g_full = dec_.backward(detail::patchify(rec.grad, spec.patch));

    nn::Tensor<S> g_d(x.n, spec.decoder_dim, 1, tv);
    for (int b = 0; b < x.n; ++b) {
      const auto& m = masks_[static_cast<std::size_t>(b)];
      for (int j = 0; j < tv; ++j) g_d.data.col(Eigen::Index(b) * tv + j) = g_full.data.col(Eigen::Index(b) * t + m.visible[static_cast<std::size_t>(j)]);
      for (int tok : m.masked) mask_token_.grad.col(0) += g_full.data.col(Eigen::Index(b) * t + tok);
    }
    const nn::Tensor<S> g_vis = enc_.backward(dec_embed_.backward(g_d));

    nn::Tensor<S> g_emb(x.n, spec.embed_dim, 1, t);
    for (int b = 0; b < x.n; ++b)
      for (int j = 0; j < tv; ++j)
        g_emb.data.col(Eigen::Index(b) * t + masks_[static_cast<std::size_t>(b)].visible[static_cast<std::size_t>(j)]) =
            g_vis.data.col(Eigen::Index(b) * tv + j);
    embed_.backward(g_emb);

    VqLossTerms terms;
    terms.recon = terms.total = rec.value;
    return terms;
  }

  void collect(nn::ParamList<S>& out) override {
    embed_.collect(out);
    enc_.collect(out);
    dec_embed_.collect(out);
    out.push_back(&mask_token_);
    dec_.collect(out);
  }

private:
  int tokens_ = 0;
  nn::MatrixR<S> pos_, dec_pos_;
  Sequential<S> embed_, enc_, dec_embed_, dec_;
  nn::Param<S> mask_token_;
  std::vector<MaeMask> masks_;
  nn::Tensor<S> x_hat_;
};

}  // namespace

template <typename Scalar>
std::unique_ptr<ReconModel<Scalar>> make_recon_model(const ReconModelSpec& spec, std::uint64_t init_seed) {
  validate(spec);
  Rng rng(init_seed);
  switch (spec.kind) {
    case ReconKind::vqvae: return std::make_unique<VqVae<Scalar>>(spec, rng);
    case ReconKind::vqvae2: return std::make_unique<VqVae2<Scalar>>(spec, rng);
    case ReconKind::mae: return std::make_unique<Mae<Scalar>>(spec, rng);
  }
  throw InvalidArgument("make_recon_model: bad kind");
}

template std::unique_ptr<ReconModel<float>> make_recon_model<float>(const ReconModelSpec&, std::uint64_t);
template std::unique_ptr<ReconModel<double>> make_recon_model<double>(const ReconModelSpec&, std::uint64_t);
template nn::Tensor<float> detail::patchify(const nn::Tensor<float>&, int);
template nn::Tensor<double> detail::patchify(const nn::Tensor<double>&, int);
template nn::Tensor<float> detail::unpatchify(const nn::Tensor<float>&, int, int, int);
template nn::Tensor<double> detail::unpatchify(const nn::Tensor<double>&, int, int, int);
template nn::MatrixR<float> detail::sincos_position_table<float>(int, int, int);
template nn::MatrixR<double> detail::sincos_position_table<double>(int, int, int);

}  // namespace forgesr::recon
