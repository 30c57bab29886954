#include <algorithm>

#include "forgesr/core/parallel.hpp"
#include "forgesr/imgcore/resample.hpp"
#include "forgesr/sr/sr.hpp"

namespace forgesr::sr {

nlohmann::json to_json(const SrSpec& s) { return {{"scale", s.scale}, {"width", s.width}, {"blocks", s.blocks}}; }

SrSpec sr_spec_from_json(const nlohmann::json& j) {
  SrSpec s;
  for (const auto& [key, value] : j.items()) {
    if (key == "scale") s.scale = value.get<int>();
    else if (key == "width") s.width = value.get<int>();
    else if (key == "blocks") s.blocks = value.get<int>();
    else throw InvalidArgument("sr spec: unknown key '" + key + "'");
  }
  return s;
}

namespace {

void validate(const SrSpec& s) {
  if (s.scale != 2 && s.scale != 4) throw InvalidArgument("SR scale must be 2 or 4, got " + std::to_string(s.scale));
  if (s.width < 1 || s.blocks < 0) throw InvalidArgument("SR width must be >= 1 and blocks >= 0");
}

template <typename S>
nn::Tensor<S> bicubic_skip(const nn::Tensor<S>& lr, int scale) {
  nn::Tensor<S> out(lr.n, 3, lr.h * scale, lr.w * scale);
  for (int b = 0; b < lr.n; ++b) {
    Image img(lr.h, lr.w);
    img.planes() = lr.sample(b).template cast<float>().array();
    const Image up = bicubic_resample(clamp01(std::move(img)), lr.h * scale, lr.w * scale);
    out.sample(b) = up.planes().matrix().template cast<S>();
  }
  return out;
}

}  // namespace

template <typename S>
SrNetwork<S>::SrNetwork(const SrSpec& spec, std::uint64_t init_seed) : spec_(spec) {
  validate(spec);
  Rng rng(init_seed);
  const int w = spec.width;
  head_.template emplace<nn::Conv2d<S>>("head", 3, w, 3, 1, 1, rng);
  auto trunk = std::make_unique<nn::Sequential<S>>();
  for (int i = 0; i < spec.blocks; ++i) {
    auto block = std::make_unique<nn::Sequential<S>>();
    const std::string base = "body" + std::to_string(i);
    block->template emplace<nn::Conv2d<S>>(base + ".conv0", w, w, 3, 1, 1, rng);
    block->template emplace<nn::ReLU<S>>();
    block->template emplace<nn::Conv2d<S>>(base + ".conv1", w, w, 3, 1, 1, rng);
    trunk->template emplace<nn::Residual<S>>(std::move(block));
  }
  trunk->template emplace<nn::Conv2d<S>>("body.tail", w, w, 3, 1, 1, rng);
  body_.template emplace<nn::Residual<S>>(std::move(trunk));
  auto& up = up_.template emplace<nn::Conv2d<S>>("up", w, 3 * spec.scale * spec.scale, 3, 1, 1, rng);
  up_.template emplace<nn::PixelShuffle<S>>(spec.scale);
  // A zero correction makes the untrained model exactly bicubic upscaling.
  up.weight().value.setZero();
  up.bias().value.setZero();
}

template <typename S>
nn::Tensor<S> SrNetwork<S>::forward(const nn::Tensor<S>& lr) {
  nn::Tensor<S> x = lr;
  x.data.array() -= S(0.5);
  nn::Tensor<S> y = up_.forward(body_.forward(head_.forward(x)));
  y.data += bicubic_skip(lr, spec_.scale).data;
  return y;
}

template <typename S>
nn::Tensor<S> SrNetwork<S>::backward(const nn::Tensor<S>& grad) {
  return head_.backward(body_.backward(up_.backward(grad)));
}

template <typename S>
nn::ParamList<S> SrNetwork<S>::params() {
  nn::ParamList<S> p;
  head_.collect(p);
  body_.collect(p);
  up_.collect(p);
  return p;
}

template class SrNetwork<float>;
template class SrNetwork<double>;

SRModel build_sr_model(const SrSpec& spec, std::uint64_t seed) {
  SrNetwork<float> net(spec, seed);
  SRModel m;
  m.spec = spec;
  m.init_seed = seed;
  m.parameters = nn::export_params(net.params());
  return m;
}

void save_sr_model(const SRModel& m, const std::string& path) {
  nn::Checkpoint c;
  auto hist = nlohmann::json::array();
  for (const auto& e : m.history) hist.push_back({e.iteration, e.loss});
  c.header = {{"kind", "sr"},
              {"spec", to_json(m.spec)},
              {"init_seed", std::to_string(m.init_seed)},
              {"iterations", m.iterations},
              {"history", hist}};
  c.arrays = m.parameters;
  nn::write_checkpoint(c, path);
}

SRModel load_sr_model(const std::string& path) {
  const auto c = nn::read_checkpoint(path);
  if (c.header.value("kind", "") != "sr") throw ValidationError(path + " is not an SR model checkpoint");
  SRModel m;
  try {
    m.spec = sr_spec_from_json(c.header.at("spec"));
    validate(m.spec);
    m.init_seed = std::stoull(c.header.at("init_seed").get<std::string>());
    m.iterations = c.header.at("iterations").get<long>();
    for (const auto& e : c.header.at("history")) m.history.push_back({e.at(0).get<long>(), e.at(1).get<double>()});
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("bad SR checkpoint header: " + std::string(e.what()));
  }
  m.parameters = c.arrays;
  SrNetwork<float> net(m.spec, 0);
  nn::import_params(net.params(), c);  // shape check
  return m;
}

namespace {

std::unique_ptr<SrNetwork<float>> instantiate(const SRModel& m) {
  auto net = std::make_unique<SrNetwork<float>>(m.spec, 0);
  nn::Checkpoint c;
  c.arrays = m.parameters;
  nn::import_params(net->params(), c);
  return net;
}

}  // namespace

Image super_resolve(const SRModel& model, const Image& lr) {
  auto net = instantiate(model);
  return nn::tensor_to_image(net->forward(nn::image_to_tensor<float>(lr)), 0);
}

std::vector<Image> super_resolve(const SRModel& model, const std::vector<Image>& lr) {
  std::vector<Image> out(lr.size());
  constexpr std::size_t chunk = 16;
  const std::size_t chunks = (lr.size() + chunk - 1) / chunk;
  parallel_for(chunks, [&](std::size_t c) {
    auto net = instantiate(model);
    // Images are run one at a time: sizes may differ within a chunk.
    for (std::size_t i = c * chunk; i < std::min(lr.size(), (c + 1) * chunk); ++i)
      out[i] = nn::tensor_to_image(net->forward(nn::image_to_tensor<float>(lr[i])), 0);
  });
  return out;
}

}  // namespace forgesr::sr
