#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <numeric>

#include "forgesr/forge/forge.hpp"
#include "forgesr/imgcore/metrics.hpp"
#include "forgesr/imgcore/resample.hpp"
#include "forgesr/imgcore/scene.hpp"
#include "forgesr/nn/loss.hpp"
#include "forgesr/nn/optim.hpp"
#include "forgesr/sr/sr.hpp"

using namespace forgesr;
using namespace forgesr::sr;
namespace fs = std::filesystem;

namespace {

SrSpec small_spec(int scale = 4) { return SrSpec{scale, 8, 2}; }

Image random_image(int h, int w, std::uint64_t seed) {
  Rng rng(seed);
  Image img(h, w);
  for (Eigen::Index i = 0; i < img.planes().size(); ++i) img.planes().data()[i] = static_cast<float>(rng.uniform());
  return img;
}

}  // namespace

TEST_SUITE("sr") {

TEST_CASE("shape law, determinism and bounded output") {
  for (int s : {2, 4}) {
    const auto m = build_sr_model(small_spec(s), 1);
    const Image lr = random_image(32, 32, 2);
    const Image out = super_resolve(m, lr);
    CHECK(out.height() == 32 * s);
    CHECK(out.width() == 32 * s);
    CHECK(is_valid(out));
    CHECK(out == super_resolve(m, lr));
    const Image odd = super_resolve(m, random_image(7, 11, 3));
    CHECK(odd.height() == 7 * s);
    CHECK(odd.width() == 11 * s);
  }
  const auto batch = super_resolve(build_sr_model(small_spec(), 1), std::vector<Image>{random_image(8, 8, 4), random_image(8, 8, 5)});
  CHECK(batch.size() == 2);
}

TEST_CASE("initialization is seeded and scale is validated") {
  const auto a = build_sr_model(small_spec(), 7), b = build_sr_model(small_spec(), 7), c = build_sr_model(small_spec(), 8);
  REQUIRE(a.parameters.size() == b.parameters.size());
  bool differs = false;
  for (std::size_t i = 0; i < a.parameters.size(); ++i) {
    CHECK(a.parameters[i].values == b.parameters[i].values);
    differs = differs || a.parameters[i].values != c.parameters[i].values;
  }
  CHECK(differs);
  CHECK_THROWS_AS(build_sr_model(SrSpec{3, 8, 2}, 1), InvalidArgument);
  CHECK_THROWS_AS(build_sr_model(SrSpec{1, 8, 2}, 1), InvalidArgument);
}

TEST_CASE("untrained model equals bicubic upscaling") {
  const Image lr = quantize8(random_image(16, 16, 6));
  const Image out = super_resolve(build_sr_model(small_spec(), 3), lr);
  CHECK((out.planes() - bicubic_resample(lr, 64, 64).planes()).abs().maxCoeff() < 1e-5);
}

TEST_CASE("SR loss gradient matches central differences on sampled parameters") {
  for (int scale : {2, 4}) {
    SrNetwork<double> net(SrSpec{scale, 4, 1}, 9);
    auto params = net.params();
    Rng rng(10);
    for (auto* p : params)
      for (Eigen::Index i = 0; i < p->value.size(); ++i) p->value.data()[i] = rng.uniform(-0.3, 0.3);
    nn::Tensor<double> x(2, 3, 5, 6), y(2, 3, 5 * scale, 6 * scale);
    for (Eigen::Index i = 0; i < x.data.size(); ++i) x.data.data()[i] = rng.uniform();
    for (Eigen::Index i = 0; i < y.data.size(); ++i) y.data.data()[i] = rng.uniform();

    nn::zero_grad(params);
    const auto l = nn::l1_loss(net.forward(x), y);
    net.backward(l.grad);

    const double eps = 1e-6;
    int checked = 0;
    for (int k = 0; k < 10; ++k) {
      auto* p = params[rng.below(params.size())];
      const auto i = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(p->value.size())));
      const double keep = p->value.data()[i];
      p->value.data()[i] = keep + eps;
      const double up = nn::l1_loss(net.forward(x), y).value;
      p->value.data()[i] = keep - eps;
      const double down = nn::l1_loss(net.forward(x), y).value;
      p->value.data()[i] = keep;
      const double numeric = (up - down) / (2 * eps);
      const double analytic = p->grad.data()[i];
      const double rel = std::abs(numeric - analytic) / std::max({std::abs(numeric), std::abs(analytic), 1e-8});
      CHECK_MESSAGE(rel < 1e-3, p->name, " numeric ", numeric, " analytic ", analytic);
      ++checked;
    }
    CHECK(checked == 10);
  }
}

TEST_CASE("training: zero iterations, reproducibility, progress, scale errors") {
  const auto hr = render_scenes(24, 64, 64, 11);
  const auto data = forge::make_bicubic_dataset(hr, 4);
  const auto init = build_sr_model(small_spec(), 12);
  SrTrainOptions o;
  o.iterations = 0;
  const auto same = train_sr(init, data, o);
  for (std::size_t i = 0; i < init.parameters.size(); ++i) CHECK(same.parameters[i].values == init.parameters[i].values);
  CHECK(same.iterations == 0);

  o.iterations = 200;
  o.log_every = 10;
  o.batch_size = 8;
  o.learning_rate = 1e-3;
  o.seed = 13;
  const auto a = train_sr(init, data, o);
  const auto b = train_sr(init, data, o);
  REQUIRE(a.history.size() == 20);
  CHECK(a.iterations == 200);
  for (std::size_t i = 0; i < a.history.size(); ++i) CHECK(std::abs(a.history[i].loss - b.history[i].loss) <= 0.05 * a.history[i].loss);
  CHECK(a.history.back().iteration == 200);
  // first and last 10% of iterations
  const double first = (a.history[0].loss + a.history[1].loss) / 2, last = (a.history[18].loss + a.history[19].loss) / 2;
  CHECK(last < first);

  const auto x2 = forge::make_bicubic_dataset(hr, 2);
  CHECK_THROWS_AS(train_sr(init, x2, o), InvalidArgument);
  CHECK_THROWS_AS(evaluate_sr(init, x2), InvalidArgument);
}

TEST_CASE("model files round trip") {
  const auto m = build_sr_model(small_spec(), 14);
  const auto path = (fs::temp_directory_path() / "forgesr_sr_unit.ckpt").string();
  save_sr_model(m, path);
  const auto back = load_sr_model(path);
  fs::remove(path);
  CHECK(back.spec == m.spec);
  CHECK(back.init_seed == m.init_seed);
  const Image lr = random_image(8, 8, 15);
  CHECK(super_resolve(back, lr) == super_resolve(m, lr));
}

TEST_CASE("evaluation means recompute from rows and ignore pair order") {
  const auto hr = render_scenes(6, 64, 64, 16);
  const auto data = forge::make_bicubic_dataset(hr, 4);
  const auto m = build_sr_model(small_spec(), 17);
  const auto r = evaluate_sr(m, data, {"clean", "", ""});
  REQUIRE(r.rows.size() == 6);
  double ps = 0, ss = 0;
  for (const auto& row : r.rows) {
    ps += row.psnr;
    ss += row.ssim;
  }
  CHECK(std::abs(r.psnr_mean - ps / 6) < 1e-9);
  CHECK(std::abs(r.ssim_mean - ss / 6) < 1e-9);
  CHECK(std::abs(r.rows[2].psnr - psnr(super_resolve(m, data.pairs[2].lr), data.pairs[2].hr)) < 1e-12);
  CHECK_FALSE(r.perceptual_mean.has_value());

  auto rev = data;
  std::reverse(rev.pairs.begin(), rev.pairs.end());
  const auto rr = evaluate_sr(m, rev);
  CHECK(std::abs(rr.psnr_mean - r.psnr_mean) < 1e-9);
  CHECK(std::abs(rr.ssim_mean - r.ssim_mean) < 1e-9);

  const auto csv = fs::temp_directory_path() / "forgesr_metrics_unit.csv";
  write_metrics_csv(r, csv.string());
  std::ifstream in(csv);
  std::string header;
  std::getline(in, header);
  CHECK(header == "eval,pair,psnr_db,ssim,perceptual");
  fs::remove(csv);
}

TEST_CASE("external perceptual scorer contract") {
  const Image a = random_image(8, 8, 18), b = random_image(8, 8, 19);
  const auto v = run_perceptual_scorer("echo 0.25 #", a, b);
  REQUIRE(v.has_value());
  CHECK(*v == 0.25);
  CHECK_FALSE(run_perceptual_scorer("false #", a, b).has_value());
  CHECK_FALSE(run_perceptual_scorer("echo not-a-number #", a, b).has_value());
  // the scorer receives two readable PNG paths
  const auto seen = run_perceptual_scorer("sh -c 'test -s \"$0\" && test -s \"$1\" && echo 1'", a, b);
  REQUIRE(seen.has_value());
  CHECK(*seen == 1.0);

  const auto data = forge::make_bicubic_dataset(render_scenes(2, 64, 64, 20), 4);
  const auto r = evaluate_sr(build_sr_model(small_spec(), 21), data, {"clean", "echo 0.5 #", ""});
  REQUIRE(r.perceptual_mean.has_value());
  CHECK(*r.perceptual_mean == 0.5);
}

}
