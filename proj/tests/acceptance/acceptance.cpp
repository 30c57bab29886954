// End-to-end acceptance run. Drives the forgesr pipeline through run_cli in a
// dedicated work directory, then checks each criterion and prints one
// PASS/FAIL line per criterion. Exit status is nonzero if any gating
// criterion fails.
//
//   acceptance --workdir DIR [--reuse] [--only 1,2,9]
//
// --reuse keeps DIR and skips pipeline steps whose outputs already exist.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "common/oracles.hpp"
#include "forgesr/analysis/degradation.hpp"
#include "forgesr/cli/commands.hpp"
#include "forgesr/core/seed.hpp"
#include "forgesr/forge/forge.hpp"
#include "forgesr/imgcore/color.hpp"
#include "forgesr/imgcore/image_io.hpp"
#include "forgesr/imgcore/metrics.hpp"
#include "forgesr/imgcore/resample.hpp"
#include "forgesr/nn/loss.hpp"
#include "forgesr/nn/optim.hpp"
#include "forgesr/recon/recon.hpp"
#include "forgesr/recon/vq.hpp"
#include "forgesr/sr/sr.hpp"

using namespace forgesr;
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(double v, int prec = 4) {
  std::ostringstream s;
  s.setf(std::ios::fixed);
  s.precision(prec);
  s << v;
  return s.str();
}

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

struct Result {
  int id;
  std::string title;
  bool pass;
  bool gating;
  std::string detail;
};

std::vector<Result> results;

void record(int id, const std::string& title, bool pass, const std::string& detail, bool gating = true) {
  results.push_back({id, title, pass, gating, detail});
  std::cout << "criterion " << id << ' ' << (pass ? "PASS" : "FAIL") << ' ' << title << ": " << detail << std::endl;
}

class Pipeline {
public:
  Pipeline(fs::path root, bool reuse) : root_(std::move(root)), reuse_(reuse) {
    if (!reuse_) fs::remove_all(root_);
    fs::create_directories(root_);
    log_.open(root_ / "acceptance.log", std::ios::app);
    config_ = (root_ / "acceptance_config.json").string();
    const json cfg = {{"format_version", 1},
                      {"seed", 20240607},
                      {"workdir", (root_ / "work").string()},
                      {"hr_source", "synthetic:2200"},
                      {"crop_size", 128},
                      {"crop_stride", 128},
                      {"eval_count", 200},
                      {"scale", 4},
                      {"recon", {{"epochs", 64}, {"checkpoint_epochs", {4, 8, 16, 32, 64}}, {"train_count", 2000}}},
                      {"forge", {{"kind", "vqvae2"}, {"epoch", 8}}},
                      {"sr", {{"pretrain_iters", 5000}, {"finetune_iters", 2000}}}};
    std::ofstream(config_) << cfg.dump(2) << '\n';
  }

  fs::path work() const { return root_ / "work"; }
  fs::path dataset(const std::string& name) const { return work() / "datasets" / name; }
  bool reuse() const { return reuse_; }

  // Runs one subcommand unless --reuse is set and `done` already exists.
  int run(std::vector<std::string> args, const fs::path& done = {}) {
    if (reuse_ && !done.empty() && fs::exists(done)) {
      std::cout << "  [skip] forgesr " << args.front() << std::endl;
      return 0;
    }
    std::vector<std::string> full = {"forgesr", "--config", config_};
    full.insert(full.end(), args.begin(), args.end());
    std::vector<const char*> argv;
    std::string line;
    for (const auto& a : full) {
      argv.push_back(a.c_str());
      line += a + ' ';
    }
    std::cout << "  $ " << line << std::endl;
    log_ << "$ " << line << '\n';
    std::ostringstream err;
    const auto t0 = Clock::now();
    const int code = cli::run_cli(static_cast<int>(argv.size()), argv.data(), log_, err);
    log_ << err.str() << std::flush;
    std::cout << "    exit " << code << " in " << fmt(seconds_since(t0), 1) << " s" << std::endl;
    if (code != 0) std::cout << "    " << err.str();
    return code;
  }

private:
  fs::path root_;
  bool reuse_;
  std::string config_;
  std::ofstream log_;
};

std::vector<Image> read_dir_pngs(const fs::path& dir) {
  std::vector<fs::path> paths;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.path().extension() == ".png") paths.push_back(e.path());
  std::sort(paths.begin(), paths.end());
  std::vector<Image> out;
  for (const auto& p : paths) out.push_back(read_png(p.string()));
  return out;
}

std::map<std::string, std::string> tree_digest(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file()) out[fs::relative(e.path(), dir).string()] = sha256_file(e.path().string());
  return out;
}

json manifest_of(const fs::path& dir) {
  std::ifstream in(dir / "manifest.json");
  return json::parse(in);
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
  std::ifstream in(p);
  std::vector<std::vector<std::string>> rows;
  for (std::string line; std::getline(in, line);) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

// ---- criteria that need no pipeline -----------------------------------------

void criterion_metric_oracles() {
  const auto t0 = Clock::now();
  double worst = 0;
  for (const auto& p : oracle::kCiedePairs) {
    const Lab<double> a(p.lab1[0], p.lab1[1], p.lab1[2]), b(p.lab2[0], p.lab2[1], p.lab2[2]);
    worst = std::max({worst, std::abs(ciede2000(a, b) - p.delta_e), std::abs(ciede2000(b, a) - p.delta_e)});
  }
  const Image a = Image::filled(32, 32, 0.2f, 0.4f, 0.6f);
  Image b = a;
  b.planes() += 1.0f / 255.0f;
  const double p = psnr(a, b);
  const bool psnr_identity = psnr(a, a) == kPsnrCapDb;

  Rng rng(1);
  double ssim_dev = 0, ssim_oracle_dev = 0;
  for (int t = 0; t < 5; ++t) {
    Image x(48, 40), y(48, 40);
    for (Eigen::Index i = 0; i < x.planes().size(); ++i) {
      x.planes().data()[i] = static_cast<float>(rng.uniform());
      y.planes().data()[i] = static_cast<float>(std::clamp(x.planes().data()[i] + 0.1 * rng.normal(), 0.0, 1.0));
    }
    ssim_dev = std::max(ssim_dev, std::abs(ssim(x, x) - 1.0));
    ssim_oracle_dev = std::max(ssim_oracle_dev, std::abs(ssim(x, y) - oracle::ssim(x, y)));
  }
  const double t = seconds_since(t0);
  const bool pass = worst < 1e-4 && std::abs(p - 48.13) < 0.01 && psnr_identity && ssim_dev <= 1e-9 && ssim_oracle_dev < 1e-6 && t < 5.0;
  record(1, "metric oracles",
         pass,
         "CIEDE2000 max err " + sci(worst) + " over 34 pairs, PSNR(+1/255) " + fmt(p, 4) + " dB, |SSIM(a,a)-1| " +
             sci(ssim_dev) + ", SSIM vs oracle " + sci(ssim_oracle_dev) + ", " + fmt(t, 3) + " s");
}

void criterion_entropy_suite() {
  const auto t0 = Clock::now();
  const std::vector<double> uniform15(15, 1.0 / 15);
  const double hu = analysis::entropy(uniform15);
  std::vector<double> one_hot(10, 0.0);
  one_hot[4] = 1.0;
  const double h1 = analysis::entropy(one_hot);
  Rng rng(2);
  int violations = 0;
  for (int t = 0; t < 1000; ++t) {
    const int k = 2 + static_cast<int>(rng.below(19));
    std::vector<double> p(static_cast<std::size_t>(k));
    for (auto& v : p) v = rng.uniform() < 0.2 ? 0.0 : rng.uniform();
    p[0] += 1e-3;
    const double total = std::accumulate(p.begin(), p.end(), 0.0);
    for (auto& v : p) v /= total;
    const double h = analysis::entropy(p);
    if (h < 0.0 || h > std::log(static_cast<double>(k)) + 1e-12) ++violations;
  }
  const double t = seconds_since(t0);
  const bool pass = std::abs(hu - std::log(15.0)) < 1e-9 && h1 == 0.0 && violations == 0 && t < 1.0;
  record(2, "entropy suite", pass,
         "H(uniform15)-ln15 = " + sci(hu - std::log(15.0)) + ", H(one-hot) = " + sci(h1) + ", bound violations " +
             std::to_string(violations) + "/1000, " + fmt(t, 3) + " s");
}

void criterion_gradient_checks() {
  // straight-through quantizer on a fixed toy instance
  double ste_err = 0;
  {
    Rng rng(3);
    recon::VectorQuantizer<double> vq("vq", 3, 2, 0.25, rng);
    vq.codebook().value.resize(3, 2);
    vq.codebook().value << 0, 0, 1, 1, 0.2, 0.8;
    nn::Tensor<double> z(1, 2, 2, 2);
    z.data.resize(2, 4);
    z.data << 0.1, 0.9, 0.4, 0.3, 0.2, 0.7, 0.6, 0.9;
    nn::MatrixR<double> a(2, 4);
    a << 1.0, -2.0, 0.5, 0.3, 3.0, 0.25, -1.0, 2.0;
    const auto zq = vq.forward(z);
    nn::Tensor<double> g(1, 2, 2, 2);
    g.data = (2.0 * a.array() * zq.data.array()).matrix();
    const auto gz = vq.backward(g);
    const nn::MatrixR<double> offset = zq.data - z.data;
    auto loss = [&](const nn::MatrixR<double>& zz) {
      const nn::MatrixR<double> st = zz + offset;
      return (a.array() * st.array().square()).sum() + 0.25 * (zz - zq.data).squaredNorm() / static_cast<double>(zz.size());
    };
    const double eps = 1e-6;
    for (Eigen::Index i = 0; i < z.data.size(); ++i) {
      nn::MatrixR<double> up = z.data, down = z.data;
      up.data()[i] += eps;
      down.data()[i] -= eps;
      ste_err = std::max(ste_err, std::abs((loss(up) - loss(down)) / (2 * eps) - gz.data.data()[i]));
    }
  }
  // SR L1 loss on sampled parameters
  double sr_rel = 0;
  for (int scale : {2, 4}) {
    sr::SrNetwork<double> net(sr::SrSpec{scale, 4, 1}, 4);
    auto params = net.params();
    Rng rng(5);
    for (auto* p : params)
      for (Eigen::Index i = 0; i < p->value.size(); ++i) p->value.data()[i] = rng.uniform(-0.3, 0.3);
    nn::Tensor<double> x(2, 3, 5, 4), y(2, 3, 5 * scale, 4 * scale);
    for (Eigen::Index i = 0; i < x.data.size(); ++i) x.data.data()[i] = rng.uniform();
    for (Eigen::Index i = 0; i < y.data.size(); ++i) y.data.data()[i] = rng.uniform();
    nn::zero_grad(params);
    net.backward(nn::l1_loss(net.forward(x), y).grad);
    const double eps = 1e-6;
    for (int k = 0; k < 20; ++k) {
      auto* p = params[rng.below(params.size())];
      const auto i = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(p->value.size())));
      const double keep = p->value.data()[i];
      p->value.data()[i] = keep + eps;
      const double up = nn::l1_loss(net.forward(x), y).value;
      p->value.data()[i] = keep - eps;
      const double down = nn::l1_loss(net.forward(x), y).value;
      p->value.data()[i] = keep;
      const double numeric = (up - down) / (2 * eps), analytic = p->grad.data()[i];
      sr_rel = std::max(sr_rel, std::abs(numeric - analytic) / std::max({std::abs(numeric), std::abs(analytic), 1e-8}));
    }
  }
  record(9, "gradient checks", ste_err < 1e-4 && sr_rel < 1e-3,
         "straight-through max abs err " + sci(ste_err) + " (tol 1e-4), SR L1 max rel err " + sci(sr_rel) +
             " (tol 1e-3)");
}

// ---- pipeline criteria -------------------------------------------------------

bool must(Pipeline& p, std::vector<std::string> args, const fs::path& done = {}) { return p.run(std::move(args), done) == 0; }

void criterion_undertraining(Pipeline& p, bool trained) {
  if (!trained) {
    record(3, "undertraining trend", false, "train-recon failed");
    return;
  }
  std::vector<Image> val;
  for (const auto& hr : read_dir_pngs(p.work() / "hr" / "eval")) val.push_back(quantize8(bicubic_resample(hr, 32, 32)));
  bool pass = val.size() >= 200;
  std::string detail = std::to_string(val.size()) + " val crops;";
  for (const std::string kind : {"vqvae", "vqvae2", "mae"}) {
    std::map<int, double> mean_psnr;
    for (int epoch : {4, 64}) {
      char name[32];
      std::snprintf(name, sizeof name, "epoch_%03d.ckpt", epoch);
      recon::ReconRunner runner(recon::load_recon_checkpoint((p.work() / "recon" / kind / name).string()));
      double s = 0;
      for (std::size_t i = 0; i < val.size(); ++i) s += psnr(runner(val[i], recon::mae_mask_seed(seed_for(20240607, "val", 0), i)), val[i]);
      mean_psnr[epoch] = s / static_cast<double>(val.size());
    }
    const double gain = mean_psnr[64] - mean_psnr[4];
    pass = pass && gain >= 1.0;
    detail += " " + kind + " ep4 " + fmt(mean_psnr[4], 3) + " -> ep64 " + fmt(mean_psnr[64], 3) + " dB (+" + fmt(gain, 3) + ")";
  }
  record(3, "undertraining trend", pass, detail);
}

double forged_band_psnr(Pipeline& p, const std::string& forged) {
  const auto f = forge::load_dataset(p.dataset(forged).string());
  const auto b = forge::load_dataset(p.dataset("bicubic").string());
  double s = 0;
  for (std::size_t i = 0; i < f.size(); ++i) s += psnr(f.pairs[i].lr, b.pairs[i].lr);
  return s / static_cast<double>(f.size());
}

void criterion_forge_effect(Pipeline& p, bool ok, double minutes) {
  if (!ok) {
    record(4, "forge effectiveness direction", false, "pipeline step failed");
    return;
  }
  const auto eval = forge::load_dataset(p.dataset("eval_degraded").string());
  const auto before = sr::evaluate_sr(sr::load_sr_model((p.work() / "sr" / "pretrained.ckpt").string()), eval);
  const auto after = sr::evaluate_sr(sr::load_sr_model((p.work() / "sr" / "finetuned.ckpt").string()), eval);
  const double gain = after.ssim_mean - before.ssim_mean;
  record(4, "forge effectiveness direction", eval.size() >= 200 && gain >= 0.01,
         "SSIM on " + std::to_string(eval.size()) + " degraded eval crops " + fmt(before.ssim_mean) + " -> " + fmt(after.ssim_mean) +
             " (" + (gain >= 0 ? "+" : "") + fmt(gain) + "), PSNR " + fmt(before.psnr_mean, 3) + " -> " + fmt(after.psnr_mean, 3) +
             " dB, " + fmt(minutes, 1) + " min");
}

int adjacent_inversions(const std::vector<double>& v) {
  int n = 0;
  for (std::size_t i = 1; i < v.size(); ++i) n += v[i] > v[i - 1];
  return n;
}

void criterion_color_harm(Pipeline& p, bool ok, double minutes) {
  const auto csv = p.work() / "reports" / "shift_report.csv";
  if (!ok || !fs::exists(csv)) {
    record(5, "color-difference harm", false, "report step failed");
    return;
  }
  const auto rows = read_csv(csv);
  std::vector<std::string> names;
  std::vector<double> de, ps, ss;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    names.push_back(rows[r][0]);
    de.push_back(std::stod(rows[r][4]));
    ps.push_back(std::stod(rows[r][5]));
    ss.push_back(std::stod(rows[r][6]));
  }
  std::string detail;
  for (std::size_t i = 0; i < names.size(); ++i)
    detail += names[i] + "(dE " + fmt(de[i], 2) + ", " + fmt(ps[i], 3) + " dB, " + fmt(ss[i]) + ") ";
  const auto zero = std::find(names.begin(), names.end(), "shift_0") - names.begin();
  const bool sorted = std::is_sorted(de.begin(), de.end());
  const int inv_p = adjacent_inversions(ps), inv_s = adjacent_inversions(ss);
  const bool ends = rows.size() == 10 && zero < 9 && ps[static_cast<std::size_t>(zero)] > ps.back() &&
                    ss[static_cast<std::size_t>(zero)] > ss.back();
  detail += "| inversions psnr " + std::to_string(inv_p) + " ssim " + std::to_string(inv_s) + ", " + fmt(minutes, 1) + " min";
  record(5, "color-difference harm", sorted && ends && inv_p <= 1 && inv_s <= 1, detail);
}

void criterion_color_ordering(Pipeline& p, bool ok) {
  if (!ok) {
    record(6, "color-difference ordering", false, "analyze-colordiff failed", false);
    return;
  }
  const double dv = manifest_of(p.dataset("forged_vqvae_ep8"))["stats"]["mean_delta_e"].get<double>();
  const double dv2 = manifest_of(p.dataset("forged_vqvae2_ep8"))["stats"]["mean_delta_e"].get<double>();
  const bool holds = dv > dv2;
  // reported always; a reversal is a documented desk-scale deviation and does not gate
  record(6, "color-difference ordering", holds,
         "mean dE vqvae ep8 " + fmt(dv, 3) + " vs vqvae2 ep8 " + fmt(dv2, 3) +
             (holds ? "" : " (ordering reversed: documented desk-scale deviation, not gating)"),
         false);
}

void criterion_diversity(Pipeline& p, bool ok) {
  if (!ok) {
    record(7, "diversity direction", false, "classifier or entropy step failed");
    return;
  }
  const double hf = manifest_of(p.dataset("forged_vqvae2_ep8"))["stats"]["entropy"].get<double>();
  const double hb = manifest_of(p.dataset("bicubic"))["stats"]["entropy"].get<double>();
  record(7, "diversity direction", hf > hb, "entropy forged vqvae2 ep8 " + fmt(hf) + " vs bicubic " + fmt(hb) + " (nats)");
}

void criterion_determinism(Pipeline& p) {
  const auto dir = p.dataset("forged_vqvae2_ep8");
  bool pass = fs::exists(dir / "manifest.json");
  std::string detail;
  if (pass) {
    const auto before = tree_digest(dir);
    const bool rerun = p.run({"forge"}) == 0;
    const auto after = tree_digest(dir);
    std::size_t same = 0;
    for (const auto& [k, v] : before) same += after.count(k) && after.at(k) == v;
    // the two forge runs must carry the same config hash
    std::vector<std::string> hashes;
    std::ifstream log(p.work() / "run_log.jsonl");
    for (std::string line; std::getline(log, line);) {
      const auto e = json::parse(line);
      if (e["command"] == "forge" && e["status"] == "ok") hashes.push_back(e["config_hash"]);
    }
    const bool hash_ok = hashes.size() >= 2 && hashes.back() == hashes[hashes.size() - 2];
    pass = rerun && hash_ok && same == before.size() && after.size() == before.size();
    detail = "forge re-run: " + std::to_string(same) + "/" + std::to_string(before.size()) + " files bit-identical, config hash " +
             (hash_ok ? "unchanged" : "differs") + ";";
  }
  std::size_t checked_sets = 0, checked_pairs = 0, violations = 0;
  for (const auto& e : fs::directory_iterator(p.work() / "datasets")) {
    if (!fs::exists(e.path() / "manifest.json")) continue;
    const auto d = forge::load_dataset(e.path().string());
    for (const auto& pr : d.pairs) {
      ++checked_pairs;
      violations += pr.hr.height() != 4 * pr.lr.height() || pr.hr.width() != 4 * pr.lr.width();
    }
    ++checked_sets;
  }
  pass = pass && violations == 0 && checked_sets >= 2;
  detail += " shape law on " + std::to_string(checked_pairs) + " pairs in " + std::to_string(checked_sets) + " datasets, " +
            std::to_string(violations) + " violations";
  record(8, "pipeline determinism", pass, detail);
}

}  // namespace

int main(int argc, char** argv) {
  fs::path workdir = "acceptance_work";
  bool reuse = false;
  std::set<int> only;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--workdir" && i + 1 < argc) workdir = argv[++i];
    else if (a == "--reuse") reuse = true;
    else if (a == "--only" && i + 1 < argc) {
      std::stringstream ss(argv[++i]);
      for (std::string t; std::getline(ss, t, ',');) only.insert(std::stoi(t));
    } else {
      std::cerr << "usage: acceptance --workdir DIR [--reuse] [--only 1,2,...]\n";
      return 2;
    }
  }
  auto want = [&](int id) { return only.empty() || only.count(id); };
  const auto start = Clock::now();

  if (want(1)) criterion_metric_oracles();
  if (want(2)) criterion_entropy_suite();
  if (want(9)) criterion_gradient_checks();

  const bool pipeline = want(3) || want(4) || want(5) || want(6) || want(7) || want(8);
  if (pipeline) {
    Pipeline p(workdir, reuse);
    const auto w = p.work();
    bool base = must(p, {"crop"}, w / "hr" / "eval");

    auto t0 = Clock::now();
    const bool trained = base && must(p, {"train-recon"}, w / "recon" / "mae" / "epoch_064.ckpt");
    std::cout << "  train-recon " << fmt(seconds_since(t0) / 60, 1) << " min" << std::endl;
    if (want(3)) criterion_undertraining(p, trained);

    base = base && must(p, {"make-bicubic"}, p.dataset("eval_degraded") / "manifest.json");
    const bool forged = trained && base && must(p, {"forge", "--kind", "vqvae", "--epoch", "8"}, p.dataset("forged_vqvae_ep8") / "manifest.json") &&
                        must(p, {"forge"}, p.dataset("forged_vqvae2_ep8") / "manifest.json");
    if (forged) {
      // forged LR vs clean LR must be degraded but structure-preserving
      for (const std::string name : {"forged_vqvae_ep8", "forged_vqvae2_ep8"}) {
        const double band = forged_band_psnr(p, name);
        const bool in_band = band >= 12.0 && band <= 45.0;
        if (name == "forged_vqvae2_ep8")
          results.push_back({0, "forged psnr band", in_band, true, ""});
        std::cout << "check " << (in_band ? "PASS" : "FAIL") << " forged psnr band: " << name << " vs bicubic LR " << fmt(band, 3)
                  << " dB (band [12, 45])" << std::endl;
      }
    }

    if (want(6)) criterion_color_ordering(p, forged && must(p, {"analyze-colordiff", "--dataset", "forged_vqvae_ep8", "forged_vqvae2_ep8", "bicubic"}));

    if (want(7)) {
      const bool clf = base && must(p, {"train-degclf"}, w / "classifier" / "degclf.ckpt");
      criterion_diversity(p, forged && clf && must(p, {"analyze-entropy", "--dataset", "bicubic", "forged_vqvae2_ep8"}));
    }

    if (want(4) || want(5)) {
      t0 = Clock::now();
      const bool pre = base && must(p, {"sr-pretrain"}, w / "sr" / "pretrained.ckpt");
      const double pre_min = seconds_since(t0) / 60;
      if (want(4)) {
        t0 = Clock::now();
        const bool ft = pre && forged && must(p, {"sr-finetune"}, w / "sr" / "finetuned.ckpt") &&
                        must(p, {"sr-eval", "--model", "pretrained", "finetuned", "--dataset", "eval_degraded", "eval_clean"});
        criterion_forge_effect(p, ft, pre_min + seconds_since(t0) / 60);
      }
      if (want(5)) {
        t0 = Clock::now();
        bool ok = pre && must(p, {"make-shifted"}, p.dataset("shift_8") / "manifest.json");
        // The zero-shift set holds the bicubic pairs, and every from-scratch
        // run shares init and sampling seeds, so its model is the pretrained one.
        if (ok && !fs::exists(w / "sr" / "shift_0.ckpt") &&
            tree_digest(p.dataset("shift_0") / "lr") == tree_digest(p.dataset("bicubic") / "lr")) {
          fs::copy_file(w / "sr" / "pretrained.ckpt", w / "sr" / "shift_0.ckpt");
          std::cout << "  shift_0 LR matches bicubic LR bit for bit; reusing sr/pretrained.ckpt" << std::endl;
        }
        ok = ok && must(p, {"report"});
        criterion_color_harm(p, ok, pre_min + seconds_since(t0) / 60);
      }
    }

    if (want(8)) criterion_determinism(p);
  }

  int failed = 0;
  std::cout << "\nsummary (" << fmt(seconds_since(start) / 60, 1) << " min)\n";
  for (const auto& r : results) {
    if (r.id == 0) {
      failed += !r.pass;
      continue;
    }
    std::cout << "  " << r.id << ' ' << (r.pass ? "PASS" : (r.gating ? "FAIL" : "FAIL (non-gating)")) << ' ' << r.title << '\n';
    failed += !r.pass && r.gating;
  }
  std::cout << (failed ? "acceptance FAILED" : "acceptance PASSED") << std::endl;
  return failed ? 1 : 0;
}
