#include "forgesr/cli/commands.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "forgesr/analysis/color_diff.hpp"
#include "forgesr/analysis/degradation.hpp"
#include "forgesr/cli/config.hpp"
#include "forgesr/cli/workdir.hpp"
#include "forgesr/core/parallel.hpp"
#include "forgesr/core/seed.hpp"
#include "forgesr/forge/forge.hpp"
#include "forgesr/imgcore/image_io.hpp"
#include "forgesr/imgcore/resample.hpp"
#include "forgesr/imgcore/scene.hpp"
#include "forgesr/recon/recon.hpp"
#include "forgesr/sr/sr.hpp"

namespace forgesr::cli {

namespace {

using nlohmann::json;

struct Flags {
  std::string config_path;
  std::string workdir;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::string out;

  std::string kind;
  int epoch = 0;
  int samples = 4;
  long iters = -1;
  std::string name;
  std::string from;
  std::vector<std::string> datasets;
  std::vector<std::string> models;
};

struct Context {
  ExperimentConfig cfg;
  Workdir wd;
  Flags flags;
  std::ostream& out;
  std::vector<std::string> artifacts;

  void note(const fs::path& p) { artifacts.push_back(fs::relative(p, wd.root()).string()); }
};

std::string pad6(std::size_t i) {
  std::ostringstream s;
  s << std::setw(6) << std::setfill('0') << i << ".png";
  return s.str();
}

std::vector<fs::path> list_pngs(const fs::path& dir, bool recursive) {
  std::vector<fs::path> out;
  if (!fs::is_directory(dir)) return out;
  auto take = [&](const fs::directory_entry& e) {
    if (e.is_regular_file() && e.path().extension() == ".png") out.push_back(e.path());
  };
  if (recursive)
    for (const auto& e : fs::recursive_directory_iterator(dir)) take(e);
  else
    for (const auto& e : fs::directory_iterator(dir)) take(e);
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<Image> read_pngs(const std::vector<fs::path>& paths) {
  std::vector<Image> images(paths.size());
  parallel_for(paths.size(), [&](std::size_t i) { images[i] = read_png(paths[i].string()); });
  return images;
}

void write_pngs(const std::vector<Image>& images, const fs::path& dir) {
  fs::remove_all(dir);
  fs::create_directories(dir);
  parallel_for(images.size(), [&](std::size_t i) { write_png(images[i], (dir / pad6(i)).string()); });
}

std::vector<Image> load_hr(const Context& ctx, const fs::path& dir) {
  const auto paths = list_pngs(dir, false);
  if (paths.empty()) throw ValidationError("no HR crops in " + dir.string() + "; run `forgesr crop` first");
  auto images = read_pngs(paths);
  for (std::size_t i = 0; i < images.size(); ++i)
    if (images[i].height() != ctx.cfg.crop_size || images[i].width() != ctx.cfg.crop_size)
      throw ValidationError("HR crop " + paths[i].string() + " is not " + std::to_string(ctx.cfg.crop_size) + " square",
                            static_cast<std::int64_t>(i));
  return images;
}

std::vector<Image> downsample_all(const std::vector<Image>& hr, int size) {
  std::vector<Image> lr(hr.size());
  parallel_for(hr.size(), [&](std::size_t i) { lr[i] = quantize8(bicubic_resample(hr[i], size, size)); });
  return lr;
}

std::vector<recon::ReconKind> selected_kinds(const Context& ctx) {
  if (ctx.flags.kind.empty()) return ctx.cfg.recon.kinds;
  try {
    return {recon::parse_recon_kind(ctx.flags.kind)};
  } catch (const InvalidArgument&) {
    throw ConfigError("--kind must be one of vqvae, vqvae2, mae (got '" + ctx.flags.kind + "')");
  }
}

fs::path out_or(const Context& ctx, const fs::path& fallback) {
  return ctx.flags.out.empty() ? fallback : fs::path(ctx.flags.out);
}

// A dataset argument is either a name under datasets/ or a path.
fs::path dataset_path(const Context& ctx, const std::string& arg) {
  const fs::path p(arg);
  if (fs::exists(p / "manifest.json")) return p;
  return ctx.wd.dataset(arg);
}

std::vector<fs::path> dataset_args(const Context& ctx) {
  std::vector<fs::path> out;
  for (const auto& d : ctx.flags.datasets) out.push_back(dataset_path(ctx, d));
  if (out.empty() && fs::is_directory(ctx.wd.root() / "datasets"))
    for (const auto& e : fs::directory_iterator(ctx.wd.root() / "datasets"))
      if (fs::exists(e.path() / "manifest.json")) out.push_back(e.path());
  std::sort(out.begin(), out.end());
  if (out.empty()) throw ValidationError("no datasets found; pass --dataset");
  return out;
}

std::vector<Image> lr_images(const forge::PairedDataset& d) {
  std::vector<Image> lr;
  lr.reserve(d.size());
  for (const auto& p : d.pairs) lr.push_back(p.lr);
  return lr;
}

std::string forged_name(recon::ReconKind kind, int epoch) {
  return "forged_" + recon::to_string(kind) + "_ep" + std::to_string(epoch);
}

// ---- subcommands ----------------------------------------------------------

void cmd_crop(Context& ctx) {
  const auto& c = ctx.cfg;
  std::vector<Image> crops;
  if (c.hr_source.rfind("synthetic:", 0) == 0) {
    int count = 0;
    try {
      count = std::stoi(c.hr_source.substr(10));
    } catch (const std::exception&) {
      throw ConfigError("config key 'hr_source' needs a count after 'synthetic:'");
    }
    if (count <= c.eval_count) throw ConfigError("config key 'hr_source' must provide more than eval_count images");
    crops = render_scenes(count, c.crop_size, c.crop_size, seed_for(c.seed, "hr-scenes", 0));
  } else {
    const fs::path src = c.hr_source.substr(4);
    const auto paths = list_pngs(src, true);
    if (paths.empty()) throw ValidationError("hr_source directory " + src.string() + " holds no PNG files");
    for (const auto& p : paths) {
      const Image img = read_png(p.string());
      if (img.height() < c.crop_size || img.width() < c.crop_size) continue;
      for (auto& cr : crop_grid(img, c.crop_size, c.crop_stride)) crops.push_back(std::move(cr));
    }
    if (static_cast<int>(crops.size()) <= c.eval_count)
      throw ValidationError("hr_source yields " + std::to_string(crops.size()) + " crops, not more than eval_count");
    Rng rng(seed_for(c.seed, "crop-split", 0));
    rng.shuffle(crops.begin(), crops.end());
  }
  const auto n_train = crops.size() - static_cast<std::size_t>(c.eval_count);
  const std::vector<Image> train(crops.begin(), crops.begin() + static_cast<std::ptrdiff_t>(n_train));
  const std::vector<Image> eval(crops.begin() + static_cast<std::ptrdiff_t>(n_train), crops.end());
  write_pngs(train, ctx.wd.hr_train());
  write_pngs(eval, ctx.wd.hr_eval());
  ctx.note(ctx.wd.hr_train());
  ctx.note(ctx.wd.hr_eval());
  ctx.out << "crop: " << train.size() << " train + " << eval.size() << " eval HR crops of " << c.crop_size << "px\n";
}

void cmd_train_recon(Context& ctx) {
  const auto& c = ctx.cfg;
  const auto kinds = selected_kinds(ctx);
  auto hr = load_hr(ctx, ctx.wd.hr_train());
  if (c.recon.train_count > 0 && static_cast<std::size_t>(c.recon.train_count) < hr.size()) hr.resize(static_cast<std::size_t>(c.recon.train_count));
  const auto lr = downsample_all(hr, c.lr_size());
  fs::create_directories(ctx.wd.reports());
  for (auto kind : kinds) {
    const std::string name = recon::to_string(kind);
    recon::TrainReconOptions o;
    o.epochs = c.recon.epochs;
    o.checkpoint_epochs = c.recon.checkpoint_epochs;
    o.batch_size = c.recon.batch_size;
    o.learning_rate = c.recon.learning_rate;
    o.train_seed = seed_for(c.seed, "recon-train:" + name, 0);
    o.on_epoch = [&](int e, double loss) { ctx.out << "train-recon " << name << " epoch " << e << " loss " << loss << '\n' << std::flush; };
    const auto run = recon::train_recon(c.recon_spec(kind), lr, o);
    fs::create_directories(ctx.wd.recon_dir(kind));
    for (const auto& ck : run.checkpoints) {
      const auto path = ctx.wd.recon_checkpoint(kind, ck.epoch);
      recon::save_recon_checkpoint(ck, path.string());
      ctx.note(path);
    }
    const auto csv = ctx.wd.reports() / ("recon_" + name + "_loss.csv");
    std::ofstream f(csv);
    f << "epoch,loss\n";
    for (std::size_t e = 0; e < run.epoch_loss.size(); ++e) f << e + 1 << ',' << run.epoch_loss[e] << '\n';
    ctx.note(csv);
  }
}

void cmd_compare_recons(Context& ctx) {
  const auto& c = ctx.cfg;
  auto hr = load_hr(ctx, ctx.wd.hr_eval());
  hr.resize(std::min<std::size_t>(hr.size(), static_cast<std::size_t>(std::max(1, ctx.flags.samples))));
  const auto samples = downsample_all(hr, c.lr_size());
  for (auto kind : selected_kinds(ctx)) {
    std::vector<recon::ReconCheckpoint> ckpts;
    for (int e : c.recon.checkpoint_epochs) {
      const auto path = ctx.wd.recon_checkpoint(kind, e);
      if (!fs::exists(path)) throw ValidationError("missing checkpoint " + path.string() + "; run train-recon first");
      ckpts.push_back(recon::load_recon_checkpoint(path.string()));
    }
    const auto cmp = recon::compare_recons(ckpts, samples, seed_for(c.seed, "compare", 0));
    const auto dir = ctx.flags.out.empty() ? ctx.wd.reports() / ("compare_" + recon::to_string(kind)) : fs::path(ctx.flags.out) / recon::to_string(kind);
    const auto [png, csv] = recon::write_comparison(cmp, dir.string());
    ctx.note(png);
    ctx.note(csv);
  }
}

void cmd_forge(Context& ctx) {
  const auto& c = ctx.cfg;
  const auto kind = ctx.flags.kind.empty() ? c.forge.kind : selected_kinds(ctx).front();
  const int epoch = ctx.flags.epoch > 0 ? ctx.flags.epoch : c.forge.epoch;
  const auto ckpt_path = ctx.wd.recon_checkpoint(kind, epoch);
  if (!fs::exists(ckpt_path)) throw ValidationError("missing checkpoint " + ckpt_path.string() + "; run train-recon first");
  const auto ckpt = recon::load_recon_checkpoint(ckpt_path.string());
  const auto hr = load_hr(ctx, ctx.wd.hr_train());
  const auto d = forge::forge_dataset(hr, ckpt, c.scale, seed_for(c.seed, "forge", 0), c.hr_source);
  const auto dir = out_or(ctx, ctx.wd.dataset(forged_name(kind, epoch)));
  ctx.note(forge::save_dataset(d, dir.string()));
  ctx.out << "forge: " << d.size() << " pairs -> " << dir.string() << '\n';
}

void cmd_make_bicubic(Context& ctx) {
  const auto& c = ctx.cfg;
  const auto train = load_hr(ctx, ctx.wd.hr_train());
  const auto eval = load_hr(ctx, ctx.wd.hr_eval());
  const auto base = out_or(ctx, ctx.wd.dataset("bicubic"));
  ctx.note(forge::save_dataset(forge::make_bicubic_dataset(train, c.scale, c.hr_source), base.string()));
  ctx.note(forge::save_dataset(forge::make_bicubic_dataset(eval, c.scale, c.hr_source), ctx.wd.dataset("eval_clean").string()));
  const auto degraded = forge::make_degraded_dataset(eval, c.scale, c.eval.degradations, c.eval.min_severity, c.eval.max_severity,
                                                     seed_for(c.seed, "eval-degrade", 0), c.hr_source);
  ctx.note(forge::save_dataset(degraded, ctx.wd.dataset("eval_degraded").string()));
}

void cmd_train_degclf(Context& ctx) {
  const auto& c = ctx.cfg;
  const auto clean = downsample_all(load_hr(ctx, ctx.wd.hr_train()), c.lr_size());
  const std::vector<DegradationKind> classes(kAllDegradationKinds.begin(), kAllDegradationKinds.end());
  const auto corpus = analysis::build_degradation_corpus(clean, classes, c.classifier_per_class, seed_for(c.seed, "degclf-corpus", 0));
  const auto clf = analysis::train_degradation_classifier(corpus, c.classifier, seed_for(c.seed, "degclf", 0));
  const auto path = out_or(ctx, ctx.wd.classifier());
  fs::create_directories(path.parent_path());
  analysis::save_classifier(clf, path.string());
  ctx.note(path);
  fs::create_directories(ctx.wd.reports());
  const auto csv = ctx.wd.reports() / "degclf_confusion.csv";
  std::ofstream f(csv);
  f << "true\\predicted";
  for (auto k : classes) f << ',' << to_string(k);
  f << '\n';
  for (Eigen::Index r = 0; r < clf.confusion.rows(); ++r) {
    f << to_string(classes[static_cast<std::size_t>(r)]);
    for (Eigen::Index col = 0; col < clf.confusion.cols(); ++col) f << ',' << clf.confusion(r, col);
    f << '\n';
  }
  ctx.note(csv);
  ctx.out << "train-degclf: held-out accuracy " << clf.holdout_accuracy << '\n';
}

void cmd_analyze_entropy(Context& ctx) {
  const auto clf_path = ctx.wd.classifier();
  if (!fs::exists(clf_path)) throw ValidationError("missing classifier " + clf_path.string() + "; run train-degclf first");
  const auto clf = analysis::load_classifier(clf_path.string());
  const auto csv = out_or(ctx, ctx.wd.reports() / "entropy.csv");
  fs::create_directories(csv.parent_path());
  for (const auto& dir : dataset_args(ctx)) {
    auto d = forge::load_dataset(dir.string());
    const auto p = analysis::degradation_distribution(lr_images(d), clf);
    const double h = analysis::entropy(p);
    analysis::append_entropy_csv(csv.string(), dir.filename().string(), p);
    d.manifest.stats["entropy"] = h;
    forge::write_manifest(d.manifest, dir.string());
    ctx.out << "analyze-entropy " << dir.filename().string() << ' ' << p.classes.size() << ' ' << h << '\n';
  }
  ctx.note(csv);
}

void cmd_analyze_colordiff(Context& ctx) {
  const auto summary = out_or(ctx, ctx.wd.reports() / "colordiff_summary.csv");
  fs::create_directories(summary.parent_path());
  const bool fresh = !fs::exists(summary);
  std::ofstream s(summary, std::ios::app);
  s.precision(10);
  if (fresh) s << "dataset,pairs,mean_delta_e\n";
  for (const auto& dir : dataset_args(ctx)) {
    auto d = forge::load_dataset(dir.string());
    const std::string id = dir.filename().string();
    const auto r = analysis::dataset_color_diff(d, id);
    const auto csv = summary.parent_path() / ("colordiff_" + id + ".csv");
    analysis::write_color_diff_csv(r, csv.string());
    ctx.note(csv);
    s << id << ',' << r.per_pair.size() << ',' << r.mean << '\n';
    d.manifest.stats["mean_delta_e"] = r.mean;
    forge::write_manifest(d.manifest, dir.string());
    ctx.out << "analyze-colordiff " << id << ' ' << r.mean << '\n';
  }
  ctx.note(summary);
}

void cmd_make_shifted(Context& ctx) {
  const auto& c = ctx.cfg;
  const auto hr = load_hr(ctx, ctx.wd.hr_train());
  const auto sets = analysis::make_shifted_datasets(hr, c.shifts, c.scale, seed_for(c.seed, "shift", 0), c.hr_source);
  fs::create_directories(ctx.wd.reports());
  const auto csv = ctx.wd.reports() / "shift_datasets.csv";
  std::ofstream f(csv);
  f.precision(10);
  f << "dataset,dL,da,db,mean_delta_e\n";
  for (std::size_t k = 0; k < sets.size(); ++k) {
    const std::string name = "shift_" + std::to_string(k);
    ctx.note(forge::save_dataset(sets[k], ctx.wd.dataset(name).string()));
    const auto& s = *sets[k].manifest.shift;
    f << name << ',' << s.dL << ',' << s.da << ',' << s.db << ',' << sets[k].manifest.stats["mean_delta_e"].get<double>() << '\n';
  }
  ctx.note(csv);
}

sr::SrTrainOptions sr_options(const Context& ctx, long iters, double lr, std::uint64_t seed) {
  sr::SrTrainOptions o;
  o.iterations = ctx.flags.iters >= 0 ? ctx.flags.iters : iters;
  o.learning_rate = lr;
  o.batch_size = ctx.cfg.sr.batch_size;
  o.lr_patch = ctx.cfg.sr.lr_patch;
  o.log_every = ctx.cfg.sr.log_every;
  o.seed = seed;
  o.on_log = [&ctx](const sr::TrainLogEntry& e) { ctx.out << "sr iter " << e.iteration << " loss " << e.loss << '\n' << std::flush; };
  return o;
}

void write_sr_history(Context& ctx, const sr::SRModel& m, const std::string& name) {
  fs::create_directories(ctx.wd.reports());
  const auto csv = ctx.wd.reports() / ("sr_" + name + "_loss.csv");
  std::ofstream f(csv);
  f << "iteration,loss\n";
  for (const auto& e : m.history) f << e.iteration << ',' << e.loss << '\n';
  ctx.note(csv);
}

sr::SRModel pretrain(Context& ctx, const fs::path& dataset_dir, const std::string& name) {
  const auto& c = ctx.cfg;
  const auto data = forge::load_dataset(dataset_dir.string());
  const auto init = sr::build_sr_model(c.sr.spec, seed_for(c.seed, "sr-init", 0));
  // Every from-scratch run shares one init and one sampling seed, so runs on
  // different datasets differ only in their data.
  auto model = sr::train_sr(init, data, sr_options(ctx, c.sr.pretrain_iters, c.sr.learning_rate, seed_for(c.seed, "sr-train", 0)));
  const auto path = ctx.wd.sr_model(name);
  fs::create_directories(path.parent_path());
  sr::save_sr_model(model, path.string());
  ctx.note(path);
  write_sr_history(ctx, model, name);
  return model;
}

void cmd_sr_pretrain(Context& ctx) {
  const auto dir = ctx.flags.datasets.empty() ? ctx.wd.dataset("bicubic") : dataset_path(ctx, ctx.flags.datasets.front());
  const std::string name = ctx.flags.name.empty() ? "pretrained" : ctx.flags.name;
  if (!ctx.flags.out.empty()) throw ConfigError("sr-pretrain writes sr/<name>.ckpt; use --name instead of --out");
  pretrain(ctx, dir, name);
}

fs::path model_path(const Context& ctx, const std::string& arg) {
  const fs::path p(arg);
  if (p.extension() == ".ckpt" && fs::exists(p)) return p;
  return ctx.wd.sr_model(arg);
}

void cmd_sr_finetune(Context& ctx) {
  const auto& c = ctx.cfg;
  const auto from = model_path(ctx, ctx.flags.from.empty() ? "pretrained" : ctx.flags.from);
  if (!fs::exists(from)) throw ValidationError("missing SR model " + from.string() + "; run sr-pretrain first");
  const auto dir = ctx.flags.datasets.empty() ? ctx.wd.dataset(forged_name(c.forge.kind, c.forge.epoch))
                                              : dataset_path(ctx, ctx.flags.datasets.front());
  const auto data = forge::load_dataset(dir.string());
  const auto model = sr::train_sr(sr::load_sr_model(from.string()), data,
                                  sr_options(ctx, c.sr.finetune_iters, c.sr.finetune_learning_rate, seed_for(c.seed, "sr-finetune", 0)));
  const std::string name = ctx.flags.name.empty() ? "finetuned" : ctx.flags.name;
  const auto path = ctx.wd.sr_model(name);
  fs::create_directories(path.parent_path());
  sr::save_sr_model(model, path.string());
  ctx.note(path);
  write_sr_history(ctx, model, name);
}

void cmd_sr_eval(Context& ctx) {
  std::vector<std::string> models = ctx.flags.models;
  if (models.empty())
    for (const auto& e : fs::directory_iterator(ctx.wd.root() / "sr"))
      if (e.path().extension() == ".ckpt") models.push_back(e.path().stem().string());
  std::sort(models.begin(), models.end());
  if (models.empty()) throw ValidationError("no SR models to evaluate");
  std::vector<fs::path> sets;
  if (ctx.flags.datasets.empty()) sets = {ctx.wd.dataset("eval_clean"), ctx.wd.dataset("eval_degraded")};
  else
    for (const auto& d : ctx.flags.datasets) sets.push_back(dataset_path(ctx, d));

  const auto summary = out_or(ctx, ctx.wd.reports() / "sr_eval_summary.csv");
  fs::create_directories(summary.parent_path());
  const bool fresh = !fs::exists(summary);
  std::ofstream s(summary, std::ios::app);
  s.precision(10);
  if (fresh) s << "model,dataset,psnr_db,ssim,perceptual\n";
  for (const auto& set : sets) {
    const auto data = forge::load_dataset(set.string());
    for (const auto& m : models) {
      const auto mp = model_path(ctx, m);
      if (!fs::exists(mp)) throw ValidationError("missing SR model " + mp.string());
      const auto model = sr::load_sr_model(mp.string());
      sr::EvalOptions eo;
      eo.eval_id = set.filename().string();
      eo.perceptual_command = ctx.cfg.eval.perceptual_command;
      eo.scratch_dir = (ctx.wd.root() / "tmp").string();
      const auto r = sr::evaluate_sr(model, data, eo);
      const auto csv = summary.parent_path() / ("sr_eval_" + mp.stem().string() + "__" + eo.eval_id + ".csv");
      sr::write_metrics_csv(r, csv.string());
      ctx.note(csv);
      s << mp.stem().string() << ',' << eo.eval_id << ',' << r.psnr_mean << ',' << r.ssim_mean << ',';
      if (r.perceptual_mean) s << *r.perceptual_mean;
      s << '\n';
      ctx.out << "sr-eval " << mp.stem().string() << ' ' << eo.eval_id << " psnr " << r.psnr_mean << " ssim " << r.ssim_mean << '\n';
    }
  }
  ctx.note(summary);
}

void cmd_report(Context& ctx) {
  const auto eval = forge::load_dataset(ctx.wd.dataset("eval_clean").string());
  const auto csv = out_or(ctx, ctx.wd.reports() / "shift_report.csv");
  fs::create_directories(csv.parent_path());
  struct Row {
    std::string name;
    ShiftSpec shift;
    double delta_e, psnr, ssim;
  };
  std::vector<Row> rows;
  for (int k = 0; k < 9; ++k) {
    const std::string name = "shift_" + std::to_string(k);
    const auto dir = ctx.wd.dataset(name);
    const auto manifest = forge::read_manifest(dir.string());
    const auto model_file = ctx.wd.sr_model(name);
    const auto model = fs::exists(model_file) ? sr::load_sr_model(model_file.string()) : pretrain(ctx, dir, name);
    sr::EvalOptions eo;
    eo.eval_id = "eval_clean";
    const auto r = sr::evaluate_sr(model, eval, eo);
    const double de = manifest.stats.contains("mean_delta_e") ? manifest.stats["mean_delta_e"].get<double>()
                                                               : analysis::dataset_color_diff(forge::load_dataset(dir.string())).mean;
    rows.push_back({name, manifest.shift.value_or(ShiftSpec{}), de, r.psnr_mean, r.ssim_mean});
  }
  std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) { return a.delta_e < b.delta_e; });
  std::ofstream f(csv);
  f.precision(10);
  f << "dataset,dL,da,db,mean_delta_e,psnr_db,ssim\n";
  for (const auto& r : rows)
    f << r.name << ',' << r.shift.dL << ',' << r.shift.da << ',' << r.shift.db << ',' << r.delta_e << ',' << r.psnr << ',' << r.ssim << '\n';
  ctx.note(csv);
  for (const auto& r : rows) ctx.out << "report " << r.name << " dE " << r.delta_e << " psnr " << r.psnr << " ssim " << r.ssim << '\n';
}

// ---- dispatch -------------------------------------------------------------

std::string iso_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void print_error(std::ostream& err, int code, const std::string& kind, const std::string& message, std::int64_t index = -1) {
  err << "forgesr-error code=" << code << " kind=" << kind;
  if (index >= 0) err << " index=" << index;
  err << " message=" << json(message).dump() << '\n';
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  Flags flags;
  CLI::App app{"Degradation forging pipeline for super-resolution training data.", "forgesr"};
  app.require_subcommand(1);
  app.fallthrough();
  app.add_option("--config", flags.config_path, "Experiment config (JSON)");
  app.add_option("--workdir", flags.workdir, "Work directory (overrides FORGESR_WORKDIR and the config)");
  app.add_option("--seed", flags.seed, "Master seed override");
  app.add_option("--threads", flags.threads, "Worker threads")->check(CLI::PositiveNumber);
  app.add_option("--out", flags.out, "Override the primary output path");

  using Handler = void (*)(Context&);
  std::vector<std::pair<CLI::App*, Handler>> commands;
  auto sub = [&](const char* name, const char* help, Handler h) {
    CLI::App* s = app.add_subcommand(name, help);
    commands.emplace_back(s, h);
    return s;
  };
  sub("crop", "Cut HR crops from the configured source into hr/train and hr/eval", cmd_crop);
  sub("train-recon", "Train reconstruction models and save epoch checkpoints", cmd_train_recon)
      ->add_option("--kind", flags.kind, "vqvae | vqvae2 | mae (default: all configured)");
  auto* cmp = sub("compare-recons", "Grid + PSNR table of checkpoints on eval samples", cmd_compare_recons);
  cmp->add_option("--kind", flags.kind, "Model kind (default: all configured)");
  cmp->add_option("--samples", flags.samples, "Number of eval samples")->check(CLI::PositiveNumber);
  auto* forge_cmd = sub("forge", "Build a forged dataset with an undertrained checkpoint", cmd_forge);
  forge_cmd->add_option("--kind", flags.kind, "Model kind (default from config)");
  forge_cmd->add_option("--epoch", flags.epoch, "Checkpoint epoch (default from config)");
  sub("make-bicubic", "Build the bicubic training set and the clean/degraded eval sets", cmd_make_bicubic);
  sub("train-degclf", "Train the degradation classifier", cmd_train_degclf);
  sub("analyze-entropy", "Degradation entropy of datasets", cmd_analyze_entropy)
      ->add_option("--dataset,datasets", flags.datasets, "Dataset names or directories (default: all)");
  sub("analyze-colordiff", "Mean CIEDE2000 between HR and LR of datasets", cmd_analyze_colordiff)
      ->add_option("--dataset,datasets", flags.datasets, "Dataset names or directories (default: all)");
  sub("make-shifted", "Build the nine LAB-shifted datasets", cmd_make_shifted);
  auto* pre = sub("sr-pretrain", "Train an SR model from scratch", cmd_sr_pretrain);
  pre->add_option("--dataset", flags.datasets, "Training dataset (default: bicubic)");
  pre->add_option("--name", flags.name, "Model name under sr/ (default: pretrained)");
  pre->add_option("--iters", flags.iters, "Iterations (default from config)");
  auto* ft = sub("sr-finetune", "Fine-tune an SR model on a dataset", cmd_sr_finetune);
  ft->add_option("--from", flags.from, "Starting model name or .ckpt path (default: pretrained)");
  ft->add_option("--dataset", flags.datasets, "Training dataset (default: configured forged set)");
  ft->add_option("--name", flags.name, "Model name under sr/ (default: finetuned)");
  ft->add_option("--iters", flags.iters, "Iterations (default from config)");
  auto* ev = sub("sr-eval", "Evaluate SR models on eval sets", cmd_sr_eval);
  ev->add_option("--model", flags.models, "Model names or .ckpt paths (default: all under sr/)");
  ev->add_option("--dataset", flags.datasets, "Eval datasets (default: eval_clean, eval_degraded)");
  sub("report", "Shift experiment: train per shifted set, evaluate, write the CSV", cmd_report);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    print_error(err, kExitUsage, "usage", e.what());
    return kExitUsage;
  }

  std::string command;
  Handler handler = nullptr;
  for (const auto& [s, h] : commands)
    if (s->parsed()) {
      command = s->get_name();
      handler = h;
    }

  const auto started = std::chrono::steady_clock::now();
  const std::string started_at = iso_now();
  std::optional<Context> ctx;
  try {
    ExperimentConfig cfg = flags.config_path.empty() ? default_config() : load_config(flags.config_path);
    if (flags.seed) cfg.seed = *flags.seed;
    if (flags.threads) cfg.threads = *flags.threads;
    if (!flags.workdir.empty()) cfg.workdir = flags.workdir;
    else if (const char* env = std::getenv("FORGESR_WORKDIR"); env && *env) cfg.workdir = env;
    set_worker_threads(cfg.threads);
    ctx.emplace(Context{cfg, Workdir(cfg.workdir), flags, out, {}});
    fs::create_directories(ctx->wd.root());
    DirLock lock(ctx->wd.lock_file());
    try {
      handler(*ctx);
    } catch (...) {
      const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
      std::string what = "unknown error";
      try {
        throw;
      } catch (const std::exception& e) {
        what = e.what();
      } catch (...) {
      }
      append_run_log(ctx->wd.run_log(), {{"command", command},
                                         {"config_hash", config_hash(cfg)},
                                         {"version", version_string()},
                                         {"started_at", started_at},
                                         {"wall_seconds", wall},
                                         {"status", "failed"},
                                         {"error", what},
                                         {"artifacts", ctx->artifacts}});
      throw;
    }
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    append_run_log(ctx->wd.run_log(), {{"command", command},
                                       {"config_hash", config_hash(cfg)},
                                       {"config", to_json(cfg)},
                                       {"version", version_string()},
                                       {"started_at", started_at},
                                       {"wall_seconds", wall},
                                       {"status", "ok"},
                                       {"artifacts", ctx->artifacts}});
    return kExitOk;
  } catch (const ConfigError& e) {
    print_error(err, kExitUsage, "config", e.what());
    return kExitUsage;
  } catch (const InvalidArgument& e) {
    print_error(err, kExitUsage, "invalid-argument", e.what());
    return kExitUsage;
  } catch (const ValidationError& e) {
    print_error(err, kExitValidation, "validation", e.what(), e.index());
    return kExitValidation;
  } catch (const TrainingDiverged& e) {
    print_error(err, kExitRuntime, "training-diverged", e.what());
    return kExitRuntime;
  } catch (const ClassifierUnusable& e) {
    print_error(err, kExitRuntime, "classifier-unusable", e.what());
    return kExitRuntime;
  } catch (const LockError& e) {
    print_error(err, kExitRuntime, "locked", e.what());
    return kExitRuntime;
  } catch (const std::exception& e) {
    print_error(err, kExitRuntime, "runtime", e.what());
    return kExitRuntime;
  }
}

}  // namespace forgesr::cli
