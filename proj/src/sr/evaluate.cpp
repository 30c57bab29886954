#include <unistd.h>

#include <atomic>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "forgesr/core/parallel.hpp"
#include "forgesr/imgcore/image_io.hpp"
#include "forgesr/imgcore/metrics.hpp"
#include "forgesr/sr/sr.hpp"

namespace forgesr::sr {

namespace fs = std::filesystem;

namespace {

std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') out += "'\\''";
    else out += c;
  }
  return out + "'";
}

}  // namespace

std::optional<double> run_perceptual_scorer(const std::string& command, const Image& a, const Image& b,
                                            const std::string& scratch_dir) {
  if (command.empty()) return std::nullopt;
  static std::atomic<unsigned> counter{0};
  const fs::path dir = scratch_dir.empty() ? fs::temp_directory_path() : fs::path(scratch_dir);
  const std::string stem = "forgesr_score_" + std::to_string(::getpid()) + "_" + std::to_string(counter++);
  const fs::path pa = dir / (stem + "_a.png"), pb = dir / (stem + "_b.png");
  std::optional<double> result;
  try {
    fs::create_directories(dir);
    write_png(a, pa.string());
    write_png(b, pb.string());
    const std::string cmd = command + " " + shell_quote(pa.string()) + " " + shell_quote(pb.string()) + " 2>/dev/null";
    if (FILE* pipe = ::popen(cmd.c_str(), "r")) {
      std::string text;
      char buf[256];
      while (std::fgets(buf, sizeof buf, pipe)) text += buf;
      const int status = ::pclose(pipe);
      if (status == 0) {
        const char* begin = text.c_str();
        char* end = nullptr;
        const double v = std::strtod(begin, &end);
        bool trailing_ok = end != begin;
        for (const char* p = end; trailing_ok && *p; ++p) trailing_ok = std::isspace(static_cast<unsigned char>(*p)) != 0;
        if (trailing_ok && std::isfinite(v)) result = v;
      }
    }
  } catch (const std::exception&) {
    result.reset();
  }
  std::error_code ec;
  fs::remove(pa, ec);
  fs::remove(pb, ec);
  return result;
}

MetricsReport evaluate_sr(const SRModel& model, const forge::PairedDataset& eval, const EvalOptions& opts) {
  if (eval.manifest.scale != model.spec.scale)
    throw InvalidArgument("evaluate_sr: eval scale " + std::to_string(eval.manifest.scale) + " differs from model scale " +
                          std::to_string(model.spec.scale));
  if (eval.pairs.empty()) throw InvalidArgument("evaluate_sr: empty eval set");
  std::vector<Image> lr;
  lr.reserve(eval.pairs.size());
  for (const auto& p : eval.pairs) lr.push_back(p.lr);
  const auto sr = super_resolve(model, lr);

  MetricsReport r;
  r.eval_id = opts.eval_id;
  r.rows.resize(eval.pairs.size());
  parallel_for(eval.pairs.size(), [&](std::size_t i) {
    r.rows[i].index = i;
    r.rows[i].psnr = psnr(sr[i], eval.pairs[i].hr);
    r.rows[i].ssim = ssim(sr[i], eval.pairs[i].hr);
  });
  if (!opts.perceptual_command.empty())
    for (std::size_t i = 0; i < r.rows.size(); ++i)
      r.rows[i].perceptual = run_perceptual_scorer(opts.perceptual_command, sr[i], eval.pairs[i].hr, opts.scratch_dir);

  double ps = 0.0, ss = 0.0, pe = 0.0;
  bool all_scored = !opts.perceptual_command.empty();
  for (const auto& row : r.rows) {
    ps += row.psnr;
    ss += row.ssim;
    if (row.perceptual) pe += *row.perceptual;
    else all_scored = false;
  }
  const auto n = static_cast<double>(r.rows.size());
  r.psnr_mean = ps / n;
  r.ssim_mean = ss / n;
  if (all_scored) r.perceptual_mean = pe / n;
  return r;
}

void write_metrics_csv(const MetricsReport& r, const std::string& path) {
  std::ofstream out(path);
  out.precision(10);
  out << "eval,pair,psnr_db,ssim,perceptual\n";
  for (const auto& row : r.rows) {
    out << r.eval_id << ',' << row.index << ',' << row.psnr << ',' << row.ssim << ',';
    if (row.perceptual) out << *row.perceptual;
    out << '\n';
  }
  out << r.eval_id << ",mean," << r.psnr_mean << ',' << r.ssim_mean << ',';
  if (r.perceptual_mean) out << *r.perceptual_mean;
  out << '\n';
  if (!out) throw std::runtime_error("cannot write " + path);
}

}  // namespace forgesr::sr
