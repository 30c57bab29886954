#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "forgesr/cli/commands.hpp"
#include "forgesr/cli/config.hpp"
#include "forgesr/cli/workdir.hpp"

using namespace forgesr;
using namespace forgesr::cli;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "forgesr");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

struct Sandbox {
  fs::path root;
  explicit Sandbox(const std::string& name) : root(fs::temp_directory_path() / ("forgesr_cli_" + name)) {
    fs::remove_all(root);
    fs::create_directories(root);
    ::unsetenv("FORGESR_WORKDIR");
  }
  ~Sandbox() { fs::remove_all(root); }
  std::string write_config(const nlohmann::json& j, const std::string& name = "config.json") const {
    const auto p = root / name;
    std::ofstream(p) << j.dump(2);
    return p.string();
  }
  std::string work() const { return (root / "work").string(); }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

nlohmann::json tiny_config() {
  return {{"format_version", 1},
          {"seed", 5},
          {"hr_source", "synthetic:40"},
          {"crop_size", 64},
          {"crop_stride", 64},
          {"eval_count", 8},
          {"recon",
           {{"kinds", {"vqvae2"}},
            {"epochs", 2},
            {"checkpoint_epochs", {1, 2}},
            {"batch_size", 16},
            {"models", {{"vqvae2", {{"width", 8}, {"res_blocks", 1}, {"codebook_size", 16}, {"code_dim", 8}}}}}}},
          {"forge", {{"kind", "vqvae2"}, {"epoch", 1}}},
          {"sr", {{"width", 8}, {"blocks", 1}, {"pretrain_iters", 5}, {"finetune_iters", 5}}}};
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("unknown config key exits 1 naming the key") {
  Sandbox sb("unknown_key");
  auto j = tiny_config();
  j["crop_sise"] = 64;
  const auto r = run({"--config", sb.write_config(j), "--workdir", sb.work(), "crop"});
  CHECK(r.code == 1);
  CHECK(r.err.find("crop_sise") != std::string::npos);
  CHECK(r.err.rfind("forgesr-error code=1 kind=config", 0) == 0);

  auto nested = tiny_config();
  nested["recon"]["epoch"] = 3;
  const auto r2 = run({"--config", sb.write_config(nested), "--workdir", sb.work(), "crop"});
  CHECK(r2.code == 1);
  CHECK(r2.err.find("recon.epoch") != std::string::npos);
}

TEST_CASE("config errors and usage errors exit 1") {
  Sandbox sb("usage");
  auto j = tiny_config();
  j.erase("format_version");
  CHECK(run({"--config", sb.write_config(j), "crop"}).code == 1);
  j = tiny_config();
  j["format_version"] = 7;
  CHECK(run({"--config", sb.write_config(j), "crop"}).code == 1);
  j = tiny_config();
  j["scale"] = "four";
  CHECK(run({"--config", sb.write_config(j), "crop"}).code == 1);
  CHECK(run({"--config", (sb.root / "missing.json").string(), "crop"}).code == 1);
  CHECK(run({"frobnicate"}).code == 1);
  CHECK(run({}).code == 1);
  CHECK(run({"--workdir", sb.work(), "crop", "--bogus"}).code == 1);
  CHECK(run({"--workdir", sb.work(), "train-recon", "--kind", "vae"}).code == 1);
  CHECK(run({"--help"}).code == 0);
}

TEST_CASE("config round trip and hash stability") {
  const auto c = default_config();
  CHECK(config_hash(parse_config(to_json(c))) == config_hash(c));
  auto j = to_json(c);
  j["seed"] = 1;
  CHECK(config_hash(parse_config(j)) != config_hash(c));
  CHECK(c.lr_size() == 32);
  CHECK(c.shifts.size() == 8);
}

TEST_CASE("missing inputs exit 2 with a machine-parsable line") {
  Sandbox sb("validation");
  const auto cfg = sb.write_config(tiny_config());
  const auto r = run({"--config", cfg, "--workdir", sb.work(), "forge"});
  CHECK(r.code == 2);
  CHECK(r.err.rfind("forgesr-error code=2 kind=validation", 0) == 0);
  CHECK(r.err.find("message=\"") != std::string::npos);
  CHECK(std::count(r.err.begin(), r.err.end(), '\n') == 1);
}

TEST_CASE("a held lock exits 3") {
  Sandbox sb("lock");
  fs::create_directories(sb.work());
  DirLock held(Workdir(sb.work()).lock_file());
  const auto r = run({"--config", sb.write_config(tiny_config()), "--workdir", sb.work(), "crop"});
  CHECK(r.code == 3);
  CHECK(r.err.find("kind=locked") != std::string::npos);
}

TEST_CASE("workdir precedence: flag, then environment, then config") {
  Sandbox sb("precedence");
  auto j = tiny_config();
  j["workdir"] = (sb.root / "from_config").string();
  const auto cfg = sb.write_config(j);
  CHECK(run({"--config", cfg, "crop"}).code == 0);
  CHECK(fs::exists(sb.root / "from_config" / "hr" / "train"));
  ::setenv("FORGESR_WORKDIR", (sb.root / "from_env").c_str(), 1);
  CHECK(run({"--config", cfg, "crop"}).code == 0);
  CHECK(fs::exists(sb.root / "from_env" / "hr" / "train"));
  CHECK(run({"--config", cfg, "--workdir", (sb.root / "from_flag").string(), "crop"}).code == 0);
  CHECK(fs::exists(sb.root / "from_flag" / "hr" / "train"));
  ::unsetenv("FORGESR_WORKDIR");
}

TEST_CASE("pipeline subcommands, run log and forge replay") {
  Sandbox sb("pipeline");
  const auto cfg = sb.write_config(tiny_config());
  const std::string w = sb.work();
  auto ok = [&](std::vector<std::string> extra) {
    std::vector<std::string> args = {"--config", cfg, "--workdir", w};
    args.insert(args.end(), extra.begin(), extra.end());
    const auto r = run(args);
    CHECK_MESSAGE(r.code == 0, extra.front(), ": ", r.err);
    return r;
  };
  ok({"crop"});
  CHECK(std::distance(fs::directory_iterator(fs::path(w) / "hr" / "train"), {}) == 32);
  CHECK(std::distance(fs::directory_iterator(fs::path(w) / "hr" / "eval"), {}) == 8);
  ok({"train-recon"});
  CHECK(fs::exists(fs::path(w) / "recon" / "vqvae2" / "epoch_001.ckpt"));
  CHECK(fs::exists(fs::path(w) / "recon" / "vqvae2" / "epoch_002.ckpt"));
  ok({"compare-recons", "--samples", "2"});
  CHECK(fs::exists(fs::path(w) / "reports" / "compare_vqvae2" / "grid.png"));
  ok({"forge"});
  const auto forged = fs::path(w) / "datasets" / "forged_vqvae2_ep1";
  const std::string first_lr = slurp(forged / "lr" / "000005.png"), first_manifest = slurp(forged / "manifest.json");
  ok({"forge"});
  CHECK(slurp(forged / "lr" / "000005.png") == first_lr);
  CHECK(slurp(forged / "manifest.json") == first_manifest);
  ok({"forge", "--epoch", "2"});
  CHECK(fs::exists(fs::path(w) / "datasets" / "forged_vqvae2_ep2" / "manifest.json"));

  ok({"make-bicubic"});
  ok({"analyze-colordiff", "--dataset", "bicubic", "forged_vqvae2_ep1"});
  const auto m = nlohmann::json::parse(slurp(fs::path(w) / "datasets" / "bicubic" / "manifest.json"));
  CHECK(m["stats"]["mean_delta_e"].get<double>() == 0.0);
  CHECK(fs::exists(fs::path(w) / "reports" / "colordiff_forged_vqvae2_ep1.csv"));
  ok({"make-shifted"});
  CHECK(fs::exists(fs::path(w) / "datasets" / "shift_8" / "manifest.json"));
  ok({"sr-pretrain"});
  ok({"sr-finetune"});
  ok({"sr-eval", "--model", "pretrained", "finetuned", "--dataset", "eval_clean"});
  CHECK(fs::exists(fs::path(w) / "reports" / "sr_eval_finetuned__eval_clean.csv"));
  ok({"report"});
  std::ifstream rep(fs::path(w) / "reports" / "shift_report.csv");
  std::string header;
  std::getline(rep, header);
  CHECK(header == "dataset,dL,da,db,mean_delta_e,psnr_db,ssim");
  int rows = 0;
  for (std::string line; std::getline(rep, line);) ++rows;
  CHECK(rows == 9);

  std::ifstream log(fs::path(w) / "run_log.jsonl");
  int entries = 0;
  for (std::string line; std::getline(log, line); ++entries) {
    const auto e = nlohmann::json::parse(line);
    CHECK(e.contains("command"));
    CHECK(e["config_hash"].get<std::string>().size() == 64);
    CHECK(e.contains("version"));
    CHECK(e["wall_seconds"].get<double>() >= 0.0);
    CHECK(e.contains("artifacts"));
  }
  CHECK(entries == 13);
}

}
