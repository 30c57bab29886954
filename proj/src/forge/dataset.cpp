#include "forgesr/forge/dataset.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "forgesr/core/error.hpp"
#include "forgesr/core/parallel.hpp"
#include "forgesr/core/seed.hpp"
#include "forgesr/imgcore/image_io.hpp"

namespace forgesr::forge {

namespace fs = std::filesystem;

namespace {

std::string pair_name(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%06zu.png", i);
  return buf;
}

std::size_t count_pngs(const fs::path& dir) {
  std::size_t n = 0;
  if (!fs::is_directory(dir)) return 0;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".png") ++n;
  return n;
}

}  // namespace

nlohmann::json to_json(const DatasetManifest& m) {
  nlohmann::json gen = {{"type", m.generator.type}};
  if (m.generator.type == "recon") {
    gen["kind"] = m.generator.recon_kind;
    gen["epoch"] = m.generator.epoch;
    gen["checkpoint_sha256"] = m.generator.checkpoint_sha256;
    gen["train_seed"] = std::to_string(m.generator.train_seed);
  } else if (m.generator.type == "degraded") {
    gen["recipe"] = m.generator.recipe;
  }
  nlohmann::json j = {{"format_version", m.format_version},
                      {"scale", m.scale},
                      {"hr_source", m.hr_source},
                      {"generator", gen},
                      {"crop_size", m.crop_size},
                      {"seed", std::to_string(m.seed)},
                      {"pair_count", m.pair_count},
                      {"hr_digest", m.hr_digest},
                      {"stats", m.stats}};
  if (!m.mask_seed_rule.empty()) j["mask_seed_rule"] = m.mask_seed_rule;
  if (m.shift) j["shift"] = {{"dL", m.shift->dL}, {"da", m.shift->da}, {"db", m.shift->db}};
  return j;
}

DatasetManifest manifest_from_json(const nlohmann::json& j) {
  DatasetManifest m;
  try {
    m.format_version = j.at("format_version").get<int>();
    if (m.format_version != kDatasetFormatVersion)
      throw ValidationError("unsupported dataset format_version " + std::to_string(m.format_version));
    m.scale = j.at("scale").get<int>();
    m.hr_source = j.value("hr_source", "");
    const auto& gen = j.at("generator");
    m.generator.type = gen.at("type").get<std::string>();
    if (m.generator.type == "recon") {
      m.generator.recon_kind = gen.at("kind").get<std::string>();
      m.generator.epoch = gen.at("epoch").get<int>();
      m.generator.checkpoint_sha256 = gen.value("checkpoint_sha256", "");
      m.generator.train_seed = std::stoull(gen.value("train_seed", "0"));
    } else if (m.generator.type == "degraded") {
      m.generator.recipe = gen.at("recipe");
    } else if (m.generator.type != "bicubic") {
      throw ValidationError("unknown generator type '" + m.generator.type + "'");
    }
    m.crop_size = j.value("crop_size", 0);
    m.seed = std::stoull(j.value("seed", "0"));
    m.mask_seed_rule = j.value("mask_seed_rule", "");
    m.pair_count = j.at("pair_count").get<int>();
    m.hr_digest = j.value("hr_digest", "");
    if (j.contains("shift")) {
      const auto& s = j.at("shift");
      m.shift = ShiftSpec{s.at("dL").get<double>(), s.at("da").get<double>(), s.at("db").get<double>()};
    }
    m.stats = j.value("stats", nlohmann::json::object());
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed manifest: ") + e.what());
  }
  if (m.scale < 1) throw ValidationError("manifest scale must be >= 1");
  if (m.pair_count < 1) throw ValidationError("manifest pair_count must be >= 1");
  return m;
}

void check_shape_law(const PairedDataset& d) {
  if (d.pairs.empty()) throw ValidationError("dataset has no pairs");
  if (static_cast<int>(d.pairs.size()) != d.manifest.pair_count)
    throw ValidationError("manifest pair_count " + std::to_string(d.manifest.pair_count) + " but dataset holds " +
                          std::to_string(d.pairs.size()) + " pairs");
  const int s = d.manifest.scale;
  for (std::size_t i = 0; i < d.pairs.size(); ++i) {
    const auto& p = d.pairs[i];
    if (p.hr.height() != s * p.lr.height() || p.hr.width() != s * p.lr.width())
      throw ValidationError("scale mismatch at pair " + std::to_string(i) + ": hr " + std::to_string(p.hr.height()) + "x" +
                                std::to_string(p.hr.width()) + " is not " + std::to_string(s) + " x lr " +
                                std::to_string(p.lr.height()) + "x" + std::to_string(p.lr.width()),
                            static_cast<std::int64_t>(i));
    if (d.manifest.crop_size > 0 && (p.hr.height() != d.manifest.crop_size || p.hr.width() != d.manifest.crop_size))
      throw ValidationError("hr dims at pair " + std::to_string(i) + " differ from manifest crop_size " +
                                std::to_string(d.manifest.crop_size),
                            static_cast<std::int64_t>(i));
  }
}

std::string images_digest(const std::vector<const Image*>& images) {
  Sha256 h;
  for (const Image* img : images) {
    h.update(std::to_string(img->height()) + "x" + std::to_string(img->width()) + ";");
    const auto bytes = to_rgb8(*img);
    h.update(bytes);
  }
  return h.hex_digest();
}

std::string hr_digest(const PairedDataset& d) {
  std::vector<const Image*> hr;
  for (const auto& p : d.pairs) hr.push_back(&p.hr);
  return images_digest(hr);
}

void write_manifest(const DatasetManifest& m, const std::string& dir) {
  const fs::path path = fs::path(dir) / "manifest.json";
  std::ofstream out(path);
  out << to_json(m).dump(2) << '\n';
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

DatasetManifest read_manifest(const std::string& dir) {
  const fs::path path = fs::path(dir) / "manifest.json";
  std::ifstream in(path);
  if (!in) throw ValidationError("missing manifest.json in " + dir);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("manifest.json is not valid JSON: " + std::string(e.what()));
  }
  return manifest_from_json(j);
}

std::string save_dataset(const PairedDataset& d, const std::string& dir) {
  check_shape_law(d);
  const fs::path root(dir);
  // The identity fields fix every output byte, so stats computed on a
  // previous write with the same identity still hold.
  DatasetManifest m = d.manifest;
  if (m.stats.empty() && fs::is_regular_file(root / "manifest.json")) {
    try {
      const DatasetManifest old = read_manifest(dir);
      nlohmann::json a = to_json(old), b = to_json(m);
      a.erase("stats");
      b.erase("stats");
      if (a == b) m.stats = old.stats;
    } catch (const std::exception&) {
    }
  }
  fs::create_directories(root);
  fs::remove_all(root / "hr");
  fs::remove_all(root / "lr");
  fs::create_directories(root / "hr");
  fs::create_directories(root / "lr");
  parallel_for(d.pairs.size(), [&](std::size_t i) {
    write_png(d.pairs[i].hr, (root / "hr" / pair_name(i)).string());
    write_png(d.pairs[i].lr, (root / "lr" / pair_name(i)).string());
  });
  write_manifest(m, dir);
  return (root / "manifest.json").string();
}

PairedDataset load_dataset(const std::string& dir) {
  const fs::path root(dir);
  PairedDataset d;
  d.manifest = read_manifest(dir);
  const auto n = static_cast<std::size_t>(d.manifest.pair_count);
  for (const char* side : {"hr", "lr"}) {
    for (std::size_t i = 0; i < n; ++i)
      if (!fs::is_regular_file(root / side / pair_name(i)))
        throw ValidationError(std::string("missing ") + side + " file for pair " + std::to_string(i), static_cast<std::int64_t>(i));
    const std::size_t found = count_pngs(root / side);
    if (found != n)
      throw ValidationError(std::string(side) + "/ holds " + std::to_string(found) + " images but manifest pair_count is " +
                            std::to_string(n));
  }
  d.pairs.resize(n);
  parallel_for(n, [&](std::size_t i) {
    try {
      d.pairs[i].hr = read_png((root / "hr" / pair_name(i)).string());
      d.pairs[i].lr = read_png((root / "lr" / pair_name(i)).string());
    } catch (const ValidationError&) {
      throw;
    } catch (const std::exception& e) {
      throw ValidationError("unreadable image for pair " + std::to_string(i) + ": " + e.what(), static_cast<std::int64_t>(i));
    }
  });
  check_shape_law(d);
  return d;
}

}  // namespace forgesr::forge
