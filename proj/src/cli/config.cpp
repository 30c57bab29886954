#include "forgesr/cli/config.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "forgesr/analysis/color_diff.hpp"
#include "forgesr/core/seed.hpp"

namespace forgesr::cli {

using nlohmann::json;

namespace {

// Strict view over one JSON object: every key must be consumed.
class Section {
public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j.is_object()) throw ConfigError("config key '" + label() + "' must be an object");
  }

  template <typename T>
  void read(const char* key, T& out) {
    if (!j_.contains(key)) return;
    seen_.insert(key);
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception&) {
      throw ConfigError("config key '" + child(key) + "' has the wrong type");
    }
  }

  const json* section(const char* key) {
    if (!j_.contains(key)) return nullptr;
    seen_.insert(key);
    return &j_.at(key);
  }

  std::string child(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  void finish() const {
    for (const auto& [key, value] : j_.items())
      if (!seen_.count(key)) throw ConfigError("unknown config key '" + child(key) + "'");
  }

private:
  std::string label() const { return path_.empty() ? "<root>" : path_; }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

void require(bool ok, const std::string& key, const std::string& what) {
  if (!ok) throw ConfigError("config key '" + key + "' " + what);
}

recon::ReconKind kind_from(const std::string& name, const std::string& key) {
  try {
    return recon::parse_recon_kind(name);
  } catch (const InvalidArgument&) {
    throw ConfigError("config key '" + key + "' has unknown model kind '" + name + "'");
  }
}

}  // namespace

const recon::ReconModelSpec& ExperimentConfig::recon_spec(recon::ReconKind kind) const {
  for (const auto& s : recon.specs)
    if (s.kind == kind) return s;
  throw ConfigError("no reconstruction spec for kind " + recon::to_string(kind));
}

ExperimentConfig default_config() { return parse_config(json{{"format_version", kConfigFormatVersion}}); }

ExperimentConfig parse_config(const json& j) {
  ExperimentConfig c;
  Section root(j, "");
  if (!j.is_object() || !j.contains("format_version")) throw ConfigError("config key 'format_version' is required");
  root.read("format_version", c.format_version);
  require(c.format_version == kConfigFormatVersion, "format_version",
          "must be " + std::to_string(kConfigFormatVersion) + " (got " + std::to_string(c.format_version) + ")");
  root.read("seed", c.seed);
  root.read("threads", c.threads);
  root.read("workdir", c.workdir);
  root.read("hr_source", c.hr_source);
  root.read("scale", c.scale);
  root.read("crop_size", c.crop_size);
  root.read("crop_stride", c.crop_stride);
  root.read("eval_count", c.eval_count);
  require(c.threads >= 1, "threads", "must be >= 1");
  require(c.scale == 2 || c.scale == 4, "scale", "must be 2 or 4");
  require(c.crop_size >= c.scale && c.crop_size % c.scale == 0, "crop_size", "must be a positive multiple of scale");
  require(c.crop_stride >= 1, "crop_stride", "must be >= 1");
  require(c.eval_count >= 1, "eval_count", "must be >= 1");
  require(c.hr_source.rfind("synthetic:", 0) == 0 || c.hr_source.rfind("dir:", 0) == 0, "hr_source",
          "must start with 'synthetic:' or 'dir:'");

  // recon
  std::vector<std::string> kind_names;
  json model_overrides = json::object();
  if (const json* r = root.section("recon")) {
    Section s(*r, "recon");
    if (r->contains("kinds")) {
      s.read("kinds", kind_names);
      c.recon.kinds.clear();
      for (const auto& k : kind_names) c.recon.kinds.push_back(kind_from(k, "recon.kinds"));
    }
    s.read("epochs", c.recon.epochs);
    s.read("checkpoint_epochs", c.recon.checkpoint_epochs);
    s.read("batch_size", c.recon.batch_size);
    s.read("learning_rate", c.recon.learning_rate);
    s.read("train_count", c.recon.train_count);
    if (const json* m = s.section("models")) {
      require(m->is_object(), "recon.models", "must be an object");
      model_overrides = *m;
    }
    s.finish();
  }
  require(!c.recon.kinds.empty(), "recon.kinds", "must not be empty");
  require(c.recon.epochs >= 1, "recon.epochs", "must be >= 1");
  require(!c.recon.checkpoint_epochs.empty(), "recon.checkpoint_epochs", "must not be empty");
  for (int e : c.recon.checkpoint_epochs)
    require(e >= 1 && e <= c.recon.epochs, "recon.checkpoint_epochs", "entries must lie in [1, recon.epochs]");
  require(c.recon.batch_size >= 1, "recon.batch_size", "must be >= 1");
  require(c.recon.learning_rate > 0, "recon.learning_rate", "must be > 0");
  require(c.recon.train_count >= 0, "recon.train_count", "must be >= 0");
  for (auto kind : {recon::ReconKind::vqvae, recon::ReconKind::vqvae2, recon::ReconKind::mae}) {
    json spec = to_json(recon::default_recon_spec(kind, c.lr_size()));
    const std::string name = recon::to_string(kind);
    if (model_overrides.contains(name)) {
      const json& o = model_overrides.at(name);
      require(o.is_object(), "recon.models." + name, "must be an object");
      for (const auto& [key, value] : o.items()) {
        require(key != "kind" && key != "input_size", "recon.models." + name + "." + key, "is derived and cannot be set");
        require(spec.contains(key), "recon.models." + name + "." + key, "is not a known model field (unknown config key)");
        spec[key] = value;
      }
    }
    try {
      c.recon.specs.push_back(recon::spec_from_json(spec));
    } catch (const std::exception& e) {
      throw ConfigError("config key 'recon.models." + name + "' is invalid: " + e.what());
    }
  }
  for (const auto& [key, value] : model_overrides.items()) kind_from(key, "recon.models");

  if (const json* f = root.section("forge")) {
    Section s(*f, "forge");
    std::string kind = recon::to_string(c.forge.kind);
    s.read("kind", kind);
    c.forge.kind = kind_from(kind, "forge.kind");
    s.read("epoch", c.forge.epoch);
    s.finish();
  }
  require(std::count(c.recon.checkpoint_epochs.begin(), c.recon.checkpoint_epochs.end(), c.forge.epoch) == 1, "forge.epoch",
          "must be one of recon.checkpoint_epochs");

  c.classifier.input_size = c.lr_size();
  if (const json* k = root.section("classifier")) {
    Section s(*k, "classifier");
    s.read("per_class", c.classifier_per_class);
    s.read("widths", c.classifier.widths);
    s.read("epochs", c.classifier.epochs);
    s.read("batch_size", c.classifier.batch_size);
    s.read("learning_rate", c.classifier.learning_rate);
    s.read("holdout_fraction", c.classifier.holdout_fraction);
    s.finish();
  }
  require(c.classifier_per_class >= 1, "classifier.per_class", "must be >= 1");
  require(!c.classifier.widths.empty(), "classifier.widths", "must not be empty");
  require(c.classifier.epochs >= 1 && c.classifier.batch_size >= 1, "classifier", "epochs and batch_size must be >= 1");
  require(c.classifier.holdout_fraction > 0 && c.classifier.holdout_fraction < 1, "classifier.holdout_fraction", "must be in (0, 1)");

  c.shifts = analysis::default_shifts();
  if (const json* sh = root.section("shifts")) {
    std::vector<std::vector<double>> raw;
    try {
      raw = sh->get<std::vector<std::vector<double>>>();
    } catch (const json::exception&) {
      throw ConfigError("config key 'shifts' must be a list of [dL, da, db] triples");
    }
    require(raw.size() == 8, "shifts", "must list exactly 8 shifts");
    c.shifts.clear();
    for (const auto& t : raw) {
      require(t.size() == 3, "shifts", "entries must be [dL, da, db]");
      c.shifts.push_back({t[0], t[1], t[2]});
    }
  }

  c.sr.spec.scale = c.scale;
  if (const json* r = root.section("sr")) {
    Section s(*r, "sr");
    s.read("width", c.sr.spec.width);
    s.read("blocks", c.sr.spec.blocks);
    s.read("pretrain_iters", c.sr.pretrain_iters);
    s.read("finetune_iters", c.sr.finetune_iters);
    s.read("learning_rate", c.sr.learning_rate);
    s.read("finetune_learning_rate", c.sr.finetune_learning_rate);
    s.read("batch_size", c.sr.batch_size);
    s.read("lr_patch", c.sr.lr_patch);
    s.read("log_every", c.sr.log_every);
    s.finish();
  }
  require(c.sr.spec.width >= 1 && c.sr.spec.blocks >= 0, "sr", "width must be >= 1 and blocks >= 0");
  require(c.sr.pretrain_iters >= 0 && c.sr.finetune_iters >= 0, "sr", "iteration counts must be >= 0");
  require(c.sr.learning_rate > 0 && c.sr.finetune_learning_rate > 0, "sr", "learning rates must be > 0");
  require(c.sr.batch_size >= 1 && c.sr.lr_patch >= 1 && c.sr.log_every >= 1, "sr", "batch_size, lr_patch, log_every must be >= 1");

  if (const json* e = root.section("eval")) {
    Section s(*e, "eval");
    if (e->contains("degradations")) {
      std::vector<std::string> names;
      s.read("degradations", names);
      c.eval.degradations.clear();
      for (const auto& n : names) {
        try {
          c.eval.degradations.push_back(parse_degradation_kind(n));
        } catch (const InvalidArgument&) {
          throw ConfigError("config key 'eval.degradations' has unknown degradation '" + n + "'");
        }
      }
    }
    s.read("min_severity", c.eval.min_severity);
    s.read("max_severity", c.eval.max_severity);
    s.read("perceptual_command", c.eval.perceptual_command);
    s.finish();
  }
  require(!c.eval.degradations.empty(), "eval.degradations", "must not be empty");
  require(c.eval.min_severity >= 1 && c.eval.max_severity <= 5 && c.eval.min_severity <= c.eval.max_severity, "eval",
          "severities must satisfy 1 <= min_severity <= max_severity <= 5");

  root.finish();
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("config file " + path + " is not valid JSON: " + e.what());
  }
  return parse_config(j);
}

json to_json(const ExperimentConfig& c) {
  std::vector<std::string> kinds;
  for (auto k : c.recon.kinds) kinds.push_back(recon::to_string(k));
  json models = json::object();
  for (const auto& s : c.recon.specs) {
    json spec = recon::to_json(s);
    spec.erase("kind");
    spec.erase("input_size");
    models[recon::to_string(s.kind)] = spec;
  }
  json shifts = json::array();
  for (const auto& s : c.shifts) shifts.push_back({s.dL, s.da, s.db});
  std::vector<std::string> degradations;
  for (auto d : c.eval.degradations) degradations.emplace_back(to_string(d));
  return {{"format_version", c.format_version},
          {"seed", c.seed},
          {"threads", c.threads},
          {"workdir", c.workdir},
          {"hr_source", c.hr_source},
          {"scale", c.scale},
          {"crop_size", c.crop_size},
          {"crop_stride", c.crop_stride},
          {"eval_count", c.eval_count},
          {"recon",
           {{"kinds", kinds},
            {"epochs", c.recon.epochs},
            {"checkpoint_epochs", c.recon.checkpoint_epochs},
            {"batch_size", c.recon.batch_size},
            {"learning_rate", c.recon.learning_rate},
            {"train_count", c.recon.train_count},
            {"models", models}}},
          {"forge", {{"kind", recon::to_string(c.forge.kind)}, {"epoch", c.forge.epoch}}},
          {"classifier",
           {{"per_class", c.classifier_per_class},
            {"widths", c.classifier.widths},
            {"epochs", c.classifier.epochs},
            {"batch_size", c.classifier.batch_size},
            {"learning_rate", c.classifier.learning_rate},
            {"holdout_fraction", c.classifier.holdout_fraction}}},
          {"shifts", shifts},
          {"sr",
           {{"width", c.sr.spec.width},
            {"blocks", c.sr.spec.blocks},
            {"pretrain_iters", c.sr.pretrain_iters},
            {"finetune_iters", c.sr.finetune_iters},
            {"learning_rate", c.sr.learning_rate},
            {"finetune_learning_rate", c.sr.finetune_learning_rate},
            {"batch_size", c.sr.batch_size},
            {"lr_patch", c.sr.lr_patch},
            {"log_every", c.sr.log_every}}},
          {"eval",
           {{"degradations", degradations},
            {"min_severity", c.eval.min_severity},
            {"max_severity", c.eval.max_severity},
            {"perceptual_command", c.eval.perceptual_command}}}};
}

std::string config_hash(const ExperimentConfig& c) { return sha256_hex(to_json(c).dump()); }

}  // namespace forgesr::cli
