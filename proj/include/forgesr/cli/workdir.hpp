#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "forgesr/recon/models.hpp"

namespace forgesr::cli {

namespace fs = std::filesystem;

/// Fixed artifact layout under one work directory.
class Workdir {
public:
  explicit Workdir(fs::path root) : root_(std::move(root)) {}

  const fs::path& root() const { return root_; }
  fs::path hr_train() const { return root_ / "hr" / "train"; }
  fs::path hr_eval() const { return root_ / "hr" / "eval"; }
  fs::path recon_dir(recon::ReconKind kind) const { return root_ / "recon" / recon::to_string(kind); }
  fs::path recon_checkpoint(recon::ReconKind kind, int epoch) const;
  fs::path dataset(const std::string& name) const { return root_ / "datasets" / name; }
  fs::path classifier() const { return root_ / "classifier" / "degclf.ckpt"; }
  fs::path sr_model(const std::string& name) const { return root_ / "sr" / (name + ".ckpt"); }
  fs::path reports() const { return root_ / "reports"; }
  fs::path run_log() const { return root_ / "run_log.jsonl"; }
  fs::path lock_file() const { return root_ / ".lock"; }

private:
  fs::path root_;
};

// Another process holds the work directory; maps to exit code 3.
class LockError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Exclusive advisory lock (flock) on <workdir>/.lock for the lifetime of
/// the object. Throws LockError immediately if the lock is held.
class DirLock {
public:
  explicit DirLock(const fs::path& lock_file);
  ~DirLock();
  DirLock(const DirLock&) = delete;
  DirLock& operator=(const DirLock&) = delete;

private:
  int fd_ = -1;
};

/// Appends one JSON object as a line; the file is only ever appended to.
void append_run_log(const fs::path& path, const nlohmann::json& entry);

/// git-describe style version baked in at build time.
std::string version_string();

}  // namespace forgesr::cli
