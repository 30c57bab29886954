#include "forgesr/cli/workdir.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <cerrno>
#include <cstdio>
#include <cstring>
#include <fstream>

#ifndef FORGESR_VERSION
#define FORGESR_VERSION "unknown"
#endif

namespace forgesr::cli {

fs::path Workdir::recon_checkpoint(recon::ReconKind kind, int epoch) const {
  char name[32];
  std::snprintf(name, sizeof name, "epoch_%03d.ckpt", epoch);
  return recon_dir(kind) / name;
}

DirLock::DirLock(const fs::path& lock_file) {
  fs::create_directories(lock_file.parent_path());
  fd_ = ::open(lock_file.c_str(), O_RDWR | O_CREAT | O_CLOEXEC, 0644);
  if (fd_ < 0) throw LockError("cannot open lock file " + lock_file.string() + ": " + std::strerror(errno));
  if (::flock(fd_, LOCK_EX | LOCK_NB) != 0) {
    ::close(fd_);
    fd_ = -1;
    throw LockError("work directory is locked by another process (" + lock_file.string() + ")");
  }
}

DirLock::~DirLock() {
  if (fd_ >= 0) {
    ::flock(fd_, LOCK_UN);
    ::close(fd_);
  }
}

void append_run_log(const fs::path& path, const nlohmann::json& entry) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::app);
  out << entry.dump() << '\n';
  if (!out) throw std::runtime_error("cannot append to run log " + path.string());
}

std::string version_string() { return FORGESR_VERSION; }

}  // namespace forgesr::cli
