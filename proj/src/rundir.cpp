#include "ghfeat/rundir.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "ghfeat/common.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace ghfeat {

namespace {

std::string timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

}  // namespace

RunDir::RunDir(const std::string& path, const std::string& command)
    : path_(path), lock_path_(path + "/.lock"), command_(command) {
  fs::create_directories(path_);
  const int fd = ::open(lock_path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
  if (fd < 0)
    throw DependencyError("run directory is locked by another writer: " + path_ +
                          " (stale? remove " + lock_path_ + ")");
  const std::string pid = std::to_string(::getpid()) + "\n";
  [[maybe_unused]] auto n = ::write(fd, pid.data(), pid.size());
  ::close(fd);
  run_id_ = command_ + "-" + timestamp();
}

RunDir::~RunDir() {
  if (!finished_) finish();
  std::error_code ec;
  fs::remove(lock_path_, ec);
}

void RunDir::snapshot_config(const Config& cfg) const {
  cfg.save(path_ + "/resolved_config.cfg");
}

void RunDir::record_input(const std::string& name, uint64_t hash) {
  std::ostringstream h;
  h << std::hex << hash;
  inputs_.emplace_back(name, h.str());
}

void RunDir::record_artifact(const std::string& relative_path) {
  artifacts_.push_back(relative_path);
}

void RunDir::finish() {
  finished_ = true;
  // Append-only manifest: one JSON object per run event.
  json entry;
  entry["run_id"] = run_id_;
  entry["version"] = kVersion;
  entry["command"] = command_;
  entry["finished_at"] = timestamp();
  json in = json::object();
  for (const auto& [k, v] : inputs_) in[k] = v;
  entry["input_hashes"] = in;
  entry["artifacts"] = artifacts_;
  std::ofstream out(path_ + "/run_manifest.jsonl", std::ios::app);
  out << entry.dump() << "\n";
}

}  // namespace ghfeat
