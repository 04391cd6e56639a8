#pragma once

#include <string>
#include <vector>

#include "ghfeat/config.hpp"

namespace ghfeat {

// Run directory bookkeeping: an exclusive lock file against concurrent
// writers, a resolved-config snapshot beside the outputs, and an
// append-only manifest of emitted artifacts with input checkpoint hashes.
class RunDir {
 public:
  RunDir(const std::string& path, const std::string& command);
  ~RunDir();
  RunDir(const RunDir&) = delete;
  RunDir& operator=(const RunDir&) = delete;

  const std::string& path() const { return path_; }
  std::string file(const std::string& name) const { return path_ + "/" + name; }

  void snapshot_config(const Config& cfg) const;
  void record_input(const std::string& name, uint64_t hash);
  void record_artifact(const std::string& relative_path);
  void finish();

 private:
  std::string path_;
  std::string lock_path_;
  std::string command_;
  std::string run_id_;
  std::vector<std::pair<std::string, std::string>> inputs_;
  std::vector<std::string> artifacts_;
  bool finished_ = false;
};

}  // namespace ghfeat
