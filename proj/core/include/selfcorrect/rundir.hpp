#pragma once

#include <map>
#include <stdexcept>
#include <string>

namespace selfcorrect {

// A stage was invoked before its predecessor wrote the artifact it reads.
struct MissingArtifact : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Another process holds the run directory's lock.
struct RunDirLocked : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Exclusive advisory lock on <root>/.lock for the lifetime of the object;
// released automatically even if the process dies.
class DirLock {
 public:
  explicit DirLock(const std::string& run_dir_root);
  ~DirLock();
  DirLock(const DirLock&) = delete;
  DirLock& operator=(const DirLock&) = delete;

 private:
  int fd_ = -1;
};

// One directory per run: a JSONL artifact per stage plus manifest.json holding
// the config hash and a fingerprint per completed artifact. The manifest
// carries no timestamps or absolute paths, so two runs of the same config
// produce byte-identical directories.
class RunDir {
 public:
  // Creates the directory if needed. An existing manifest written under a
  // different config hash is an error.
  RunDir(std::string root, std::string config_hash);

  const std::string& root() const { return root_; }
  std::string path_of(const std::string& artifact) const;
  bool has(const std::string& artifact) const;
  // Full path of an artifact that must already exist.
  std::string require(const std::string& artifact) const;

  // True when the artifact exists and its bytes still match the fingerprint
  // recorded at completion — the stage can be skipped.
  bool stage_current(const std::string& artifact) const;
  // Fingerprints the artifact's current bytes into the manifest.
  void record_stage(const std::string& artifact);

  const std::map<std::string, std::string>& stage_fingerprints() const {
    return stage_fingerprints_;
  }

 private:
  void save_manifest() const;

  std::string root_;
  std::string config_hash_;
  std::map<std::string, std::string> stage_fingerprints_;
};

}  // namespace selfcorrect
