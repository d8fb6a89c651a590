#include "selfcorrect/rundir.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <filesystem>

#include <json.hpp>

#include "selfcorrect/config.hpp"
#include "selfcorrect/gateway.hpp"
#include "selfcorrect/jsonl.hpp"

namespace selfcorrect {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

DirLock::DirLock(const std::string& run_dir_root) {
  const std::string path = run_dir_root + "/.lock";
  fd_ = ::open(path.c_str(), O_CREAT | O_RDWR | O_CLOEXEC, 0644);
  if (fd_ < 0) throw RunDirLocked("cannot open lock file " + path);
  if (::flock(fd_, LOCK_EX | LOCK_NB) != 0) {
    ::close(fd_);
    fd_ = -1;
    throw RunDirLocked("run directory is locked by another process: " + run_dir_root);
  }
}

DirLock::~DirLock() {
  if (fd_ >= 0) {
    ::flock(fd_, LOCK_UN);
    ::close(fd_);
  }
}

RunDir::RunDir(std::string root, std::string config_hash)
    : root_(std::move(root)), config_hash_(std::move(config_hash)) {
  if (root_.empty()) throw std::invalid_argument("run directory path must not be empty");
  fs::create_directories(root_);

  const std::string manifest = root_ + "/manifest.json";
  if (fs::exists(manifest)) {
    const json j = json::parse(read_file(manifest), nullptr, false);
    if (j.is_discarded() || !j.is_object())
      throw std::runtime_error("corrupt manifest: " + manifest);
    const std::string recorded = j.value("config_hash", "");
    if (recorded != config_hash_)
      throw ConfigInvalid("run directory " + root_ +
                          " was produced under a different configuration (config hash " +
                          recorded + " != " + config_hash_ + ")");
    const json stages = j.value("stages", json::object());
    for (const auto& [stage, fp] : stages.items())
      stage_fingerprints_[stage] = fp.get<std::string>();
  } else {
    save_manifest();
  }
}

std::string RunDir::path_of(const std::string& artifact) const { return root_ + "/" + artifact; }

bool RunDir::has(const std::string& artifact) const { return fs::exists(path_of(artifact)); }

std::string RunDir::require(const std::string& artifact) const {
  if (!has(artifact))
    throw MissingArtifact("artifact '" + artifact + "' not found in " + root_ +
                          "; run the stage that produces it first");
  return path_of(artifact);
}

bool RunDir::stage_current(const std::string& artifact) const {
  const auto it = stage_fingerprints_.find(artifact);
  if (it == stage_fingerprints_.end() || !has(artifact)) return false;
  return to_hex64(fnv1a64(read_file(path_of(artifact)))) == it->second;
}

void RunDir::record_stage(const std::string& artifact) {
  stage_fingerprints_[artifact] = to_hex64(fnv1a64(read_file(require(artifact))));
  save_manifest();
}

void RunDir::save_manifest() const {
  json stages = json::object();
  for (const auto& [stage, fp] : stage_fingerprints_) stages[stage] = fp;  // sorted by map
  json j;
  j["config_hash"] = config_hash_;
  j["stages"] = std::move(stages);
  write_file(root_ + "/manifest.json", j.dump(2) + "\n");
}

}  // namespace selfcorrect
