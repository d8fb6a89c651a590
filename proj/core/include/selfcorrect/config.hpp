#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>

#include "selfcorrect/types.hpp"

namespace selfcorrect {

struct ConfigInvalid : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Connection details for one backend role. An empty base_url means the role
// runs purely off the replay cache.
struct BackendSettings {
  std::string base_url;
  std::string model;
  std::string chat_path = "/v1/chat/completions";
  std::string score_path = "/score";
  std::string auth_env;  // name of the env var holding the bearer token
  int timeout_ms = 30000;
};

// Everything a run needs, loadable from a key=value file ('#' comments,
// dotted keys). Values are overridable with --set key=value on any
// subcommand; only secrets come from the environment (via auth_env).
struct RunConfig {
  std::string train_path;
  std::string dev_path;
  std::string test_path;
  std::string run_dir;  // usually supplied per-invocation via --run-dir

  std::uint64_t seed = 0;
  int n_samples = 10;
  double sample_temperature = 0.9;
  double critique_temperature = 0.9;
  int max_new_tokens = 2048;
  int pair_cap = 0;
  int workers = 4;
  Provenance sample_provenance = Provenance::base_lm;

  VerifierKind verifier_kind = VerifierKind::self;
  RefinerKind refiner_kind = RefinerKind::model;
  std::string threshold_source = "fixed";  // "fixed" | "select-on-dev"
  double threshold = 0.5;
  bool all_steps_critique = false;
  bool two_pass_refine = false;
  int rerank_k = 10;
  double rerank_c = 0.5;
  double emit_fraction = 1.0;

  std::string replay_mode = "strict";  // record | strict | auto
  std::string replay_cache;

  BackendSettings generator;
  BackendSettings critiquer;
  BackendSettings refiner;
  BackendSettings verifier;

  // The raw key/value view the config was built from, kept for hashing.
  std::map<std::string, std::string> raw;
};

// Parses and validates; throws ConfigInvalid on unknown keys, bad values, or
// referenced dataset/cache files that do not exist.
RunConfig load_config(const std::string& path);

// Applies one "key=value" override on top of a loaded config, re-validating.
void apply_override(RunConfig& config, const std::string& assignment);

// Builds a RunConfig from an explicit key/value map (the file loader and the
// tests share this path).
RunConfig config_from_map(const std::map<std::string, std::string>& entries);

// Stable fingerprint of the effective configuration. Excludes run.dir so the
// same run reproduced under two directories hashes identically.
std::string config_hash(const RunConfig& config);

}  // namespace selfcorrect
