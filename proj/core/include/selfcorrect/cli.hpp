#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "selfcorrect/config.hpp"
#include "selfcorrect/gateway.hpp"

namespace selfcorrect::cli {

// Exit codes shared by every subcommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;       // unexpected internal error
inline constexpr int kExitConfig = 2;        // bad configuration or locked run dir
inline constexpr int kExitBackend = 3;       // backend unreachable / cache miss / bad score
inline constexpr int kExitMissingArtifact = 4;  // stage run out of order

extern const std::vector<std::string> kSubcommands;  // pipeline order

// Supplies the inner backend for a role ("generator", "critiquer", "refiner",
// "verifier") instead of an HTTP client — used by tests and fixture
// generation to put a scripted model behind the real stage logic. The replay
// wrapper from the config still applies on top.
using BackendFactory = std::function<std::shared_ptr<Backend>(const std::string& role)>;

// Runs one subcommand against a loaded config. `run_dir` overrides the
// config's run.dir when non-empty. Prints progress to stdout and errors to
// stderr; returns the process exit code.
int run_stage(const std::string& name, const RunConfig& config, const std::string& run_dir,
              const BackendFactory& inner_factory = nullptr);

}  // namespace selfcorrect::cli
