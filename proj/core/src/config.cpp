#include "selfcorrect/config.hpp"

#include <filesystem>
#include <fstream>

#include "selfcorrect/gateway.hpp"

namespace selfcorrect {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
  return s.substr(b, e - b);
}

long parse_long(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const long v = std::stol(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigInvalid("config key '" + key + "' needs an integer, got '" + value + "'");
  }
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const unsigned long long v = std::stoull(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigInvalid("config key '" + key + "' needs an unsigned integer, got '" + value +
                        "'");
  }
}

double parse_double(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigInvalid("config key '" + key + "' needs a number, got '" + value + "'");
  }
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw ConfigInvalid("config key '" + key + "' needs a boolean, got '" + value + "'");
}

// Applies one key. Returns false when the key is unknown.
bool apply_key(RunConfig& c, const std::string& key, const std::string& value) {
  if (key == "dataset.train") { c.train_path = value; return true; }
  if (key == "dataset.dev") { c.dev_path = value; return true; }
  if (key == "dataset.test") { c.test_path = value; return true; }
  if (key == "run.dir") { c.run_dir = value; return true; }
  if (key == "seed") { c.seed = parse_u64(key, value); return true; }
  if (key == "sampling.n_samples") { c.n_samples = static_cast<int>(parse_long(key, value)); return true; }
  if (key == "sampling.temperature") { c.sample_temperature = parse_double(key, value); return true; }
  if (key == "critique.temperature") { c.critique_temperature = parse_double(key, value); return true; }
  if (key == "max_new_tokens") { c.max_new_tokens = static_cast<int>(parse_long(key, value)); return true; }
  if (key == "pair_cap") { c.pair_cap = static_cast<int>(parse_long(key, value)); return true; }
  if (key == "workers") { c.workers = static_cast<int>(parse_long(key, value)); return true; }
  if (key == "sampling.provenance") {
    try {
      c.sample_provenance = provenance_from_string(value);
    } catch (const std::exception&) {
      throw ConfigInvalid("config key '" + key + "': unknown provenance '" + value + "'");
    }
    if (c.sample_provenance != Provenance::base_lm && c.sample_provenance != Provenance::rft_lm)
      throw ConfigInvalid("sampling.provenance must be base_lm or rft_lm");
    return true;
  }
  if (key == "verifier.kind") {
    try {
      c.verifier_kind = verifier_kind_from_string(value);
    } catch (const std::exception&) {
      throw ConfigInvalid("config key '" + key + "': unknown verifier kind '" + value + "'");
    }
    return true;
  }
  if (key == "refiner.kind") {
    try {
      c.refiner_kind = refiner_kind_from_string(value);
    } catch (const std::exception&) {
      throw ConfigInvalid("config key '" + key + "': unknown refiner kind '" + value + "'");
    }
    return true;
  }
  if (key == "threshold.source") {
    if (value != "fixed" && value != "select-on-dev")
      throw ConfigInvalid("threshold.source must be 'fixed' or 'select-on-dev'");
    c.threshold_source = value;
    return true;
  }
  if (key == "threshold.value") { c.threshold = parse_double(key, value); return true; }
  if (key == "ablation.all_steps_critique") { c.all_steps_critique = parse_bool(key, value); return true; }
  if (key == "ablation.two_pass_refine") { c.two_pass_refine = parse_bool(key, value); return true; }
  if (key == "rerank.k") { c.rerank_k = static_cast<int>(parse_long(key, value)); return true; }
  if (key == "rerank.c") { c.rerank_c = parse_double(key, value); return true; }
  if (key == "emit.fraction") { c.emit_fraction = parse_double(key, value); return true; }
  if (key == "replay.mode") {
    if (value != "record" && value != "strict" && value != "auto")
      throw ConfigInvalid("replay.mode must be record, strict, or auto");
    c.replay_mode = value;
    return true;
  }
  if (key == "replay.cache") { c.replay_cache = value; return true; }

  // backend.<role>.<field>
  const auto backend_field = [&](BackendSettings& b, const std::string& field) -> bool {
    if (field == "base_url") { b.base_url = value; return true; }
    if (field == "model") { b.model = value; return true; }
    if (field == "chat_path") { b.chat_path = value; return true; }
    if (field == "score_path") { b.score_path = value; return true; }
    if (field == "auth_env") { b.auth_env = value; return true; }
    if (field == "timeout_ms") { b.timeout_ms = static_cast<int>(parse_long(key, value)); return true; }
    return false;
  };
  if (key.rfind("backend.", 0) == 0) {
    const std::string rest = key.substr(8);
    const std::size_t dot = rest.find('.');
    if (dot != std::string::npos) {
      const std::string role = rest.substr(0, dot);
      const std::string field = rest.substr(dot + 1);
      if (role == "generator") return backend_field(c.generator, field);
      if (role == "critiquer") return backend_field(c.critiquer, field);
      if (role == "refiner") return backend_field(c.refiner, field);
      if (role == "verifier") return backend_field(c.verifier, field);
    }
  }
  return false;
}

void validate(const RunConfig& c) {
  if (c.n_samples < 1) throw ConfigInvalid("sampling.n_samples must be positive");
  if (c.workers < 1) throw ConfigInvalid("workers must be positive");
  if (c.max_new_tokens < 1) throw ConfigInvalid("max_new_tokens must be positive");
  if (c.pair_cap < 0) throw ConfigInvalid("pair_cap must be non-negative");
  if (c.sample_temperature < 0.0) throw ConfigInvalid("sampling.temperature must be >= 0");
  if (c.critique_temperature < 0.0) throw ConfigInvalid("critique.temperature must be >= 0");
  if (c.threshold < 0.0 || c.threshold > 1.0)
    throw ConfigInvalid("threshold.value must lie in [0, 1]");
  if (c.rerank_k < 1) throw ConfigInvalid("rerank.k must be positive");
  if (c.rerank_c < 0.0 || c.rerank_c > 1.0) throw ConfigInvalid("rerank.c must lie in [0, 1]");
  if (!(c.emit_fraction > 0.0) || c.emit_fraction > 1.0)
    throw ConfigInvalid("emit.fraction must lie in (0, 1]");

  const auto check_exists = [](const std::string& what, const std::string& path) {
    if (!path.empty() && !std::filesystem::exists(path))
      throw ConfigInvalid(what + " does not exist: " + path);
  };
  check_exists("dataset.train", c.train_path);
  check_exists("dataset.dev", c.dev_path);
  check_exists("dataset.test", c.test_path);
  if (c.replay_mode == "strict") check_exists("replay.cache", c.replay_cache);
}

}  // namespace

RunConfig config_from_map(const std::map<std::string, std::string>& entries) {
  RunConfig config;
  for (const auto& [key, value] : entries) {
    if (!apply_key(config, key, value))
      throw ConfigInvalid("unknown config key '" + key + "'");
  }
  config.raw = entries;
  validate(config);
  return config;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigInvalid("cannot open config file " + path);

  std::map<std::string, std::string> entries;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    const std::size_t eq = stripped.find('=');
    if (eq == std::string::npos)
      throw ConfigInvalid(path + ":" + std::to_string(line_no) + ": expected key=value");
    const std::string key = trim(stripped.substr(0, eq));
    const std::string value = trim(stripped.substr(eq + 1));
    if (key.empty())
      throw ConfigInvalid(path + ":" + std::to_string(line_no) + ": empty key");
    entries[key] = value;
  }
  return config_from_map(entries);
}

void apply_override(RunConfig& config, const std::string& assignment) {
  const std::size_t eq = assignment.find('=');
  if (eq == std::string::npos)
    throw ConfigInvalid("override must be key=value, got '" + assignment + "'");
  std::map<std::string, std::string> entries = config.raw;
  entries[trim(assignment.substr(0, eq))] = trim(assignment.substr(eq + 1));
  config = config_from_map(entries);
}

std::string config_hash(const RunConfig& config) {
  std::uint64_t h = kFnvOffset;
  for (const auto& [key, value] : config.raw) {  // std::map: sorted, stable
    if (key == "run.dir") continue;
    h = fnv1a64(key, h);
    h = fnv1a64("=", h);
    h = fnv1a64(value, h);
    h = fnv1a64("\n", h);
  }
  return to_hex64(h);
}

}  // namespace selfcorrect
