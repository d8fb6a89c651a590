#include "selfcorrect/gateway.hpp"

#include <bit>
#include <chrono>
#include <cmath>
#include <fstream>
#include <thread>

#include <json.hpp>

namespace selfcorrect {

using ordered_json = nlohmann::ordered_json;

void GenParams::validate() const {
  if (temperature < 0.0 || !std::isfinite(temperature))
    throw std::invalid_argument("temperature must be a finite value >= 0");
  if (max_new_tokens <= 0) throw std::invalid_argument("max_new_tokens must be positive");
  if (n_samples < 1) throw std::invalid_argument("n_samples must be >= 1");
  if (temperature == 0.0 && n_samples != 1)
    throw std::invalid_argument("greedy decoding (temperature 0) is single-sample");
}

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t state) {
  for (unsigned char c : bytes) {
    state ^= c;
    state *= kFnvPrime;
  }
  return state;
}

std::uint64_t fnv1a64_u64(std::uint64_t value, std::uint64_t state) {
  for (int i = 0; i < 8; ++i) {
    state ^= (value >> (i * 8)) & 0xFF;
    state *= kFnvPrime;
  }
  return state;
}

std::string to_hex64(std::uint64_t value) {
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[i] = digits[value & 0xF];
    value >>= 4;
  }
  return out;
}

std::string prompt_fingerprint(std::string_view prompt, const GenParams& params,
                               int sample_index) {
  std::uint64_t h = fnv1a64(prompt);
  h = fnv1a64("\x1f", h);
  h = fnv1a64_u64(std::bit_cast<std::uint64_t>(params.temperature), h);
  h = fnv1a64_u64(static_cast<std::uint64_t>(params.max_new_tokens), h);
  for (const std::string& s : params.stop) {
    h = fnv1a64("\x1f", h);
    h = fnv1a64(s, h);
  }
  h = fnv1a64("\x1f", h);
  h = fnv1a64_u64(static_cast<std::uint64_t>(sample_index), h);
  return to_hex64(h);
}

std::string score_fingerprint(std::string_view question, std::string_view solution) {
  std::uint64_t h = fnv1a64(question);
  h = fnv1a64("\x1f", h);
  h = fnv1a64(solution, h);
  return to_hex64(h);
}

std::vector<Completion> make_completions(const std::vector<std::string>& texts,
                                         const std::string& backend_id,
                                         const std::string& prompt, const GenParams& params,
                                         double latency_ms) {
  std::vector<Completion> out;
  out.reserve(texts.size());
  for (size_t i = 0; i < texts.size(); ++i) {
    Completion c;
    c.text = texts[i];
    c.backend_id = backend_id;
    c.prompt_fingerprint = prompt_fingerprint(prompt, params, static_cast<int>(i));
    c.latency_ms = latency_ms;
    out.push_back(std::move(c));
  }
  return out;
}

// --- ScriptedBackend ---------------------------------------------------------

ScriptedBackend::ScriptedBackend(std::string id) : id_(std::move(id)) {}

void ScriptedBackend::maybe_fail() {
  int expected = fail_countdown_.load();
  while (expected > 0) {
    if (fail_countdown_.compare_exchange_weak(expected, expected - 1))
      throw BackendUnavailable("scripted failure (" + std::to_string(expected) + " left)");
  }
}

std::vector<Completion> ScriptedBackend::generate(const std::string& prompt,
                                                  const GenParams& params) {
  generate_calls_.fetch_add(1);
  maybe_fail();
  if (!gen_fn) throw std::logic_error("ScriptedBackend '" + id_ + "' has no gen_fn");
  std::vector<std::string> texts;
  texts.reserve(params.n_samples);
  for (int i = 0; i < params.n_samples; ++i) texts.push_back(gen_fn(prompt, params, i));
  completions_produced_.fetch_add(params.n_samples);
  double latency = latency_fn ? latency_fn(prompt) : 0.0;
  return make_completions(texts, id_, prompt, params, latency);
}

ScoreResult ScriptedBackend::score_correctness(const std::string& question,
                                               const std::string& solution) {
  score_calls_.fetch_add(1);
  maybe_fail();
  if (!score_fn) throw std::logic_error("ScriptedBackend '" + id_ + "' has no score_fn");
  double p = score_fn(question, solution);
  double latency = latency_fn ? latency_fn(question + "\n" + solution) : 0.0;
  return ScoreResult{p, latency};
}

// --- ReplayCache -------------------------------------------------------------

namespace {

ordered_json entry_to_json(const std::string& key, const ReplayEntry& e) {
  ordered_json j;
  j["key"] = key;
  j["fingerprint"] = e.fingerprint;
  j["backend"] = e.backend_id;
  j["kind"] = e.kind;
  j["prompt"] = e.prompt;
  j["params"] = {{"temperature", e.params.temperature},
                 {"max_new_tokens", e.params.max_new_tokens},
                 {"n_samples", e.params.n_samples},
                 {"stop", e.params.stop},
                 {"sample_index", e.sample_index}};
  if (e.kind == "score")
    j["p_correct"] = e.p_correct;
  else
    j["text"] = e.text;
  j["latency_ms"] = e.latency_ms;
  return j;
}

ReplayEntry entry_from_json(const ordered_json& j) {
  ReplayEntry e;
  e.fingerprint = j.at("fingerprint").get<std::string>();
  e.backend_id = j.at("backend").get<std::string>();
  e.kind = j.at("kind").get<std::string>();
  e.prompt = j.at("prompt").get<std::string>();
  const auto& p = j.at("params");
  e.params.temperature = p.at("temperature").get<double>();
  e.params.max_new_tokens = p.at("max_new_tokens").get<int>();
  e.params.n_samples = p.at("n_samples").get<int>();
  e.params.stop = p.at("stop").get<std::vector<std::string>>();
  e.sample_index = p.at("sample_index").get<int>();
  if (j.contains("text")) e.text = j.at("text").get<std::string>();
  if (j.contains("p_correct")) e.p_correct = j.at("p_correct").get<double>();
  e.latency_ms = j.at("latency_ms").get<double>();
  return e;
}

}  // namespace

ReplayCache::ReplayCache(std::filesystem::path path) : path_(std::move(path)) {
  std::ifstream in(path_, std::ios::binary);
  if (!in) return;  // nothing recorded yet
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    ordered_json j;
    try {
      j = ordered_json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw std::runtime_error("replay cache " + path_.string() + " line " +
                               std::to_string(lineno) + ": " + e.what());
    }
    entries_[j.at("key").get<std::string>()] = entry_from_json(j);
  }
}

std::optional<ReplayEntry> ReplayCache::lookup(const std::string& key) const {
  std::shared_lock lock(mutex_);
  auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

bool ReplayCache::insert(const std::string& key, const ReplayEntry& entry) {
  std::unique_lock lock(mutex_);
  auto [it, inserted] = entries_.emplace(key, entry);
  if (!inserted) return false;
  std::ofstream out(path_, std::ios::binary | std::ios::app);
  if (!out) throw std::runtime_error("cannot append to replay cache: " + path_.string());
  out << entry_to_json(key, entry).dump() << "\n";
  out.flush();
  return true;
}

std::size_t ReplayCache::size() const {
  std::shared_lock lock(mutex_);
  return entries_.size();
}

std::string ReplayCache::gen_key(const std::string& backend_id, const std::string& fingerprint) {
  return backend_id + "/g/" + fingerprint;
}

std::string ReplayCache::score_key(const std::string& backend_id, const std::string& fingerprint) {
  return backend_id + "/s/" + fingerprint;
}

ReplayMode replay_mode_from_string(const std::string& s) {
  if (s == "record") return ReplayMode::record;
  if (s == "strict") return ReplayMode::strict;
  if (s == "auto") return ReplayMode::automatic;
  throw std::invalid_argument("unknown replay mode: '" + s + "' (want record|strict|auto)");
}

const char* to_string(ReplayMode mode) {
  switch (mode) {
    case ReplayMode::record: return "record";
    case ReplayMode::strict: return "strict";
    case ReplayMode::automatic: return "auto";
  }
  return "auto";
}

// --- ReplayBackend -----------------------------------------------------------

ReplayBackend::ReplayBackend(std::shared_ptr<ReplayCache> cache, ReplayMode mode,
                             std::shared_ptr<Backend> inner, std::string id_if_no_inner)
    : cache_(std::move(cache)), mode_(mode), inner_(std::move(inner)),
      fallback_id_(std::move(id_if_no_inner)) {
  if (!cache_) throw std::invalid_argument("ReplayBackend needs a cache");
  if (!inner_ && mode_ != ReplayMode::strict)
    throw std::invalid_argument("replay mode '" + std::string(to_string(mode_)) +
                                "' needs an inner backend");
  if (!inner_ && fallback_id_.empty())
    throw std::invalid_argument("strict replay without an inner backend needs an explicit id");
}

std::string ReplayBackend::id() const { return inner_ ? inner_->id() : fallback_id_; }

std::vector<Completion> ReplayBackend::generate(const std::string& prompt,
                                                const GenParams& params) {
  const std::string backend_id = id();
  std::vector<Completion> cached;
  bool all_hit = true;
  for (int i = 0; i < params.n_samples; ++i) {
    std::string fp = prompt_fingerprint(prompt, params, i);
    auto entry = cache_->lookup(ReplayCache::gen_key(backend_id, fp));
    if (!entry) {
      all_hit = false;
      if (mode_ == ReplayMode::strict)
        throw CacheMiss("no cached completion for " + ReplayCache::gen_key(backend_id, fp));
      break;
    }
    Completion c;
    c.text = entry->text;
    c.backend_id = backend_id;
    c.prompt_fingerprint = fp;
    c.latency_ms = entry->latency_ms;
    cached.push_back(std::move(c));
  }
  if (all_hit && mode_ != ReplayMode::record) return cached;

  std::vector<Completion> fresh = inner_->generate(prompt, params);
  for (const Completion& c : fresh) {
    ReplayEntry e;
    e.fingerprint = c.prompt_fingerprint;
    e.backend_id = backend_id;
    e.kind = "gen";
    e.prompt = prompt;
    e.params = params;
    e.sample_index = static_cast<int>(&c - fresh.data());
    e.text = c.text;
    e.latency_ms = c.latency_ms;
    cache_->insert(ReplayCache::gen_key(backend_id, c.prompt_fingerprint), e);
  }
  return fresh;
}

ScoreResult ReplayBackend::score_correctness(const std::string& question,
                                             const std::string& solution) {
  const std::string backend_id = id();
  const std::string fp = score_fingerprint(question, solution);
  const std::string key = ReplayCache::score_key(backend_id, fp);
  auto entry = cache_->lookup(key);
  if (entry && mode_ != ReplayMode::record)
    return ScoreResult{entry->p_correct, entry->latency_ms};
  if (!entry && mode_ == ReplayMode::strict)
    throw CacheMiss("no cached score for " + key);

  ScoreResult fresh = inner_->score_correctness(question, solution);
  ReplayEntry e;
  e.fingerprint = fp;
  e.backend_id = backend_id;
  e.kind = "score";
  e.prompt = "Question: " + question + "\nSolution: " + solution + "\nIs this solution correct?";
  e.params = GenParams{};
  e.sample_index = 0;
  e.p_correct = fresh.p_correct;
  e.latency_ms = fresh.latency_ms;
  cache_->insert(key, e);
  return fresh;
}

// --- PromptedVerifier --------------------------------------------------------

PromptedVerifier::PromptedVerifier(std::shared_ptr<Backend> inner, PromptTemplate verify_template,
                                   int max_new_tokens)
    : inner_(std::move(inner)), template_(std::move(verify_template)),
      max_new_tokens_(max_new_tokens) {
  if (!inner_) throw std::invalid_argument("PromptedVerifier needs an inner backend");
  if (template_.kind != TemplateKind::verify)
    throw std::invalid_argument("PromptedVerifier needs a verify template");
}

std::vector<Completion> PromptedVerifier::generate(const std::string& prompt,
                                                   const GenParams& params) {
  return inner_->generate(prompt, params);
}

ScoreResult PromptedVerifier::score_correctness(const std::string& question,
                                                const std::string& solution) {
  std::string prompt = render_prompt(template_, {{"question", question}, {"solution", solution}});
  GenParams params;
  params.temperature = 0.0;
  params.max_new_tokens = max_new_tokens_;
  params.n_samples = 1;
  std::vector<Completion> replies = inner_->generate(prompt, params);
  std::optional<Label> verdict = parse_verify_reply(replies.at(0).text);
  double p = 0.5;  // unparseable replies score maximal uncertainty
  if (verdict == Label::correct) p = 1.0;
  if (verdict == Label::incorrect) p = 0.0;
  return ScoreResult{p, replies.at(0).latency_ms};
}

// --- LmGateway ---------------------------------------------------------------

LmGateway::LmGateway(std::shared_ptr<Backend> backend, GatewayOptions options)
    : backend_(std::move(backend)), options_(options) {
  if (!backend_) throw std::invalid_argument("LmGateway needs a backend");
  if (options_.max_attempts < 1) throw std::invalid_argument("max_attempts must be >= 1");
  if (options_.max_in_flight < 1) throw std::invalid_argument("max_in_flight must be >= 1");
}

void LmGateway::acquire() {
  std::unique_lock lock(slots_mutex_);
  slots_cv_.wait(lock, [this] { return in_flight_ < options_.max_in_flight; });
  ++in_flight_;
}

void LmGateway::release() {
  {
    std::lock_guard lock(slots_mutex_);
    --in_flight_;
  }
  slots_cv_.notify_one();
}

template <typename Fn>
auto LmGateway::with_retry(Fn&& fn) -> decltype(fn()) {
  acquire();
  struct Releaser {
    LmGateway* g;
    ~Releaser() { g->release(); }
  } releaser{this};

  int delay_ms = options_.backoff_base_ms;
  for (int attempt = 1;; ++attempt) {
    try {
      return fn();
    } catch (const BackendUnavailable&) {
      {
        std::lock_guard lock(stats_mutex_);
        ++stats_.failures;
      }
      if (attempt >= options_.max_attempts) throw;
      std::this_thread::sleep_for(std::chrono::milliseconds(delay_ms));
      delay_ms *= 2;
    }
  }
}

std::vector<Completion> LmGateway::generate(const std::string& prompt, const GenParams& params) {
  params.validate();
  {
    std::lock_guard lock(stats_mutex_);
    ++stats_.requests;
  }
  auto completions = with_retry([&] { return backend_->generate(prompt, params); });
  if (static_cast<int>(completions.size()) != params.n_samples)
    throw std::runtime_error("backend '" + backend_->id() + "' returned " +
                             std::to_string(completions.size()) + " completions, wanted " +
                             std::to_string(params.n_samples));
  {
    std::lock_guard lock(stats_mutex_);
    stats_.completions += completions.size();
  }
  return completions;
}

ScoreResult LmGateway::score_correctness(const std::string& question, const std::string& solution) {
  {
    std::lock_guard lock(stats_mutex_);
    ++stats_.requests;
  }
  ScoreResult result = with_retry([&] { return backend_->score_correctness(question, solution); });
  if (!std::isfinite(result.p_correct) || result.p_correct < 0.0 || result.p_correct > 1.0)
    throw MalformedScore("backend '" + backend_->id() + "' scored " +
                         std::to_string(result.p_correct) + ", outside [0,1]");
  {
    std::lock_guard lock(stats_mutex_);
    ++stats_.completions;
  }
  return result;
}

GatewayStats LmGateway::stats() const {
  std::lock_guard lock(stats_mutex_);
  return stats_;
}

}  // namespace selfcorrect
