#pragma once

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "selfcorrect/textcodec.hpp"
#include "selfcorrect/types.hpp"

namespace selfcorrect {

// Transient backend failure; the gateway retries these with exponential backoff.
struct BackendUnavailable : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A request exceeded its deadline. Retried like any other transient failure.
struct Timeout : BackendUnavailable {
  using BackendUnavailable::BackendUnavailable;
};

// Strict replay was asked for a completion that is not in the cache.
struct CacheMiss : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A scoring backend returned something outside [0,1] (or not a number at all).
struct MalformedScore : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct GenParams {
  double temperature = 0.0;
  int max_new_tokens = 2048;
  int n_samples = 1;
  std::vector<std::string> stop;

  // temperature >= 0, max_new_tokens > 0, n_samples >= 1, and greedy decoding
  // (temperature 0) is single-sample. Throws std::invalid_argument.
  void validate() const;
};

struct Completion {
  std::string text;
  std::string backend_id;
  std::string prompt_fingerprint;  // 16 hex chars; see prompt_fingerprint()
  double latency_ms = 0.0;
};

struct ScoreResult {
  double p_correct = 0.0;
  double latency_ms = 0.0;
};

// --- content fingerprints ----------------------------------------------------
// FNV-1a, 64-bit. std::hash is not specified across implementations, and these
// hashes end up in committed replay caches, so the function is pinned here.

inline constexpr std::uint64_t kFnvOffset = 14695981039346656037ULL;
inline constexpr std::uint64_t kFnvPrime = 1099511628211ULL;

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t state = kFnvOffset);
std::uint64_t fnv1a64_u64(std::uint64_t value, std::uint64_t state);
std::string to_hex64(std::uint64_t value);

// Pure function of (prompt, sampling params, sample index). n_samples is
// deliberately excluded so one 10-sample generation and ten 1-sample
// generations address the same cache rows by index.
std::string prompt_fingerprint(std::string_view prompt, const GenParams& params, int sample_index);

// Pure function of the (question, solution) pair sent to a scoring endpoint.
std::string score_fingerprint(std::string_view question, std::string_view solution);

// --- backends ----------------------------------------------------------------

class Backend {
 public:
  virtual ~Backend() = default;
  virtual std::string id() const = 0;

  // Returns exactly params.n_samples completions.
  virtual std::vector<Completion> generate(const std::string& prompt, const GenParams& params) = 0;

  // p_correct for the fixed input sequence built from (question, solution).
  virtual ScoreResult score_correctness(const std::string& question,
                                        const std::string& solution) = 0;
};

// Deterministic in-process backend driven by std::function hooks; used by the
// test suites and the fixture generator. Counts calls and can be told to fail
// the next k requests to exercise retry paths.
class ScriptedBackend : public Backend {
 public:
  // (prompt, params, sample_index) -> completion text
  using GenFn = std::function<std::string(const std::string&, const GenParams&, int)>;
  // (question, solution) -> p_correct
  using ScoreFn = std::function<double(const std::string&, const std::string&)>;
  // (prompt or question+solution) -> simulated latency in ms
  using LatencyFn = std::function<double(const std::string&)>;

  explicit ScriptedBackend(std::string id);

  std::string id() const override { return id_; }
  std::vector<Completion> generate(const std::string& prompt, const GenParams& params) override;
  ScoreResult score_correctness(const std::string& question, const std::string& solution) override;

  GenFn gen_fn;
  ScoreFn score_fn;
  LatencyFn latency_fn;  // defaults to 0 ms

  void fail_next(int count) { fail_countdown_ = count; }
  int generate_calls() const { return generate_calls_.load(); }
  int score_calls() const { return score_calls_.load(); }
  int completions_produced() const { return completions_produced_.load(); }

 private:
  void maybe_fail();

  std::string id_;
  std::atomic<int> generate_calls_{0};
  std::atomic<int> score_calls_{0};
  std::atomic<int> completions_produced_{0};
  std::atomic<int> fail_countdown_{0};
};

// Chat-completions-style HTTP backend plus the {question, solution} ->
// {p_correct} scoring endpoint. Throws BackendUnavailable / Timeout /
// MalformedScore; retries live in LmGateway, not here.
struct HttpBackendConfig {
  std::string id;
  std::string base_url;             // e.g. "http://localhost:8080"
  std::string model;
  std::string chat_path = "/v1/chat/completions";
  std::string score_path = "/score";
  std::string auth_env;             // env var holding the bearer token, if any
  int timeout_ms = 30000;
};

class HttpBackend : public Backend {
 public:
  explicit HttpBackend(HttpBackendConfig config);

  std::string id() const override { return config_.id; }
  std::vector<Completion> generate(const std::string& prompt, const GenParams& params) override;
  ScoreResult score_correctness(const std::string& question, const std::string& solution) override;

 private:
  std::string post_json(const std::string& path, const std::string& body, double* latency_ms);

  HttpBackendConfig config_;
};

// --- replay cache ------------------------------------------------------------

struct ReplayEntry {
  std::string fingerprint;
  std::string backend_id;
  std::string kind;  // "gen" | "score"
  std::string prompt;
  GenParams params;
  int sample_index = 0;
  std::string text;          // completion text (gen) — unused for scores
  double p_correct = 0.0;    // scores only
  double latency_ms = 0.0;
};

// Append-only JSONL store shared by all replay backends of a run. Inserting a
// key that is already present is a no-op, so retries never duplicate rows.
class ReplayCache {
 public:
  // Loads existing entries if the file exists; appends are flushed per row.
  explicit ReplayCache(std::filesystem::path path);

  std::optional<ReplayEntry> lookup(const std::string& key) const;
  // Returns true when the entry was actually appended.
  bool insert(const std::string& key, const ReplayEntry& entry);
  std::size_t size() const;

  static std::string gen_key(const std::string& backend_id, const std::string& fingerprint);
  static std::string score_key(const std::string& backend_id, const std::string& fingerprint);

 private:
  std::filesystem::path path_;
  mutable std::shared_mutex mutex_;
  std::map<std::string, ReplayEntry> entries_;
};

enum class ReplayMode { record, strict, automatic };

ReplayMode replay_mode_from_string(const std::string& s);
const char* to_string(ReplayMode mode);

// Wraps an inner backend with the cache. `record` always calls the inner
// backend and stores what it said; `strict` serves from the cache only and
// throws CacheMiss otherwise; `automatic` serves hits from the cache and
// records misses. In strict mode the inner backend may be null, in which case
// the identity must be supplied explicitly.
class ReplayBackend : public Backend {
 public:
  ReplayBackend(std::shared_ptr<ReplayCache> cache, ReplayMode mode,
                std::shared_ptr<Backend> inner, std::string id_if_no_inner = {});

  std::string id() const override;
  std::vector<Completion> generate(const std::string& prompt, const GenParams& params) override;
  ScoreResult score_correctness(const std::string& question, const std::string& solution) override;

 private:
  std::shared_ptr<ReplayCache> cache_;
  ReplayMode mode_;
  std::shared_ptr<Backend> inner_;
  std::string fallback_id_;
};

// Few-shot verifier adapter: turns a generation backend into a scorer by
// rendering the verify prompt, decoding greedily, and mapping the reply to
// 1.0 (**correct**), 0.0 (**incorrect**), or 0.5 (neither marker found).
class PromptedVerifier : public Backend {
 public:
  PromptedVerifier(std::shared_ptr<Backend> inner, PromptTemplate verify_template,
                   int max_new_tokens = 512);

  std::string id() const override { return inner_->id() + "+prompted"; }
  std::vector<Completion> generate(const std::string& prompt, const GenParams& params) override;
  ScoreResult score_correctness(const std::string& question, const std::string& solution) override;

 private:
  std::shared_ptr<Backend> inner_;
  PromptTemplate template_;
  int max_new_tokens_;
};

// --- gateway -----------------------------------------------------------------

struct GatewayOptions {
  int max_attempts = 3;        // total tries per request
  int backoff_base_ms = 100;   // doubled after each failed attempt
  int max_in_flight = 8;       // bounded-parallelism contract
};

struct GatewayStats {
  std::uint64_t requests = 0;
  std::uint64_t completions = 0;
  std::uint64_t failures = 0;
};

// Validation, bounded concurrency, retry with exponential backoff, and
// request accounting around a backend. Thread-safe.
class LmGateway {
 public:
  LmGateway(std::shared_ptr<Backend> backend, GatewayOptions options = {});

  std::string backend_id() const { return backend_->id(); }
  std::vector<Completion> generate(const std::string& prompt, const GenParams& params);
  ScoreResult score_correctness(const std::string& question, const std::string& solution);
  GatewayStats stats() const;

 private:
  template <typename Fn>
  auto with_retry(Fn&& fn) -> decltype(fn());

  void acquire();
  void release();

  std::shared_ptr<Backend> backend_;
  GatewayOptions options_;
  std::mutex slots_mutex_;
  std::condition_variable slots_cv_;
  int in_flight_ = 0;
  mutable std::mutex stats_mutex_;
  GatewayStats stats_;
};

// Builds completions with fingerprints attached; shared by backend
// implementations so every path fingerprints identically.
std::vector<Completion> make_completions(const std::vector<std::string>& texts,
                                         const std::string& backend_id,
                                         const std::string& prompt, const GenParams& params,
                                         double latency_ms);

}  // namespace selfcorrect
