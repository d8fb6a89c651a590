#include <doctest.h>

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "selfcorrect/gateway.hpp"
#include "support/test_util.hpp"

using namespace selfcorrect;

TEST_CASE("64-bit FNV-1a matches the published test vectors") {
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(fnv1a64("foobar") == 0x85944171f73967e8ULL);
  CHECK(fnv1a64("hello world") == 0x779a65e7023cd2e7ULL);
  // Chaining: hashing "ab" equals hashing "b" from the state of "a".
  CHECK(fnv1a64("b", fnv1a64("a")) == fnv1a64("ab"));
  // The integer variant hashes the eight little-endian bytes.
  CHECK(fnv1a64_u64(42, kFnvOffset) == 0xff3add6b3789daefULL);
  CHECK(fnv1a64_u64(0, kFnvOffset) == 0xa8c7f832281a39c5ULL);
  CHECK(to_hex64(0xcbf29ce484222325ULL) == "cbf29ce484222325");
  CHECK(to_hex64(0x1ULL) == "0000000000000001");
}

TEST_CASE("prompt fingerprints answer only to the content that changes the sample") {
  GenParams params;
  params.temperature = 0.9;
  params.max_new_tokens = 128;
  params.n_samples = 10;

  const std::string base = prompt_fingerprint("prompt", params, 3);
  CHECK(base.size() == 16);
  CHECK(base == prompt_fingerprint("prompt", params, 3));

  SUBCASE("sample count is deliberately excluded") {
    GenParams one = params;
    one.n_samples = 1;
    CHECK(prompt_fingerprint("prompt", one, 3) == base);
  }
  SUBCASE("prompt, sampling knobs, and index are all included") {
    CHECK(prompt_fingerprint("prompt!", params, 3) != base);
    CHECK(prompt_fingerprint("prompt", params, 4) != base);
    GenParams hot = params;
    hot.temperature = 1.0;
    CHECK(prompt_fingerprint("prompt", hot, 3) != base);
    GenParams wide = params;
    wide.max_new_tokens = 256;
    CHECK(prompt_fingerprint("prompt", wide, 3) != base);
    GenParams stopped = params;
    stopped.stop = {"\n\n"};
    CHECK(prompt_fingerprint("prompt", stopped, 3) != base);
  }

  SUBCASE("score fingerprints hash the question/solution pair") {
    CHECK(score_fingerprint("q", "s") == score_fingerprint("q", "s"));
    CHECK(score_fingerprint("q", "s") != score_fingerprint("q", "t"));
    CHECK(score_fingerprint("q", "s") != score_fingerprint("r", "s"));
    // The pair is delimited, not concatenated: ("ab","c") != ("a","bc").
    CHECK(score_fingerprint("ab", "c") != score_fingerprint("a", "bc"));
  }
}

TEST_CASE("generation parameter validation") {
  GenParams p;
  CHECK_NOTHROW(p.validate());  // greedy single-sample default
  p.temperature = -0.1;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p.temperature = 0.0;
  p.n_samples = 4;  // multiple samples need temperature
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p.temperature = 0.7;
  CHECK_NOTHROW(p.validate());
  p.max_new_tokens = 0;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p.max_new_tokens = 16;
  p.n_samples = 0;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
}

TEST_CASE("scripted backend produces countable, fingerprinted completions") {
  ScriptedBackend backend("scripted");
  backend.gen_fn = [](const std::string& prompt, const GenParams&, int index) {
    return prompt + "#" + std::to_string(index);
  };
  backend.score_fn = [](const std::string&, const std::string&) { return 0.25; };

  GenParams params;
  params.temperature = 0.9;
  params.n_samples = 3;
  std::vector<Completion> out = backend.generate("p", params);
  REQUIRE(out.size() == 3);
  CHECK(out[0].text == "p#0");
  CHECK(out[2].text == "p#2");
  CHECK(out[1].backend_id == "scripted");
  CHECK(out[1].prompt_fingerprint == prompt_fingerprint("p", params, 1));
  CHECK(backend.generate_calls() == 1);
  CHECK(backend.completions_produced() == 3);
  CHECK(backend.score_correctness("q", "s").p_correct == doctest::Approx(0.25));
  CHECK(backend.score_calls() == 1);

  SUBCASE("fail_next raises on the following requests") {
    backend.fail_next(1);
    CHECK_THROWS_AS(backend.generate("p", params), BackendUnavailable);
    CHECK_NOTHROW(backend.generate("p", params));
  }
}

TEST_CASE("gateway retries transient failures and gives up after max_attempts") {
  auto backend = std::make_shared<ScriptedBackend>("flaky");
  backend->gen_fn = [](const std::string&, const GenParams&, int) { return "ok"; };
  GatewayOptions options;
  options.max_attempts = 3;
  options.backoff_base_ms = 1;
  LmGateway gateway(backend, options);

  GenParams greedy;

  SUBCASE("two failures then success") {
    backend->fail_next(2);
    std::vector<Completion> out = gateway.generate("p", greedy);
    REQUIRE(out.size() == 1);
    CHECK(out[0].text == "ok");
    CHECK(gateway.stats().failures == 2);
    CHECK(gateway.stats().completions == 1);
  }
  SUBCASE("persistent failure propagates after the last attempt") {
    backend->fail_next(3);
    CHECK_THROWS_AS(gateway.generate("p", greedy), BackendUnavailable);
    CHECK(backend->generate_calls() == 3);  // one per attempt
    CHECK(backend->completions_produced() == 0);
  }
  SUBCASE("invalid parameters are rejected without touching the backend") {
    GenParams bad;
    bad.n_samples = -1;
    CHECK_THROWS_AS(gateway.generate("p", bad), std::invalid_argument);
    CHECK(backend->generate_calls() == 0);
  }
  SUBCASE("scores outside [0,1] are rejected") {
    backend->score_fn = [](const std::string&, const std::string&) { return 1.5; };
    CHECK_THROWS_AS(gateway.score_correctness("q", "s"), MalformedScore);
  }
}

TEST_CASE("gateway enforces the in-flight request bound") {
  auto backend = std::make_shared<ScriptedBackend>("slow");
  std::atomic<int> active{0};
  std::atomic<int> peak{0};
  backend->gen_fn = [&](const std::string&, const GenParams&, int) {
    const int now = ++active;
    int snapshot = peak.load();
    while (snapshot < now && !peak.compare_exchange_weak(snapshot, now)) {
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
    --active;
    return std::string("ok");
  };
  GatewayOptions options;
  options.max_in_flight = 2;
  LmGateway gateway(backend, options);

  std::vector<std::thread> threads;
  threads.reserve(8);
  for (int i = 0; i < 8; ++i)
    threads.emplace_back([&gateway] { gateway.generate("p", GenParams{}); });
  for (std::thread& t : threads) t.join();
  CHECK(peak.load() <= 2);
  CHECK(gateway.stats().requests == 8);
}

TEST_CASE("replay cache stores one row per key and survives reopening") {
  test_support::TempDir tmp;
  const std::string path = tmp.str("cache.jsonl");

  ReplayEntry entry;
  entry.fingerprint = "00ff";
  entry.backend_id = "generator";
  entry.kind = "gen";
  entry.prompt = "p";
  entry.params.temperature = 0.9;
  entry.sample_index = 2;
  entry.text = "completion text";
  entry.latency_ms = 123.5;

  {
    ReplayCache cache(path);
    CHECK(cache.size() == 0);
    CHECK(cache.insert(ReplayCache::gen_key("generator", "00ff"), entry));
    CHECK_FALSE(cache.insert(ReplayCache::gen_key("generator", "00ff"), entry));  // no-op
    CHECK(cache.size() == 1);
  }
  {
    ReplayCache cache(path);
    CHECK(cache.size() == 1);
    auto hit = cache.lookup(ReplayCache::gen_key("generator", "00ff"));
    REQUIRE(hit.has_value());
    CHECK(hit->text == "completion text");
    CHECK(hit->latency_ms == doctest::Approx(123.5));
    CHECK_FALSE(cache.lookup(ReplayCache::gen_key("critiquer", "00ff")).has_value());
    CHECK_FALSE(cache.lookup(ReplayCache::score_key("generator", "00ff")).has_value());
  }
}

TEST_CASE("replay wrapper: record, strict, and automatic modes") {
  test_support::TempDir tmp;
  auto cache = std::make_shared<ReplayCache>(tmp.str("cache.jsonl"));
  auto inner = std::make_shared<ScriptedBackend>("inner");
  inner->gen_fn = [](const std::string& p, const GenParams&, int i) {
    return p + "/" + std::to_string(i);
  };
  inner->score_fn = [](const std::string&, const std::string&) { return 0.75; };
  inner->latency_fn = [](const std::string&) { return 41.0; };

  GenParams params;
  params.temperature = 0.8;
  params.n_samples = 2;

  SUBCASE("record mode always consults the inner backend and stores rows") {
    ReplayBackend rec(cache, ReplayMode::record, inner);
    CHECK(rec.id() == "inner");
    rec.generate("p", params);
    rec.score_correctness("q", "s");
    CHECK(cache->size() == 3);  // two samples + one score
    rec.generate("p", params);  // same call again: rows already present
    CHECK(cache->size() == 3);
    CHECK(inner->generate_calls() == 2);

    // Strict replay serves identical content with no inner backend at all.
    ReplayBackend strict(cache, ReplayMode::strict, nullptr, "inner");
    std::vector<Completion> replayed = strict.generate("p", params);
    REQUIRE(replayed.size() == 2);
    CHECK(replayed[0].text == "p/0");
    CHECK(replayed[1].text == "p/1");
    CHECK(replayed[0].latency_ms == doctest::Approx(41.0));  // latency comes from the cache
    CHECK(strict.score_correctness("q", "s").p_correct == doctest::Approx(0.75));
    CHECK_THROWS_AS(strict.generate("unseen", params), CacheMiss);
    CHECK_THROWS_AS(strict.score_correctness("unseen", "s"), CacheMiss);
  }

  SUBCASE("automatic mode serves hits and records misses") {
    ReplayBackend rec(cache, ReplayMode::record, inner);
    rec.generate("p", params);
    const int calls_after_record = inner->generate_calls();

    ReplayBackend automatic(cache, ReplayMode::automatic, inner);
    automatic.generate("p", params);                         // hit
    CHECK(inner->generate_calls() == calls_after_record);    // inner untouched
    automatic.generate("fresh", params);                     // miss -> recorded
    CHECK(inner->generate_calls() == calls_after_record + 1);
    ReplayBackend strict(cache, ReplayMode::strict, nullptr, "inner");
    CHECK(strict.generate("fresh", params)[0].text == "fresh/0");
  }

  SUBCASE("mode names round-trip") {
    CHECK(replay_mode_from_string("record") == ReplayMode::record);
    CHECK(replay_mode_from_string("strict") == ReplayMode::strict);
    CHECK(replay_mode_from_string("auto") == ReplayMode::automatic);
    CHECK_THROWS(replay_mode_from_string("nope"));
  }
}

TEST_CASE("prompted verification maps bolded verdicts onto scores") {
  auto inner = std::make_shared<ScriptedBackend>("base");
  std::string reply = "The logic holds. **correct** [END]";
  std::string seen_prompt;
  inner->gen_fn = [&](const std::string& prompt, const GenParams& params, int) {
    seen_prompt = prompt;
    CHECK(params.temperature == doctest::Approx(0.0));
    return reply;
  };
  PromptedVerifier verifier(inner, default_templates(TaskKind::numeric).verify);
  CHECK(verifier.id() == "base+prompted");

  CHECK(verifier.score_correctness("What is 1 + 1?", "Step 1: \\boxed{2}").p_correct ==
        doctest::Approx(1.0));
  CHECK(seen_prompt.find("Question: What is 1 + 1?") != std::string::npos);
  CHECK(seen_prompt.find("Solution:\n\nStep 1: \\boxed{2}") != std::string::npos);
  CHECK(seen_prompt.ends_with("Is this solution correct or not? Answer **correct** or "
                              "**incorrect** and explain your reasoning. End your response "
                              "with [END]."));

  reply = "The sum is wrong. **incorrect** [END]";
  CHECK(verifier.score_correctness("q", "s").p_correct == doctest::Approx(0.0));
  reply = "cannot tell";
  CHECK(verifier.score_correctness("q", "s").p_correct == doctest::Approx(0.5));
}

TEST_CASE("HTTP backend speaks the chat-completions and scoring protocols") {
  httplib::Server server;
  std::atomic<int> chat_failures_left{0};
  nlohmann::json last_chat_body;
  std::string last_auth;

  server.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
    last_chat_body = nlohmann::json::parse(req.body);
    last_auth = req.get_header_value("Authorization");
    if (chat_failures_left.fetch_sub(1) > 0) {
      res.status = 503;
      res.set_content("overloaded", "text/plain");
      return;
    }
    nlohmann::json reply;
    reply["choices"] = nlohmann::json::array();
    const int n = last_chat_body.value("n", 1);
    for (int i = 0; i < n; ++i)
      reply["choices"].push_back(
          {{"message", {{"role", "assistant"}, {"content", "reply " + std::to_string(i)}}}});
    res.set_content(reply.dump(), "application/json");
  });
  server.Post("/score", [&](const httplib::Request& req, httplib::Response& res) {
    nlohmann::json body = nlohmann::json::parse(req.body);
    nlohmann::json reply;
    reply["p_correct"] = body["solution"].get<std::string>().find("bad") != std::string::npos
                             ? 1.7  // out of range: the gateway must reject it
                             : 0.625;
    res.set_content(reply.dump(), "application/json");
  });

  const int port = server.bind_to_any_port("127.0.0.1");
  REQUIRE(port > 0);
  std::thread server_thread([&server] { server.listen_after_bind(); });
  server.wait_until_ready();

  HttpBackendConfig config;
  config.id = "generator";
  config.base_url = "http://127.0.0.1:" + std::to_string(port);
  config.model = "test-model";
  ::setenv("SELFCORRECT_TEST_TOKEN", "sekrit", 1);
  config.auth_env = "SELFCORRECT_TEST_TOKEN";

  {
    auto backend = std::make_shared<HttpBackend>(config);
    GatewayOptions options;
    options.backoff_base_ms = 1;
    LmGateway gateway(backend, options);

    GenParams params;
    params.temperature = 0.9;
    params.n_samples = 2;
    params.max_new_tokens = 64;

    std::vector<Completion> out = gateway.generate("say hi", params);
    REQUIRE(out.size() == 2);
    CHECK(out[0].text == "reply 0");
    CHECK(out[1].text == "reply 1");
    CHECK(out[0].backend_id == "generator");
    CHECK(out[0].latency_ms > 0.0);
    CHECK(last_chat_body["model"] == "test-model");
    CHECK(last_chat_body["messages"][0]["content"] == "say hi");
    CHECK(last_chat_body["temperature"].get<double>() == doctest::Approx(0.9));
    CHECK(last_chat_body["n"] == 2);
    CHECK(last_chat_body["max_tokens"] == 64);
    CHECK(last_auth == "Bearer sekrit");

    SUBCASE("HTTP 5xx counts as transient and is retried") {
      chat_failures_left = 2;
      CHECK(gateway.generate("again", GenParams{})[0].text == "reply 0");
      CHECK(gateway.stats().failures == 2);
    }
    SUBCASE("scoring endpoint") {
      CHECK(gateway.score_correctness("q", "fine").p_correct == doctest::Approx(0.625));
      CHECK_THROWS_AS(gateway.score_correctness("q", "bad one"), MalformedScore);
    }
    SUBCASE("unreachable hosts raise the transient error") {
      HttpBackendConfig dead = config;
      dead.base_url = "http://127.0.0.1:1";  // nothing listens there
      dead.timeout_ms = 2000;
      HttpBackend unreachable(dead);
      CHECK_THROWS_AS(unreachable.generate("x", GenParams{}), BackendUnavailable);
    }
  }

  server.stop();
  server_thread.join();
  ::unsetenv("SELFCORRECT_TEST_TOKEN");
}
