#include <cstdlib>

#include <httplib.h>
#include <json.hpp>

#include "selfcorrect/gateway.hpp"

namespace selfcorrect {

using nlohmann::json;

HttpBackend::HttpBackend(HttpBackendConfig config) : config_(std::move(config)) {
  if (config_.base_url.empty())
    throw std::invalid_argument("HttpBackend '" + config_.id + "' needs a base_url");
}

std::string HttpBackend::post_json(const std::string& path, const std::string& body,
                                   double* latency_ms) {
  httplib::Client client(config_.base_url);
  client.set_connection_timeout(0, config_.timeout_ms * 1000LL);
  client.set_read_timeout(config_.timeout_ms / 1000, (config_.timeout_ms % 1000) * 1000);

  httplib::Headers headers;
  if (!config_.auth_env.empty()) {
    if (const char* token = std::getenv(config_.auth_env.c_str()); token && *token)
      headers.emplace("Authorization", std::string("Bearer ") + token);
  }

  auto start = std::chrono::steady_clock::now();
  httplib::Result res = client.Post(path, headers, body, "application/json");
  auto elapsed = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start);
  if (latency_ms) *latency_ms = elapsed.count();

  if (!res) {
    if (res.error() == httplib::Error::ConnectionTimeout || res.error() == httplib::Error::Read)
      throw Timeout("request to " + config_.base_url + path + " timed out");
    throw BackendUnavailable("request to " + config_.base_url + path + " failed: " +
                             httplib::to_string(res.error()));
  }
  if (res->status < 200 || res->status >= 300)
    throw BackendUnavailable("HTTP " + std::to_string(res->status) + " from " + config_.base_url +
                             path + ": " + res->body);
  return res->body;
}

std::vector<Completion> HttpBackend::generate(const std::string& prompt, const GenParams& params) {
  json body;
  body["model"] = config_.model;
  body["messages"] = json::array({{{"role", "user"}, {"content", prompt}}});
  body["temperature"] = params.temperature;
  body["n"] = params.n_samples;
  body["max_tokens"] = params.max_new_tokens;
  if (!params.stop.empty()) body["stop"] = params.stop;

  double latency_ms = 0.0;
  std::string reply = post_json(config_.chat_path, body.dump(), &latency_ms);

  json parsed;
  try {
    parsed = json::parse(reply);
  } catch (const json::exception& e) {
    throw BackendUnavailable("unparseable response from " + config_.base_url + ": " + e.what());
  }
  if (!parsed.contains("choices") || !parsed["choices"].is_array())
    throw BackendUnavailable("response from " + config_.base_url + " has no choices array");

  std::vector<std::string> texts;
  for (const json& choice : parsed["choices"]) {
    if (choice.contains("message") && choice["message"].contains("content"))
      texts.push_back(choice["message"]["content"].get<std::string>());
    else if (choice.contains("text"))
      texts.push_back(choice["text"].get<std::string>());
    else
      throw BackendUnavailable("choice without message.content or text from " + config_.base_url);
  }
  if (static_cast<int>(texts.size()) != params.n_samples)
    throw BackendUnavailable("asked " + config_.base_url + " for " +
                             std::to_string(params.n_samples) + " samples, got " +
                             std::to_string(texts.size()));
  return make_completions(texts, config_.id, prompt, params, latency_ms);
}

ScoreResult HttpBackend::score_correctness(const std::string& question,
                                           const std::string& solution) {
  json body;
  body["question"] = question;
  body["solution"] = solution;

  double latency_ms = 0.0;
  std::string reply = post_json(config_.score_path, body.dump(), &latency_ms);

  json parsed;
  try {
    parsed = json::parse(reply);
  } catch (const json::exception& e) {
    throw BackendUnavailable("unparseable score response from " + config_.base_url + ": " +
                             e.what());
  }
  if (!parsed.contains("p_correct") || !parsed["p_correct"].is_number())
    throw MalformedScore("score response from " + config_.base_url +
                         " has no numeric p_correct field");
  return ScoreResult{parsed["p_correct"].get<double>(), latency_ms};
}

}  // namespace selfcorrect
