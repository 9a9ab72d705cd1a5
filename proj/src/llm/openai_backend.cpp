#include <cstdlib>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "prism/error.hpp"
#include "prism/llm/backends.hpp"

namespace prism::llm {
namespace {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

std::chrono::milliseconds retry_after(const httplib::Result& res,
                                      std::chrono::milliseconds fallback) {
  if (!res || !res->has_header("Retry-After")) return fallback;
  try {
    double secs = std::stod(res->get_header_value("Retry-After"));
    if (secs >= 0) return std::chrono::milliseconds(static_cast<long long>(secs * 1000));
  } catch (const std::exception&) {
  }
  return fallback;
}

struct InFlightPermit {
  explicit InFlightPermit(std::counting_semaphore<>& s) : sem(s) { sem.acquire(); }
  ~InFlightPermit() { sem.release(); }
  InFlightPermit(const InFlightPermit&) = delete;
  InFlightPermit& operator=(const InFlightPermit&) = delete;
  std::counting_semaphore<>& sem;
};

ChatResponse decode(const std::string& body) {
  json j;
  try {
    j = json::parse(body);
  } catch (const json::exception& e) {
    throw MalformedUpstream(std::string("reply is not JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains("choices") || !j["choices"].is_array() ||
      j["choices"].empty()) {
    throw MalformedUpstream("reply has no choices");
  }
  const auto& choice = j["choices"][0];
  if (!choice.is_object() || !choice.contains("message") || !choice["message"].is_object()) {
    throw MalformedUpstream("first choice has no message");
  }
  const auto& msg = choice["message"];
  ChatResponse out;
  if (msg.contains("content") && msg["content"].is_string()) {
    out.text = msg["content"].get<std::string>();
  } else if (!(msg.contains("refusal") && msg["refusal"].is_string())) {
    throw MalformedUpstream("message content is missing");
  }
  if (j.contains("usage") && j["usage"].is_object()) {
    const auto& u = j["usage"];
    out.usage = Usage{u.value("prompt_tokens", 0), u.value("completion_tokens", 0)};
  }
  return out;
}

}  // namespace

OpenAIConfig OpenAIConfig::from_env() {
  OpenAIConfig cfg;
  if (const char* key = std::getenv("PRISM_API_KEY")) cfg.api_key = key;
  if (const char* base = std::getenv("PRISM_API_BASE"); base && *base) cfg.base_url = base;
  return cfg;
}

OpenAIBackend::OpenAIBackend(OpenAIConfig config) : config_(std::move(config)) {
  if (config_.api_key.empty()) throw AuthError("no API key configured (PRISM_API_KEY)");
  if (config_.max_in_flight < 1) throw ConfigError("max_in_flight must be >= 1");
  std::string url = config_.base_url;
  while (!url.empty() && url.back() == '/') url.pop_back();
  auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw ConfigError("base URL lacks a scheme: " + url);
  auto path_start = url.find('/', scheme_end + 3);
  endpoint_.origin = url.substr(0, path_start);
  endpoint_.path =
      (path_start == std::string::npos ? std::string() : url.substr(path_start)) +
      "/chat/completions";
  in_flight_ = std::make_unique<std::counting_semaphore<>>(config_.max_in_flight);
}

OpenAIBackend::~OpenAIBackend() = default;

void OpenAIBackend::wait_for_global_backoff() {
  Clock::time_point until;
  {
    std::lock_guard lock(backoff_mu_);
    until = resume_at_;
  }
  if (until > Clock::now()) std::this_thread::sleep_until(until);
}

void OpenAIBackend::push_global_backoff(std::chrono::milliseconds delay) {
  std::lock_guard lock(backoff_mu_);
  resume_at_ = std::max(resume_at_, Clock::now() + delay);
}

ChatResponse OpenAIBackend::complete(const ChatRequest& request) {
  json messages = json::array();
  if (request.system) messages.push_back({{"role", "system"}, {"content", *request.system}});
  messages.push_back({{"role", "user"}, {"content", request.user}});
  const std::string body = json{{"model", request.model},
                                {"messages", messages},
                                {"temperature", request.temperature},
                                {"max_tokens", request.max_tokens}}
                               .dump(-1, ' ', false, json::error_handler_t::replace);
  const httplib::Headers headers{{"Authorization", "Bearer " + config_.api_key}};

  auto backoff = config_.initial_backoff;
  std::string last_failure;
  bool rate_limited = false;
  for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
    if (attempt > 0) {
      push_global_backoff(backoff);
      backoff = std::min(backoff * 2, config_.max_backoff);
    }
    wait_for_global_backoff();

    const auto start = Clock::now();
    httplib::Result res = [&] {
      InFlightPermit permit(*in_flight_);
      httplib::Client client(endpoint_.origin);
      client.set_connection_timeout(config_.timeout);
      client.set_read_timeout(config_.timeout);
      client.set_write_timeout(config_.timeout);
      return client.Post(endpoint_.path, headers, body, "application/json");
    }();
    const auto elapsed =
        std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - start).count();

    if (!res) {
      last_failure = "network error: " + httplib::to_string(res.error());
      rate_limited = false;
      continue;
    }
    const int status = res->status;
    if (status == 401 || status == 403) {
      throw AuthError("upstream rejected credential (HTTP " + std::to_string(status) + ")");
    }
    if (status == 429) {
      rate_limited = true;
      last_failure = "HTTP 429";
      auto wait = retry_after(res, backoff);
      if (wait > backoff) push_global_backoff(wait);
      continue;
    }
    if (status >= 500) {
      rate_limited = false;
      last_failure = "HTTP " + std::to_string(status);
      continue;
    }
    if (status != 200) {
      throw BackendError("upstream returned HTTP " + std::to_string(status) + ": " +
                         res->body.substr(0, 500));
    }
    ChatResponse out = decode(res->body);
    out.latency_ms = elapsed;
    return out;
  }
  const std::string msg = "giving up after " + std::to_string(config_.max_retries + 1) +
                          " attempts, last failure: " + last_failure;
  if (rate_limited) throw RateLimited(msg);
  throw BackendError(msg);
}

}  // namespace prism::llm
