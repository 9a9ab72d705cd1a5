#pragma once

#include <chrono>
#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <span>
#include <string>
#include <vector>

#include "prism/evidence.hpp"
#include "prism/llm/backend.hpp"

namespace prism::llm {

/// One scripted turn. When `match` is set, the rendered prompt must contain it.
struct ScriptEntry {
  std::optional<std::string> match;
  std::string reply;
};

/// Reads a mock script: a JSON array of {"match"?, "reply"} objects, or one
/// such object per line.
std::vector<ScriptEntry> load_script(const std::string& path);

/// Replays scripted replies in order. A mismatching entry raises
/// ScriptMismatch, running off the end raises ScriptExhausted.
class ScriptedBackend final : public Backend {
 public:
  explicit ScriptedBackend(std::vector<ScriptEntry> script);
  /// Convenience: replies with no match filters.
  static ScriptedBackend from_replies(std::vector<std::string> replies);

  ChatResponse complete(const ChatRequest& request) override;

  std::size_t consumed() const;
  std::size_t remaining() const;

 private:
  std::vector<ScriptEntry> script_;
  std::size_t next_ = 0;
  mutable std::mutex mu_;
};

/// Answers from gold labels. Selector and Adder calls get the gold refs that
/// appear among the prompt's candidate lines, the Analyzer gets the original
/// question back, and the answer agent gets the gold answer.
class OracleBackend final : public Backend {
 public:
  explicit OracleBackend(std::span<const QARecord> records);

  ChatResponse complete(const ChatRequest& request) override;

 private:
  struct Gold {
    std::string question;
    std::string answer;
    EvidenceSet supporting;
  };
  std::map<std::string, Gold> gold_;
};

/// Candidate refs listed one per line as `["title", index] sentence`.
EvidenceSet candidate_refs_in_prompt(std::string_view prompt);

struct CallRecord {
  RequestTag tag;
  std::string prompt;
  std::string reply;
};

/// Forwards to another backend and keeps a log of every call.
class RecordingBackend final : public Backend {
 public:
  explicit RecordingBackend(Backend& inner) : inner_(inner) {}

  ChatResponse complete(const ChatRequest& request) override;

  std::vector<CallRecord> calls() const;
  std::size_t count(std::string_view agent) const;

 private:
  Backend& inner_;
  std::vector<CallRecord> calls_;
  mutable std::mutex mu_;
};

struct OpenAIConfig {
  std::string base_url = "https://api.openai.com/v1";
  std::string api_key;
  int max_retries = 4;  // attempts after the first
  std::chrono::milliseconds initial_backoff{1000};
  std::chrono::milliseconds max_backoff{30000};
  int max_in_flight = 4;
  std::chrono::seconds timeout{120};

  /// Reads PRISM_API_KEY and PRISM_API_BASE.
  static OpenAIConfig from_env();
};

/// Client for an OpenAI-compatible `/chat/completions` endpoint.
class OpenAIBackend final : public Backend {
 public:
  explicit OpenAIBackend(OpenAIConfig config);
  ~OpenAIBackend() override;

  ChatResponse complete(const ChatRequest& request) override;

 private:
  struct Endpoint {
    std::string origin;  // scheme://host[:port]
    std::string path;    // prefix ending in /chat/completions
  };

  void wait_for_global_backoff();
  void push_global_backoff(std::chrono::milliseconds delay);

  OpenAIConfig config_;
  Endpoint endpoint_;
  std::unique_ptr<std::counting_semaphore<>> in_flight_;
  std::mutex backoff_mu_;
  std::chrono::steady_clock::time_point resume_at_{};
};

}  // namespace prism::llm
