#pragma once

#include <cstdint>
#include <optional>
#include <string>

namespace prism::llm {

/// Routing metadata attached to a request. Backends that only speak the wire
/// protocol ignore it; the oracle and call logs rely on it.
struct RequestTag {
  std::string agent;      // "analyzer" | "selector" | "adder" | "answer"
  std::string record_id;
};

struct ChatRequest {
  std::string model;
  std::optional<std::string> system;
  std::string user;
  double temperature = 0.0;
  int max_tokens = 1024;
  RequestTag tag;
};

struct Usage {
  int prompt_tokens = 0;
  int completion_tokens = 0;
};

struct ChatResponse {
  std::string text;
  std::optional<Usage> usage;
  std::int64_t latency_ms = 0;
};

/// A chat-completion backend. Implementations must be safe to call from
/// several threads at once.
class Backend {
 public:
  virtual ~Backend() = default;
  virtual ChatResponse complete(const ChatRequest& request) = 0;
};

}  // namespace prism::llm
