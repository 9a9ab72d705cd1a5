#include <algorithm>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "prism/error.hpp"
#include "prism/llm/backends.hpp"
#include "prism/llm/parse.hpp"

namespace prism::llm {
namespace {

using nlohmann::json;

ScriptEntry entry_from_json(const json& j, std::size_t n) {
  if (!j.is_object() || !j.contains("reply") || !j["reply"].is_string()) {
    throw SchemaError("script entry " + std::to_string(n) + ": expected object with string 'reply'");
  }
  ScriptEntry e;
  e.reply = j["reply"].get<std::string>();
  if (j.contains("match") && !j["match"].is_null()) e.match = j["match"].get<std::string>();
  return e;
}

std::string sub_json(const std::string& question) {
  return json{{"Subquestions", json::array({question})}}.dump();
}

}  // namespace

std::vector<ScriptEntry> load_script(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingFile("cannot open script " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();
  std::vector<ScriptEntry> out;
  auto first = text.find_first_not_of(" \t\r\n");
  try {
    if (first != std::string::npos && text[first] == '[') {
      auto arr = json::parse(text);
      for (const auto& j : arr) out.push_back(entry_from_json(j, out.size()));
    } else {
      std::istringstream lines(text);
      std::string line;
      while (std::getline(lines, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        out.push_back(entry_from_json(json::parse(line), out.size()));
      }
    }
  } catch (const json::exception& e) {
    throw SchemaError("script " + path + ": " + e.what());
  }
  return out;
}

ScriptedBackend::ScriptedBackend(std::vector<ScriptEntry> script) : script_(std::move(script)) {}

ScriptedBackend ScriptedBackend::from_replies(std::vector<std::string> replies) {
  std::vector<ScriptEntry> script;
  script.reserve(replies.size());
  for (auto& r : replies) script.push_back({std::nullopt, std::move(r)});
  return ScriptedBackend(std::move(script));
}

ChatResponse ScriptedBackend::complete(const ChatRequest& request) {
  std::lock_guard lock(mu_);
  if (next_ >= script_.size()) {
    throw ScriptExhausted("mock script exhausted after " + std::to_string(script_.size()) +
                          " turns (" + request.tag.agent + " call)");
  }
  const auto& entry = script_[next_];
  if (entry.match) {
    const bool hit = request.user.find(*entry.match) != std::string::npos ||
                     (request.system && request.system->find(*entry.match) != std::string::npos);
    if (!hit) {
      throw ScriptMismatch("script turn " + std::to_string(next_) + " expects prompt containing '" +
                           *entry.match + "' (" + request.tag.agent + " call)");
    }
  }
  ++next_;
  return {entry.reply, std::nullopt, 0};
}

std::size_t ScriptedBackend::consumed() const {
  std::lock_guard lock(mu_);
  return next_;
}

std::size_t ScriptedBackend::remaining() const {
  std::lock_guard lock(mu_);
  return script_.size() - next_;
}

EvidenceSet candidate_refs_in_prompt(std::string_view prompt) {
  EvidenceSet out;
  std::size_t start = 0;
  while (start < prompt.size()) {
    std::size_t end = prompt.find('\n', start);
    if (end == std::string_view::npos) end = prompt.size();
    auto line = prompt.substr(start, end - start);
    if (auto ref = parse_ref_prefix(line)) out.insert(std::move(*ref));
    start = end + 1;
  }
  return out;
}

OracleBackend::OracleBackend(std::span<const QARecord> records) {
  for (const auto& r : records) gold_[r.id] = {r.question, r.gold_answer, r.gold_supporting};
}

ChatResponse OracleBackend::complete(const ChatRequest& request) {
  auto it = gold_.find(request.tag.record_id);
  if (it == gold_.end()) {
    throw BackendError("oracle has no gold labels for record '" + request.tag.record_id + "'");
  }
  const Gold& g = it->second;
  const auto& agent = request.tag.agent;
  if (agent == "analyzer") return {sub_json(g.question), std::nullopt, 0};
  if (agent == "answer") return {g.answer, std::nullopt, 0};
  if (agent == "selector" || agent == "adder") {
    const EvidenceSet pool = candidate_refs_in_prompt(request.user);
    std::vector<EvidenceRef> hits;
    for (const auto& ref : g.supporting) {
      for (const auto& c : pool) {
        if (c.same_as(ref)) {
          hits.push_back(c);
          break;
        }
      }
    }
    return {format_ref_list(hits), std::nullopt, 0};
  }
  throw BackendError("oracle cannot serve agent '" + agent + "'");
}

ChatResponse RecordingBackend::complete(const ChatRequest& request) {
  auto resp = inner_.complete(request);
  std::lock_guard lock(mu_);
  calls_.push_back({request.tag, request.user, resp.text});
  return resp;
}

std::vector<CallRecord> RecordingBackend::calls() const {
  std::lock_guard lock(mu_);
  return calls_;
}

std::size_t RecordingBackend::count(std::string_view agent) const {
  std::lock_guard lock(mu_);
  return static_cast<std::size_t>(std::count_if(
      calls_.begin(), calls_.end(), [&](const CallRecord& c) { return c.tag.agent == agent; }));
}

}  // namespace prism::llm
