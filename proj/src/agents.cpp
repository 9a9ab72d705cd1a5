#include "prism/agents.hpp"

#include <algorithm>
#include <cctype>
#include <stdexcept>

#include "prism/error.hpp"
#include "prism/llm/parse.hpp"

namespace prism {
namespace {

std::string one_line(std::string_view s) {
  std::string out(s);
  std::replace_if(out.begin(), out.end(), [](char c) { return c == '\n' || c == '\r'; }, ' ');
  return out;
}

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

void require_candidates(std::span<const Passage> candidates) {
  if (candidates.empty()) throw std::invalid_argument("candidate pool is empty");
}

void check_template(const llm::PromptTemplate& t, std::string_view role) {
  if (t.body.empty()) throw ConfigError("missing " + std::string(role) + " template");
}

}  // namespace

std::string_view to_string(AnswerMode mode) {
  switch (mode) {
    case AnswerMode::kFactsOnly: return "facts-only";
    case AnswerMode::kPassages: return "passages";
    case AnswerMode::kFullContext: return "full-context";
  }
  return "facts-only";
}

AnswerMode answer_mode_from_string(std::string_view name) {
  if (name == "facts-only") return AnswerMode::kFactsOnly;
  if (name == "passages") return AnswerMode::kPassages;
  if (name == "full-context") return AnswerMode::kFullContext;
  throw ConfigError("unknown answer mode '" + std::string(name) + "'");
}

std::string render_candidates(std::span<const Passage> candidates) {
  std::string out;
  for (const auto& p : candidates) {
    for (std::size_t i = 0; i < p.sentences.size(); ++i) {
      out += '\n';
      out += llm::format_ref({p.title, i});
      out += ' ';
      out += one_line(p.sentences[i]);
    }
  }
  return out;
}

std::string render_subquestions(const SubQuestions& subs) {
  std::string out;
  for (std::size_t i = 0; i < subs.subs.size(); ++i) {
    out += '\n';
    out += std::to_string(i + 1) + ". " + one_line(subs.subs[i]);
  }
  return out;
}

std::string render_evidence(const EvidenceSet& evidence, std::span<const Passage> context,
                            AnswerMode mode) {
  std::vector<std::string> lines;
  switch (mode) {
    case AnswerMode::kFactsOnly:
      for (const auto& ref : evidence) {
        const Passage* p = find_passage(context, ref.title);
        if (p == nullptr || ref.sentence_index >= p->sentences.size()) {
          throw std::invalid_argument("evidence ref " + llm::format_ref(ref) +
                                      " does not resolve in context");
        }
        lines.push_back(p->title + ": " + one_line(p->sentences[ref.sentence_index]));
      }
      break;
    case AnswerMode::kPassages: {
      std::vector<const Passage*> seen;
      for (const auto& ref : evidence) {
        const Passage* p = find_passage(context, ref.title);
        if (p == nullptr || std::find(seen.begin(), seen.end(), p) != seen.end()) continue;
        seen.push_back(p);
        lines.push_back(p->title + ": " + one_line(p->text()));
      }
      break;
    }
    case AnswerMode::kFullContext:
      for (const auto& p : context) lines.push_back(p.title + ": " + one_line(p.text()));
      break;
  }
  if (lines.empty()) return "None";
  std::string out;
  for (const auto& l : lines) out += "\n" + l;
  return out;
}

Agents::Agents(AgentConfig config) : config_(std::move(config)) {
  check_template(config_.analyzer, "analyzer");
  check_template(config_.selector, "selector");
  check_template(config_.adder, "adder");
  check_template(config_.answer, "answer");
}

std::string Agents::ask(const std::string& prompt, std::string_view agent,
                        AgentCall& call) const {
  llm::ChatRequest req;
  req.model = config_.model;
  req.user = prompt;
  req.temperature = config_.temperature;
  req.max_tokens = config_.max_tokens;
  req.tag = {std::string(agent), call.record_id};
  auto resp = config_.backend.get().complete(req);
  call.responses.push_back(resp.text);
  return resp.text;
}

std::vector<EvidenceRef> Agents::ask_refs(const std::string& prompt, std::string_view agent,
                                          AgentCall& call) const {
  const std::string reply = ask(prompt, agent, call);
  try {
    return llm::parse_ref_list(reply);
  } catch (const ParseFailure&) {
    if (!config_.parse_retry) throw;
  }
  call.flags.push_back(std::string(agent) + "_parse_retry");
  return llm::parse_ref_list(ask(prompt + std::string(kParseRetrySuffix), agent, call));
}

SubQuestions Agents::analyze(std::string_view question, AgentCall& call) const {
  if (trim(question).empty()) throw std::invalid_argument("question is empty");
  const std::string prompt =
      llm::render(config_.analyzer, {{"QUESTION", std::string(question)}});
  SubQuestions out{std::string(question), {}};
  int attempts = config_.parse_retry ? 2 : 1;
  for (int i = 0; i < attempts; ++i) {
    const std::string reply =
        ask(i == 0 ? prompt : prompt + std::string(kParseRetrySuffix), "analyzer", call);
    try {
      out.subs = llm::parse_subquestions(reply);
      return out;
    } catch (const ParseFailure&) {
    }
  }
  call.flags.push_back("analyzer_degraded");
  out.subs = {std::string(question)};
  return out;
}

EvidenceSet Agents::select(std::string_view question, const SubQuestions& subs,
                           std::span<const Passage> candidates, const EvidenceSet& current,
                           AgentCall& call) const {
  require_candidates(candidates);
  if (current.empty()) return {};
  const std::string prompt =
      llm::render(config_.selector, {{"QUESTION", std::string(question)},
                                     {"SUBQUESTION", render_subquestions(subs)},
                                     {"CANDIDATES", render_candidates(candidates)},
                                     {"CURRENT_EVIDENCE", llm::format_ref_list(current.refs())}});
  auto parsed = ask_refs(prompt, "selector", call);
  auto checked = validate_refs(EvidenceSet(std::span<const EvidenceRef>(parsed)), candidates);
  for (auto& r : checked.rejected) call.rejected.push_back(std::move(r));
  EvidenceSet out;
  for (const auto& ref : checked.valid) {
    if (current.contains(ref)) {
      out.insert(ref);
    } else {
      call.rejected.push_back({ref, "not in current evidence"});
    }
  }
  return out;
}

EvidenceSet Agents::add(std::string_view question, const SubQuestions& subs,
                        std::span<const Passage> candidates, const EvidenceSet& current,
                        AgentCall& call) const {
  require_candidates(candidates);
  const std::string prompt =
      llm::render(config_.adder, {{"QUESTION", std::string(question)},
                                  {"SUBQUESTION", render_subquestions(subs)},
                                  {"CANDIDATES", render_candidates(candidates)},
                                  {"CURRENT_EVIDENCE", llm::format_ref_list(current.refs())}});
  auto parsed = ask_refs(prompt, "adder", call);
  auto checked = validate_refs(EvidenceSet(std::span<const EvidenceRef>(parsed)), candidates);
  for (auto& r : checked.rejected) call.rejected.push_back(std::move(r));
  EvidenceSet out = current;
  for (const auto& ref : checked.valid) out.insert(ref);
  return out;
}

std::string Agents::answer(std::string_view question, const EvidenceSet& evidence,
                           std::span<const Passage> context, AnswerMode mode,
                           AgentCall& call) const {
  const std::string prompt =
      llm::render(config_.answer, {{"QUESTION", std::string(question)},
                                   {"EVIDENCE", render_evidence(evidence, context, mode)}});
  std::string text = trim(ask(prompt, "answer", call));
  if (text.empty()) throw BackendError("answer agent returned an empty reply");
  return text;
}

}  // namespace prism
