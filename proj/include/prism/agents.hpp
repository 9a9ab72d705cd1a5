#pragma once

#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "prism/evidence.hpp"
#include "prism/llm/backend.hpp"
#include "prism/llm/prompt.hpp"

namespace prism {

/// What the answer agent sees as [EVIDENCE].
enum class AnswerMode {
  kFactsOnly,    // the referenced sentences
  kPassages,     // full text of every passage with at least one selected ref
  kFullContext,  // every candidate passage
};

std::string_view to_string(AnswerMode mode);
AnswerMode answer_mode_from_string(std::string_view name);  // throws ConfigError

struct AgentConfig {
  std::reference_wrapper<llm::Backend> backend;
  std::string model = "gpt-4o";
  double temperature = 0.0;
  int max_tokens = 1024;
  llm::PromptTemplate analyzer = llm::analyzer_template();
  llm::PromptTemplate selector = llm::selector_template();
  llm::PromptTemplate adder = llm::adder_template();
  llm::PromptTemplate answer = llm::answer_template();
  bool parse_retry = true;
};

/// Per-record scratch state threaded through agent calls.
struct AgentCall {
  std::string record_id;
  std::vector<std::string> responses;  // raw replies, call order
  std::vector<RejectedRef> rejected;
  std::vector<std::string> flags;
};

/// Suffix appended to a request whose reply could not be parsed.
inline constexpr std::string_view kParseRetrySuffix = "\n\nReturn only the list.";

/// The four prompted agents. Stateless; one instance may serve many records
/// concurrently as long as each record uses its own AgentCall.
class Agents {
 public:
  explicit Agents(AgentConfig config);

  const AgentConfig& config() const noexcept { return config_; }

  /// Decomposes the question. After two unparseable replies, falls back to
  /// the question itself and flags "analyzer_degraded".
  SubQuestions analyze(std::string_view question, AgentCall& call) const;

  /// Prune-only: the result is always a subset of `current`.
  EvidenceSet select(std::string_view question, const SubQuestions& subs,
                     std::span<const Passage> candidates, const EvidenceSet& current,
                     AgentCall& call) const;

  /// Add-only: the result always contains `current`.
  EvidenceSet add(std::string_view question, const SubQuestions& subs,
                  std::span<const Passage> candidates, const EvidenceSet& current,
                  AgentCall& call) const;

  std::string answer(std::string_view question, const EvidenceSet& evidence,
                     std::span<const Passage> context, AnswerMode mode, AgentCall& call) const;

 private:
  std::string ask(const std::string& prompt, std::string_view agent, AgentCall& call) const;
  std::vector<EvidenceRef> ask_refs(const std::string& prompt, std::string_view agent,
                                    AgentCall& call) const;

  AgentConfig config_;
};

/// One line per candidate sentence: `["title", i] sentence text`.
std::string render_candidates(std::span<const Passage> candidates);
std::string render_subquestions(const SubQuestions& subs);
std::string render_evidence(const EvidenceSet& evidence, std::span<const Passage> context,
                            AnswerMode mode);

}  // namespace prism
