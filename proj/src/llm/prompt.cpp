#include "prism/llm/prompt.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "prism/error.hpp"

namespace prism::llm {
namespace {

bool is_placeholder_char(char c) {
  return (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_';
}

// Length of the placeholder token starting at body[pos] == '[', or 0.
std::size_t placeholder_len(std::string_view body, std::size_t pos) {
  if (pos + 2 >= body.size() || body[pos] != '[') return 0;
  if (body[pos + 1] < 'A' || body[pos + 1] > 'Z') return 0;
  std::size_t end = pos + 1;
  while (end < body.size() && is_placeholder_char(body[end])) ++end;
  if (end >= body.size() || body[end] != ']') return 0;
  return end - pos + 1;
}

const PromptTemplate kAnalyzer{"analyzer", R"(You are a Question Analyzer Agent in a multi-hop question answering system.
Your task is to analyze a complex, multi-hop question and break it down into a sequence of concise, meaningful subquestions that reflect the reasoning steps required to answer the original question. To do this, identify and extract subquestions based on:
- Key entities (persons, organizations, locations, dates, etc.)
- Important nouns or noun phrases (e.g., titles, concepts, objects)
- Logical or temporal relationships (e.g., comparisons, causality, sequences)
- Specific conditions or constraints in the question

Each subquestion should focus on retrieving or verifying a specific piece of evidence that contributes to the final answer. Return an ordered list of subquestions that represent a clear reasoning path from the question to the answer.
Keep each subquestion short, specific, and unambiguous.

Example Input:
“Which actor played the brother of the character who was portrayed by the same actress that starred in Legally Blonde?”

Example Output:
1. Who starred in Legally Blonde?
2. What character did that actress portray in another film?
3. Who played the brother of that character?

For the following question, return a JSON object with a list of extracted elements like this: ["Subquestions": ["...", "..."].
Question: [QUESTION])"};

const PromptTemplate kSelector{"selector", R"(You are a Selector Agent in a multi-hop QA system.
Your goal is to maximize precision and minimize false positives.

You are given:
- A complex multi-hop question
- Subquestions that represent the reasoning steps
- A list of candidate facts, each represented as [title, sentence_index]
- A set of currently selected evidence sentences

Your task is to carefully remove only those evidence items that are definitely irrelevant for answering any of the subquestions.

Important guidelines:
- Do not remove sentences that are partially relevant or could help bridge reasoning steps.
- Keep sentences containing named entities, dates, or events referenced in the question.
- Do not add new items or regenerate content. Work strictly with the given evidence list.
Return only the pruned list of [title, sentence_index] pairs, with no explanations.  The sentence index starts from 0 for each paragraph.

Question: [QUESTION]
Subquestions: [SUBQUESTION]
Candidates: [CANDIDATES]
Current Selected Evidence: [CURRENT_EVIDENCE]
Return only the updated list with clearly irrelevant sentences removed:)"};

const PromptTemplate kAdder{"adder", R"(You are an Adder Agent in a multi-hop QA system.
Your goal is to maximize recall while minimizing false positives.

You are given:
- A complex multi-hop question
- Subquestions that represent the reasoning steps
- A list of candidate passages and sentences
- A set of currently selected evidence items, each represented as [title, sentence_index]

Your task:
Add only those candidate sentences that are likely to support answering any subquestion.

Do NOT add:
- Vague, unrelated, or overly general sentences
- Off-topic facts or irrelevant entities
- Duplicates or sentences that overlap significantly with existing evidence

Focus on:
- Bridging facts that connect entities across subquestions
- Sentences with named entities, dates, definitions, or relationships in the question
- Factual statements that clearly contribute to the reasoning chain

Do not remove or modify the currently selected evidence. Return a combined list of both current and newly added items as [title, sentence_index] pairs, with no explanations.  The sentence index starts from 0 for each paragraph.

Question: [QUESTION]
Subquestions: [SUBQUESTION]
Candidates: [CANDIDATES]
Current Selected Evidence: [CURRENT_EVIDENCE]
Return the updated evidence list with only relevant additions:)"};

const PromptTemplate kAnswer{"answer", R"(You are a question answering agent. Given a question and the supporting evidence, provide a concise, factual and short answer based only on the evidence without other words. If the answer cannot be determined from the evidence, reply with 'Not Answerable'.

Question: [QUESTION]
Evidence: [EVIDENCE]
Answer:)"};

}  // namespace

std::vector<std::string> PromptTemplate::placeholders() const {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < body.size(); ++i) {
    if (auto len = placeholder_len(body, i); len > 0) {
      std::string name = body.substr(i + 1, len - 2);
      if (std::find(out.begin(), out.end(), name) == out.end()) out.push_back(std::move(name));
      i += len - 1;
    }
  }
  return out;
}

std::string render(const PromptTemplate& tmpl, const Bindings& bindings) {
  const std::string_view body = tmpl.body;
  std::string out;
  out.reserve(body.size());
  std::size_t i = 0;
  while (i < body.size()) {
    if (auto len = placeholder_len(body, i); len > 0) {
      auto name = body.substr(i + 1, len - 2);
      auto it = bindings.find(name);
      if (it == bindings.end()) throw MissingBinding(std::string(name));
      out += it->second;
      i += len;
    } else {
      out += body[i++];
    }
  }
  return out;
}

const PromptTemplate& analyzer_template() { return kAnalyzer; }
const PromptTemplate& selector_template() { return kSelector; }
const PromptTemplate& adder_template() { return kAdder; }
const PromptTemplate& answer_template() { return kAnswer; }

PromptTemplate load_template(std::string name, const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingFile("cannot open template file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return {std::move(name), ss.str()};
}

}  // namespace prism::llm
