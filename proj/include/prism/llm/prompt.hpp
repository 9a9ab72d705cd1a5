#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace prism::llm {

/// Prompt body with bracketed upper-case placeholders such as [QUESTION].
struct PromptTemplate {
  std::string name;
  std::string body;

  /// Placeholders in order of first appearance.
  std::vector<std::string> placeholders() const;
};

using Bindings = std::map<std::string, std::string, std::less<>>;

/// Single-pass substitution of every placeholder. Text outside placeholders
/// is left untouched, and substituted values are never rescanned.
/// Throws MissingBinding for the first unbound placeholder.
std::string render(const PromptTemplate& tmpl, const Bindings& bindings);

// Default templates shipped with the pipeline.
const PromptTemplate& analyzer_template();
const PromptTemplate& selector_template();
const PromptTemplate& adder_template();
const PromptTemplate& answer_template();

/// Reads a template body from a plain-text file.
PromptTemplate load_template(std::string name, const std::string& path);

}  // namespace prism::llm
