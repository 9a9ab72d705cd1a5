#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "prism/evidence.hpp"

namespace prism::llm {

/// Extracts the first well-formed array of [title, index] pairs from a model
/// reply. Tolerates surrounding prose, code fences, single, double or curly
/// quotes, quoted indices and trailing commas. A reply holding only bare
/// pairs (no enclosing array) is accepted when it contains no nested array
/// attempt. Throws ParseFailure when nothing can be recovered.
std::vector<EvidenceRef> parse_ref_list(std::string_view reply);

/// Extracts sub-questions from a JSON-ish object keyed "Subquestions"
/// (case-insensitive), a bare array of strings, or a numbered / bulleted
/// list. Numbering prefixes are stripped. Throws ParseFailure.
std::vector<std::string> parse_subquestions(std::string_view reply);

/// Parses a `[title, index]` pair at the very start of `line`.
std::optional<EvidenceRef> parse_ref_prefix(std::string_view line);

/// `["title", 3]`
std::string format_ref(const EvidenceRef& ref);
/// `[["a", 0], ["b", 1]]`
std::string format_ref_list(std::span<const EvidenceRef> refs);

/// JSON string literal for `text`, quotes included.
std::string json_quote(std::string_view text);

}  // namespace prism::llm
