#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace prism {

/// Case-folded, whitespace-collapsed form of a title. Used only for equality;
/// display titles keep their original spelling.
std::string normalize_title(std::string_view title);

/// A titled paragraph split into sentences. The retrieval unit.
struct Passage {
  std::string title;
  std::vector<std::string> sentences;

  /// Throws std::invalid_argument when the title or any sentence is blank,
  /// or when there are no sentences.
  void check() const;

  std::string text() const;  // sentences joined by a single space

  bool operator==(const Passage&) const = default;
};

/// One selectable unit: a sentence of a titled passage.
struct EvidenceRef {
  std::string title;
  std::size_t sentence_index = 0;

  /// Equality under normalized titles.
  bool same_as(const EvidenceRef& other) const;
};

/// Insertion-ordered, duplicate-free list of refs.
class EvidenceSet {
 public:
  EvidenceSet() = default;
  EvidenceSet(std::initializer_list<EvidenceRef> refs);
  explicit EvidenceSet(std::span<const EvidenceRef> refs);

  /// Appends unless an equal ref is already present. Returns true if appended.
  bool insert(EvidenceRef ref);
  bool contains(const EvidenceRef& ref) const;

  std::size_t size() const noexcept { return refs_.size(); }
  bool empty() const noexcept { return refs_.empty(); }
  const std::vector<EvidenceRef>& refs() const noexcept { return refs_; }
  auto begin() const noexcept { return refs_.begin(); }
  auto end() const noexcept { return refs_.end(); }
  const EvidenceRef& operator[](std::size_t i) const { return refs_[i]; }

  bool is_subset_of(const EvidenceSet& other) const;
  /// Same members regardless of order.
  bool same_members(const EvidenceSet& other) const;

  /// Ordered equality: same refs, same order, identical display titles.
  bool operator==(const EvidenceSet& other) const;

 private:
  std::vector<EvidenceRef> refs_;
  std::vector<std::string> keys_;  // normalized "title\x1findex", parallel to refs_
};

/// Union with first-occurrence order.
EvidenceSet merge_dedup(std::span<const EvidenceSet> sets);

struct RejectedRef {
  EvidenceRef ref;
  std::string reason;  // "unknown title" | "index out of range" | caller-specific
};

struct ValidatedRefs {
  EvidenceSet valid;
  std::vector<RejectedRef> rejected;
};

/// Splits refs into those that resolve against `context` and those that do
/// not. Valid refs are rewritten to the context's display title.
ValidatedRefs validate_refs(const EvidenceSet& set, std::span<const Passage> context);

/// Looks up a passage by normalized title.
const Passage* find_passage(std::span<const Passage> context, std::string_view title);

/// Every (title, sentence) ref addressable in `context`, in context order.
EvidenceSet all_refs(std::span<const Passage> context);

struct SubQuestions {
  std::string original;
  std::vector<std::string> subs;

  bool operator==(const SubQuestions&) const = default;
};

struct QARecord {
  std::string id;
  std::string question;
  std::string gold_answer;
  std::vector<Passage> context;
  EvidenceSet gold_supporting;
  std::optional<std::string> qtype;
  std::optional<int> hops;

  /// Throws std::invalid_argument describing the first broken invariant.
  void check() const;
};

struct IterationTrace {
  int iteration = 0;  // 0 is the initial selection pass
  EvidenceSet adder_output;
  EvidenceSet selector_output;
  std::vector<std::string> raw_responses;
};

}  // namespace prism
