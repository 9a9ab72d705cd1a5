#include "prism/evidence.hpp"

#include <algorithm>
#include <cctype>
#include <stdexcept>
#include <unordered_set>

namespace prism {
namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

bool is_blank(std::string_view s) { return std::all_of(s.begin(), s.end(), is_space); }

std::string ref_key(const EvidenceRef& ref) {
  std::string key = normalize_title(ref.title);
  key += '\x1f';
  key += std::to_string(ref.sentence_index);
  return key;
}

}  // namespace

std::string normalize_title(std::string_view title) {
  std::string out;
  out.reserve(title.size());
  bool pending_space = false;
  for (char c : title) {
    if (is_space(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) {
      out += ' ';
      pending_space = false;
    }
    out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  return out;
}

void Passage::check() const {
  if (is_blank(title)) throw std::invalid_argument("passage title is empty");
  if (sentences.empty()) throw std::invalid_argument("passage '" + title + "' has no sentences");
  for (std::size_t i = 0; i < sentences.size(); ++i) {
    if (is_blank(sentences[i])) {
      throw std::invalid_argument("passage '" + title + "' sentence " + std::to_string(i) +
                                  " is empty");
    }
  }
}

std::string Passage::text() const {
  std::string out;
  for (const auto& s : sentences) {
    if (!out.empty()) out += ' ';
    out += s;
  }
  return out;
}

bool EvidenceRef::same_as(const EvidenceRef& other) const {
  return sentence_index == other.sentence_index &&
         normalize_title(title) == normalize_title(other.title);
}

EvidenceSet::EvidenceSet(std::initializer_list<EvidenceRef> refs) {
  for (const auto& r : refs) insert(r);
}

EvidenceSet::EvidenceSet(std::span<const EvidenceRef> refs) {
  for (const auto& r : refs) insert(r);
}

bool EvidenceSet::insert(EvidenceRef ref) {
  auto key = ref_key(ref);
  if (std::find(keys_.begin(), keys_.end(), key) != keys_.end()) return false;
  keys_.push_back(std::move(key));
  refs_.push_back(std::move(ref));
  return true;
}

bool EvidenceSet::contains(const EvidenceRef& ref) const {
  return std::find(keys_.begin(), keys_.end(), ref_key(ref)) != keys_.end();
}

bool EvidenceSet::is_subset_of(const EvidenceSet& other) const {
  return std::all_of(keys_.begin(), keys_.end(), [&](const std::string& k) {
    return std::find(other.keys_.begin(), other.keys_.end(), k) != other.keys_.end();
  });
}

bool EvidenceSet::same_members(const EvidenceSet& other) const {
  return size() == other.size() && is_subset_of(other);
}

bool EvidenceSet::operator==(const EvidenceSet& other) const {
  if (refs_.size() != other.refs_.size()) return false;
  for (std::size_t i = 0; i < refs_.size(); ++i) {
    if (refs_[i].title != other.refs_[i].title ||
        refs_[i].sentence_index != other.refs_[i].sentence_index) {
      return false;
    }
  }
  return true;
}

EvidenceSet merge_dedup(std::span<const EvidenceSet> sets) {
  EvidenceSet out;
  for (const auto& s : sets) {
    for (const auto& r : s) out.insert(r);
  }
  return out;
}

const Passage* find_passage(std::span<const Passage> context, std::string_view title) {
  const auto wanted = normalize_title(title);
  for (const auto& p : context) {
    if (normalize_title(p.title) == wanted) return &p;
  }
  return nullptr;
}

ValidatedRefs validate_refs(const EvidenceSet& set, std::span<const Passage> context) {
  ValidatedRefs out;
  for (const auto& ref : set) {
    const Passage* p = find_passage(context, ref.title);
    if (p == nullptr) {
      out.rejected.push_back({ref, "unknown title"});
    } else if (ref.sentence_index >= p->sentences.size()) {
      out.rejected.push_back({ref, "index out of range"});
    } else {
      out.valid.insert({p->title, ref.sentence_index});
    }
  }
  return out;
}

EvidenceSet all_refs(std::span<const Passage> context) {
  EvidenceSet out;
  for (const auto& p : context) {
    for (std::size_t i = 0; i < p.sentences.size(); ++i) out.insert({p.title, i});
  }
  return out;
}

void QARecord::check() const {
  if (id.empty()) throw std::invalid_argument("record id is empty");
  std::unordered_set<std::string> titles;
  for (const auto& p : context) {
    p.check();
    if (!titles.insert(normalize_title(p.title)).second) {
      throw std::invalid_argument("duplicate context title '" + p.title + "'");
    }
  }
  if (gold_supporting.empty()) throw std::invalid_argument("gold_supporting is empty");
  auto checked = validate_refs(gold_supporting, context);
  if (!checked.rejected.empty()) {
    const auto& r = checked.rejected.front();
    throw std::invalid_argument("supporting fact [" + r.ref.title + ", " +
                                std::to_string(r.ref.sentence_index) + "]: " + r.reason);
  }
}

}  // namespace prism
