#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "prism/evidence.hpp"

namespace prism::bm25 {

/// Lower-cases ASCII letters and splits on runs of non-alphanumeric ASCII.
/// Bytes >= 0x80 count as word characters so UTF-8 words stay whole.
std::vector<std::string> tokenize(std::string_view text);

struct Params {
  double k1 = 1.2;
  double b = 0.75;
};

struct Posting {
  std::size_t doc = 0;
  std::size_t tf = 0;
  bool operator==(const Posting&) const = default;
};

/// Okapi BM25 inverted index over title + sentences of each passage.
class Index {
 public:
  std::size_t doc_count() const noexcept { return passages_.size(); }
  double avg_doc_len() const noexcept { return avg_doc_len_; }
  const Params& params() const noexcept { return params_; }
  std::size_t doc_length(std::size_t doc) const { return doc_lengths_.at(doc); }
  const Passage& passage(std::size_t doc) const { return passages_.at(doc); }
  /// Postings for `term`, ascending doc id. Empty when unseen.
  std::span<const Posting> postings(const std::string& term) const;
  std::size_t doc_freq(const std::string& term) const { return postings(term).size(); }
  /// ln((N - df + 0.5) / (df + 0.5) + 1)
  double idf(const std::string& term) const;

 private:
  friend Index build(std::vector<Passage> passages, Params params);

  std::vector<Passage> passages_;
  std::unordered_map<std::string, std::vector<Posting>> postings_;
  std::vector<std::size_t> doc_lengths_;
  double avg_doc_len_ = 0;
  Params params_;
};

/// Throws DuplicateTitle for titles equal under normalize_title, and
/// std::invalid_argument for an empty corpus or bad parameters.
Index build(std::vector<Passage> passages, Params params = {});

/// Sum over query terms (repeats count again) of the BM25 term weight.
/// Throws UnknownDoc.
double score(const Index& index, std::span<const std::string> query_terms, std::size_t doc);

struct Hit {
  std::size_t doc = 0;
  double score = 0;
};

/// Top-k by descending score; ties go to the smaller title. Returns fewer
/// than k hits when the corpus is smaller.
std::vector<Hit> retrieve_topk(const Index& index, std::string_view question, std::size_t k);

/// Reads a corpus file: one {"title", "sentences": [...]} object per line.
std::vector<Passage> load_corpus(const std::string& path);

}  // namespace prism::bm25
