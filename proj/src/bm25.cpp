#include "prism/bm25.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <stdexcept>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "prism/error.hpp"

namespace prism::bm25 {
namespace {

bool is_word_byte(unsigned char c) {
  return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c >= 0x80;
}

double term_weight(double idf, double tf, double len, double avg_len, const Params& p) {
  return idf * (tf * (p.k1 + 1.0)) / (tf + p.k1 * (1.0 - p.b + p.b * len / avg_len));
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : text) {
    auto c = static_cast<unsigned char>(ch);
    if (is_word_byte(c)) {
      cur += (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : ch;
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

std::span<const Posting> Index::postings(const std::string& term) const {
  auto it = postings_.find(term);
  if (it == postings_.end()) return {};
  return it->second;
}

double Index::idf(const std::string& term) const {
  const double n = static_cast<double>(doc_count());
  const double df = static_cast<double>(doc_freq(term));
  return std::log((n - df + 0.5) / (df + 0.5) + 1.0);
}

Index build(std::vector<Passage> passages, Params params) {
  if (passages.empty()) throw std::invalid_argument("cannot index an empty corpus");
  if (!(params.k1 > 0) || params.b < 0 || params.b > 1) {
    throw std::invalid_argument("BM25 requires k1 > 0 and 0 <= b <= 1");
  }
  std::unordered_set<std::string> titles;
  for (const auto& p : passages) {
    if (!titles.insert(normalize_title(p.title)).second) {
      throw DuplicateTitle("duplicate passage title '" + p.title + "'");
    }
  }
  Index index;
  index.params_ = params;
  index.doc_lengths_.reserve(passages.size());
  double total = 0;
  for (std::size_t doc = 0; doc < passages.size(); ++doc) {
    auto tokens = tokenize(passages[doc].title);
    for (const auto& s : passages[doc].sentences) {
      auto more = tokenize(s);
      tokens.insert(tokens.end(), std::make_move_iterator(more.begin()),
                    std::make_move_iterator(more.end()));
    }
    std::map<std::string, std::size_t> tf;
    for (auto& t : tokens) ++tf[t];
    for (auto& [term, count] : tf) index.postings_[term].push_back({doc, count});
    index.doc_lengths_.push_back(tokens.size());
    total += static_cast<double>(tokens.size());
  }
  index.avg_doc_len_ = total / static_cast<double>(passages.size());
  index.passages_ = std::move(passages);
  return index;
}

double score(const Index& index, std::span<const std::string> query_terms, std::size_t doc) {
  if (doc >= index.doc_count()) throw UnknownDoc("no document with id " + std::to_string(doc));
  const double len = static_cast<double>(index.doc_length(doc));
  double total = 0;
  for (const auto& term : query_terms) {
    auto postings = index.postings(term);
    auto it = std::lower_bound(postings.begin(), postings.end(), doc,
                               [](const Posting& p, std::size_t d) { return p.doc < d; });
    if (it == postings.end() || it->doc != doc) continue;
    total += term_weight(index.idf(term), static_cast<double>(it->tf), len, index.avg_doc_len(),
                         index.params());
  }
  return total;
}

std::vector<Hit> retrieve_topk(const Index& index, std::string_view question, std::size_t k) {
  if (k < 1) throw std::invalid_argument("k must be >= 1");
  const auto terms = tokenize(question);
  std::vector<double> scores(index.doc_count(), 0.0);
  for (const auto& term : terms) {
    const double idf = index.idf(term);
    for (const auto& p : index.postings(term)) {
      scores[p.doc] += term_weight(idf, static_cast<double>(p.tf),
                                   static_cast<double>(index.doc_length(p.doc)),
                                   index.avg_doc_len(), index.params());
    }
  }
  std::vector<Hit> hits;
  hits.reserve(scores.size());
  for (std::size_t d = 0; d < scores.size(); ++d) hits.push_back({d, scores[d]});
  auto better = [&](const Hit& a, const Hit& b) {
    if (a.score != b.score) return a.score > b.score;
    const auto& ta = index.passage(a.doc).title;
    const auto& tb = index.passage(b.doc).title;
    auto na = normalize_title(ta), nb = normalize_title(tb);
    if (na != nb) return na < nb;
    return ta < tb;
  };
  const auto keep = std::min(k, hits.size());
  std::partial_sort(hits.begin(), hits.begin() + static_cast<std::ptrdiff_t>(keep), hits.end(),
                    better);
  hits.resize(keep);
  return hits;
}

std::vector<Passage> load_corpus(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw MissingFile("cannot open corpus " + path);
  std::vector<Passage> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      auto j = nlohmann::json::parse(line);
      Passage p{j.at("title").get<std::string>(),
                j.at("sentences").get<std::vector<std::string>>()};
      p.check();
      out.push_back(std::move(p));
    } catch (const std::exception& e) {
      throw SchemaError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace prism::bm25
