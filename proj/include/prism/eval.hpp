#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "prism/datasets.hpp"
#include "prism/evidence.hpp"

namespace prism::eval {

struct RetrievalScore {
  double precision = 0;
  double recall = 0;
  double f1 = 0;
  std::size_t n_retrieved = 0;
  double false_positive_rate = 0;
};

/// Precision and recall over passages: both sets are projected onto their
/// normalized titles. An empty retrieval scores P = 1 only when gold is also
/// empty.
RetrievalScore passage_prf(const EvidenceSet& retrieved, const EvidenceSet& gold,
                           DatasetName dataset = DatasetName::kInternal);

/// Exact (title, sentence) comparison. Throws UnsupportedDataset for
/// datasets without sentence-level gold.
RetrievalScore fact_prf(const EvidenceSet& retrieved, const EvidenceSet& gold,
                        DatasetName dataset = DatasetName::kInternal);

/// Lowercase, drop punctuation, drop the articles a/an/the, collapse spaces.
std::string normalize_answer(std::string_view text);

int exact_match(std::string_view prediction, std::string_view gold);
double token_f1(std::string_view prediction, std::string_view gold);
/// 1 when either normalized answer contains the other as a contiguous run of
/// tokens, or when both hold the same tokens in any order.
int partial_match(std::string_view prediction, std::string_view gold);

struct AnswerScore {
  std::string prediction;
  int em = 0;
  double f1 = 0;
  int pma = 0;
};

AnswerScore score_answer(std::string_view prediction, std::string_view gold);

/// One evaluated record.
struct EvalRow {
  std::string id;
  std::optional<std::string> qtype;
  std::optional<int> hops;
  RetrievalScore passage;
  std::optional<RetrievalScore> fact;
  std::map<std::string, AnswerScore> answers;  // keyed by condition name
};

struct MeanScore {
  double precision = 0, recall = 0, f1 = 0, false_positive_rate = 0;
  double n_retrieved = 0;  // mean count, not scaled
};

struct MeanAnswer {
  std::size_t n = 0;
  double em = 0, f1 = 0, pma = 0;
};

/// Means over rows. Rates are scaled by 100 to match the usual table
/// convention; full precision is kept.
struct EvalReport {
  std::vector<EvalRow> rows;
  MeanScore passage;
  std::optional<MeanScore> fact;  // set when every row has fact scores
  std::map<std::string, MeanAnswer> answers;
};

/// Throws EmptyInput.
EvalReport aggregate(std::span<const EvalRow> rows);

enum class BreakdownKey { kQType, kHops, kRecallCondition };

struct BreakdownRow {
  std::string label;
  std::size_t count = 0;             // records in the subset
  std::vector<double> percentages;   // one per column
};

struct BreakdownTable {
  std::string title;
  std::vector<std::string> columns;
  std::vector<BreakdownRow> rows;
};

/// Error composition tables. For qtype and hops: the bucket mix of records
/// with passage recall < 1 and of records whose `condition` answer has
/// EM < 1. For the recall condition: the share of EM misses among
/// recall = 1 records and the share of EM hits among recall < 1 records.
/// Missing keys land in an "unknown" bucket.
BreakdownTable breakdown(std::span<const EvalRow> rows, BreakdownKey key,
                         const std::string& condition);

/// Half-up rounding to two decimals.
std::string format_fixed2(double value);

std::string render_summary(const EvalReport& report, std::string_view title);
std::string render_breakdown(const BreakdownTable& table);

}  // namespace prism::eval
