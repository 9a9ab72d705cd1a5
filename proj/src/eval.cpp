#include "prism/eval.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <iomanip>
#include <set>
#include <sstream>

#include "prism/error.hpp"

namespace prism::eval {
namespace {

double harmonic(double p, double r) { return (p + r) > 0 ? 2 * p * r / (p + r) : 0.0; }

RetrievalScore from_counts(std::size_t hits, std::size_t retrieved, std::size_t gold) {
  RetrievalScore s;
  s.n_retrieved = retrieved;
  if (retrieved == 0) {
    s.precision = gold == 0 ? 1.0 : 0.0;
    s.false_positive_rate = 0.0;
  } else {
    s.precision = static_cast<double>(hits) / static_cast<double>(retrieved);
    s.false_positive_rate =
        static_cast<double>(retrieved - hits) / static_cast<double>(retrieved);
  }
  s.recall = gold == 0 ? 1.0 : static_cast<double>(hits) / static_cast<double>(gold);
  s.f1 = harmonic(s.precision, s.recall);
  return s;
}

std::set<std::string> titles(const EvidenceSet& s) {
  std::set<std::string> out;
  for (const auto& r : s) out.insert(normalize_title(r.title));
  return out;
}

std::vector<std::string> split_ws(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

bool contains_run(const std::vector<std::string>& hay, const std::vector<std::string>& needle) {
  if (needle.empty() || needle.size() > hay.size()) return false;
  return std::search(hay.begin(), hay.end(), needle.begin(), needle.end()) != hay.end();
}

std::string pct(double v) { return format_fixed2(v); }

}  // namespace

RetrievalScore passage_prf(const EvidenceSet& retrieved, const EvidenceSet& gold,
                           DatasetName /*dataset*/) {
  const auto r = titles(retrieved);
  const auto g = titles(gold);
  std::size_t hits = 0;
  for (const auto& t : r) hits += g.count(t);
  return from_counts(hits, r.size(), g.size());
}

RetrievalScore fact_prf(const EvidenceSet& retrieved, const EvidenceSet& gold,
                        DatasetName dataset) {
  if (!has_fact_level(dataset)) {
    throw UnsupportedDataset("fact-level metrics are undefined for " +
                             std::string(to_string(dataset)));
  }
  std::size_t hits = 0;
  for (const auto& ref : retrieved) hits += gold.contains(ref) ? 1 : 0;
  return from_counts(hits, retrieved.size(), gold.size());
}

std::string normalize_answer(std::string_view text) {
  std::string lowered;
  for (char c : text) {
    auto u = static_cast<unsigned char>(c);
    if (std::ispunct(u)) continue;
    lowered += static_cast<char>(std::tolower(u));
  }
  std::string out;
  for (const auto& tok : split_ws(lowered)) {
    if (tok == "a" || tok == "an" || tok == "the") continue;
    if (!out.empty()) out += ' ';
    out += tok;
  }
  return out;
}

int exact_match(std::string_view prediction, std::string_view gold) {
  return normalize_answer(prediction) == normalize_answer(gold) ? 1 : 0;
}

double token_f1(std::string_view prediction, std::string_view gold) {
  auto p = split_ws(normalize_answer(prediction));
  auto g = split_ws(normalize_answer(gold));
  if (p.empty() && g.empty()) return 1.0;
  if (p.empty() || g.empty()) return 0.0;
  std::sort(p.begin(), p.end());
  std::sort(g.begin(), g.end());
  std::vector<std::string> common;
  std::set_intersection(p.begin(), p.end(), g.begin(), g.end(), std::back_inserter(common));
  if (common.empty()) return 0.0;
  const double precision = static_cast<double>(common.size()) / static_cast<double>(p.size());
  const double recall = static_cast<double>(common.size()) / static_cast<double>(g.size());
  return harmonic(precision, recall);
}

int partial_match(std::string_view prediction, std::string_view gold) {
  const auto p = split_ws(normalize_answer(prediction));
  const auto g = split_ws(normalize_answer(gold));
  if (p.empty() || g.empty()) return p.empty() && g.empty() ? 1 : 0;
  if (contains_run(p, g) || contains_run(g, p)) return 1;
  // Reordered answers with identical tokens count as partial matches too.
  return token_f1(prediction, gold) == 1.0 ? 1 : 0;
}

AnswerScore score_answer(std::string_view prediction, std::string_view gold) {
  return {std::string(prediction), exact_match(prediction, gold), token_f1(prediction, gold),
          partial_match(prediction, gold)};
}

EvalReport aggregate(std::span<const EvalRow> rows) {
  if (rows.empty()) throw EmptyInput("cannot aggregate zero rows");
  EvalReport report;
  report.rows.assign(rows.begin(), rows.end());
  const double n = static_cast<double>(rows.size());
  bool all_fact = true;
  MeanScore fact;
  for (const auto& row : rows) {
    report.passage.precision += row.passage.precision;
    report.passage.recall += row.passage.recall;
    report.passage.f1 += row.passage.f1;
    report.passage.false_positive_rate += row.passage.false_positive_rate;
    report.passage.n_retrieved += static_cast<double>(row.passage.n_retrieved);
    if (row.fact) {
      fact.precision += row.fact->precision;
      fact.recall += row.fact->recall;
      fact.f1 += row.fact->f1;
      fact.false_positive_rate += row.fact->false_positive_rate;
      fact.n_retrieved += static_cast<double>(row.fact->n_retrieved);
    } else {
      all_fact = false;
    }
    for (const auto& [cond, a] : row.answers) {
      auto& m = report.answers[cond];
      ++m.n;
      m.em += a.em;
      m.f1 += a.f1;
      m.pma += a.pma;
    }
  }
  auto finish = [n](MeanScore& m) {
    m.precision = 100 * m.precision / n;
    m.recall = 100 * m.recall / n;
    m.f1 = 100 * m.f1 / n;
    m.false_positive_rate = 100 * m.false_positive_rate / n;
    m.n_retrieved = m.n_retrieved / n;
  };
  finish(report.passage);
  if (all_fact) {
    finish(fact);
    report.fact = fact;
  }
  for (auto& [cond, m] : report.answers) {
    const double k = static_cast<double>(m.n);
    m.em = 100 * m.em / k;
    m.f1 = 100 * m.f1 / k;
    m.pma = 100 * m.pma / k;
  }
  return report;
}

BreakdownTable breakdown(std::span<const EvalRow> rows, BreakdownKey key,
                         const std::string& condition) {
  auto missed_answer = [&](const EvalRow& r) -> std::optional<bool> {
    auto it = r.answers.find(condition);
    if (it == r.answers.end()) return std::nullopt;
    return it->second.em < 1;
  };
  auto full_recall = [](const EvalRow& r) { return r.passage.recall >= 1.0; };

  BreakdownTable table;
  if (key == BreakdownKey::kRecallCondition) {
    table.title = "QA vs retrieval recall (" + condition + ")";
    table.columns = {"QA Mismatch @ Recall = 1.0", "QA Match @ Recall < 1.0"};
    std::size_t full = 0, full_miss = 0, partial = 0, partial_hit = 0;
    for (const auto& r : rows) {
      auto miss = missed_answer(r);
      if (!miss) continue;
      if (full_recall(r)) {
        ++full;
        full_miss += *miss ? 1 : 0;
      } else {
        ++partial;
        partial_hit += *miss ? 0 : 1;
      }
    }
    auto share = [](std::size_t a, std::size_t b) {
      return b == 0 ? 0.0 : 100.0 * static_cast<double>(a) / static_cast<double>(b);
    };
    table.rows.push_back({"all", full + partial, {share(full_miss, full), share(partial_hit, partial)}});
    return table;
  }

  auto bucket = [&](const EvalRow& r) -> std::string {
    if (key == BreakdownKey::kQType) return r.qtype.value_or("unknown");
    return r.hops ? std::to_string(*r.hops) + "-hop" : std::string("unknown");
  };
  table.title = key == BreakdownKey::kQType ? "Error composition by question type"
                                            : "Error composition by hop count";
  std::set<std::string> labels;
  for (const auto& r : rows) labels.insert(bucket(r));
  table.columns.assign(labels.begin(), labels.end());

  auto tally = [&](std::string label, auto&& in_subset) {
    BreakdownRow row{std::move(label), 0, std::vector<double>(table.columns.size(), 0.0)};
    for (const auto& r : rows) {
      if (!in_subset(r)) continue;
      ++row.count;
      auto pos = std::find(table.columns.begin(), table.columns.end(), bucket(r));
      row.percentages[static_cast<std::size_t>(pos - table.columns.begin())] += 1;
    }
    for (auto& v : row.percentages) {
      v = row.count == 0 ? 0.0 : 100.0 * v / static_cast<double>(row.count);
    }
    table.rows.push_back(std::move(row));
  };
  tally("Retrieval recall < 1.0", [&](const EvalRow& r) { return !full_recall(r); });
  tally("QA match < 1.0 (" + condition + ")", [&](const EvalRow& r) {
    auto miss = missed_answer(r);
    return miss && *miss;
  });
  return table;
}

std::string format_fixed2(double value) {
  const double rounded = std::floor(value * 100.0 + 0.5 + 1e-9) / 100.0;
  std::ostringstream os;
  os << std::fixed << std::setprecision(2) << (rounded == 0.0 ? 0.0 : rounded);
  return os.str();
}

std::string render_summary(const EvalReport& report, std::string_view title) {
  std::ostringstream os;
  os << title << " (n=" << report.rows.size() << ")\n";
  os << std::left << std::setw(14) << "Level" << std::right << std::setw(10) << "P"
     << std::setw(10) << "R" << std::setw(10) << "F1" << std::setw(10) << "FPR" << std::setw(10)
     << "#Pssg" << "\n";
  auto line = [&](const char* name, const MeanScore& m) {
    os << std::left << std::setw(14) << name << std::right << std::setw(10) << pct(m.precision)
       << std::setw(10) << pct(m.recall) << std::setw(10) << pct(m.f1) << std::setw(10)
       << pct(m.false_positive_rate) << std::setw(10) << pct(m.n_retrieved) << "\n";
  };
  line("passage", report.passage);
  if (report.fact) line("fact", *report.fact);
  if (!report.answers.empty()) {
    os << "\n"
       << std::left << std::setw(14) << "Condition" << std::right << std::setw(8) << "n"
       << std::setw(10) << "EM" << std::setw(10) << "F1" << std::setw(10) << "PMA" << "\n";
    for (const auto& [cond, m] : report.answers) {
      os << std::left << std::setw(14) << cond << std::right << std::setw(8) << m.n
         << std::setw(10) << pct(m.em) << std::setw(10) << pct(m.f1) << std::setw(10)
         << pct(m.pma) << "\n";
    }
  }
  return os.str();
}

std::string render_breakdown(const BreakdownTable& table) {
  std::ostringstream os;
  os << table.title << "\n";
  std::size_t label_w = 8;
  for (const auto& r : table.rows) label_w = std::max(label_w, r.label.size() + 2);
  os << std::left << std::setw(static_cast<int>(label_w)) << "Subset" << std::right
     << std::setw(6) << "n";
  for (const auto& c : table.columns) os << "  " << c << " (%)";
  os << "\n";
  for (const auto& r : table.rows) {
    os << std::left << std::setw(static_cast<int>(label_w)) << r.label << std::right
       << std::setw(6) << r.count;
    for (std::size_t i = 0; i < r.percentages.size(); ++i) {
      os << "  " << std::setw(static_cast<int>(table.columns[i].size() + 4))
         << pct(r.percentages[i]);
    }
    os << "\n";
  }
  return os.str();
}

}  // namespace prism::eval
