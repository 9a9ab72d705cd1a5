#include "prism/datasets.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "prism/error.hpp"
#include "prism/serialize.hpp"

namespace prism {
namespace {

[[noreturn]] void bad(const std::string& where, const std::string& what) {
  throw SchemaError(where + ": " + what);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingFile("cannot open dataset file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// A whole-file JSON array, or one JSON value per line.
std::vector<ojson> read_items(const std::string& path) {
  const std::string text = read_file(path);
  std::vector<ojson> items;
  auto first = text.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return items;
  if (text[first] == '[') {
    ojson arr;
    try {
      arr = ojson::parse(text);
    } catch (const nlohmann::json::exception& e) {
      throw SchemaError(path + ": " + e.what());
    }
    for (auto& it : arr) items.push_back(std::move(it));
    return items;
  }
  std::istringstream lines(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(lines, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      items.push_back(ojson::parse(line));
    } catch (const nlohmann::json::exception& e) {
      throw SchemaError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return items;
}

const ojson& need(const ojson& j, const char* key, const std::string& where) {
  if (!j.is_object()) bad(where, "expected object");
  auto it = j.find(key);
  if (it == j.end()) bad(where + "." + key, "missing");
  return *it;
}

std::string need_str(const ojson& j, const char* key, const std::string& where) {
  const auto& v = need(j, key, where);
  if (!v.is_string()) bad(where + "." + key, "expected string");
  return v.get<std::string>();
}

// Turns the first broken QARecord invariant into a SchemaError.
void check_record(const QARecord& r, const std::string& where) {
  try {
    r.check();
  } catch (const std::invalid_argument& e) {
    bad(where, e.what());
  }
}

// HotpotQA and 2WikiMultiHopQA share the same layout.
QARecord from_wiki_style(const ojson& j, const std::string& where) {
  QARecord r;
  r.id = need_str(j, "_id", where);
  r.question = need_str(j, "question", where);
  r.gold_answer = need_str(j, "answer", where);
  if (auto it = j.find("type"); it != j.end() && it->is_string()) r.qtype = it->get<std::string>();
  const auto& ctx = need(j, "context", where);
  if (!ctx.is_array()) bad(where + ".context", "expected array");
  for (std::size_t i = 0; i < ctx.size(); ++i) {
    const auto w = where + ".context[" + std::to_string(i) + "]";
    const auto& item = ctx[i];
    if (!item.is_array() || item.size() != 2 || !item[0].is_string() || !item[1].is_array()) {
      bad(w, "expected [title, [sentence, ...]]");
    }
    Passage p{item[0].get<std::string>(), {}};
    for (std::size_t s = 0; s < item[1].size(); ++s) {
      if (!item[1][s].is_string()) bad(w + "[1][" + std::to_string(s) + "]", "expected string");
      p.sentences.push_back(item[1][s].get<std::string>());
    }
    try {
      p.check();
    } catch (const std::invalid_argument& e) {
      bad(w, e.what());
    }
    r.context.push_back(std::move(p));
  }
  const auto& sf = need(j, "supporting_facts", where);
  if (!sf.is_array()) bad(where + ".supporting_facts", "expected array");
  for (std::size_t i = 0; i < sf.size(); ++i) {
    const auto w = where + ".supporting_facts[" + std::to_string(i) + "]";
    const auto& f = sf[i];
    if (!f.is_array() || f.size() != 2 || !f[0].is_string() || !f[1].is_number_unsigned()) {
      bad(w, "expected [title, sentence index]");
    }
    EvidenceRef ref{f[0].get<std::string>(), f[1].get<std::size_t>()};
    const Passage* p = find_passage(r.context, ref.title);
    if (p == nullptr) bad(w, "unknown title '" + ref.title + "'");
    if (ref.sentence_index >= p->sentences.size()) bad(w, "index out of range");
    r.gold_supporting.insert({p->title, ref.sentence_index});
  }
  check_record(r, where);
  return r;
}

std::optional<QARecord> from_musique(const ojson& j, const std::string& where) {
  if (auto it = j.find("answerable"); it != j.end() && it->is_boolean() && !it->get<bool>()) {
    return std::nullopt;
  }
  QARecord r;
  r.id = need_str(j, "id", where);
  r.question = need_str(j, "question", where);
  r.gold_answer = need_str(j, "answer", where);
  if (auto cut = r.id.find("__"); cut != std::string::npos) r.qtype = r.id.substr(0, cut);
  if (auto it = j.find("question_decomposition"); it != j.end() && it->is_array()) {
    r.hops = static_cast<int>(it->size());
  }
  const auto& paras = need(j, "paragraphs", where);
  if (!paras.is_array()) bad(where + ".paragraphs", "expected array");
  std::set<std::string> seen;
  for (std::size_t i = 0; i < paras.size(); ++i) {
    const auto w = where + ".paragraphs[" + std::to_string(i) + "]";
    std::string title = need_str(paras[i], "title", w);
    std::string text = need_str(paras[i], "paragraph_text", w);
    if (!seen.insert(normalize_title(title)).second) {
      auto idx = paras[i].contains("idx") ? paras[i]["idx"].dump() : std::to_string(i);
      title += " (para " + idx + ")";
      seen.insert(normalize_title(title));
    }
    Passage p{title, {text}};
    try {
      p.check();
    } catch (const std::invalid_argument& e) {
      bad(w, e.what());
    }
    const auto& sup = need(paras[i], "is_supporting", w);
    if (!sup.is_boolean()) bad(w + ".is_supporting", "expected boolean");
    if (sup.get<bool>()) r.gold_supporting.insert({title, 0});
    r.context.push_back(std::move(p));
  }
  check_record(r, where);
  return r;
}

std::optional<QARecord> from_multihoprag(const ojson& j, std::size_t index,
                                         const std::string& where) {
  QARecord r;
  r.id = "mhrag-" + std::to_string(index);
  r.question = need_str(j, "query", where);
  r.gold_answer = need_str(j, "answer", where);
  if (auto it = j.find("question_type"); it != j.end() && it->is_string()) {
    std::string t = it->get<std::string>();
    if (auto cut = t.find("_query"); cut != std::string::npos) t.resize(cut);
    r.qtype = t;
  }
  const auto& ev = need(j, "evidence_list", where);
  if (!ev.is_array()) bad(where + ".evidence_list", "expected array");
  if (ev.empty()) return std::nullopt;
  for (std::size_t i = 0; i < ev.size(); ++i) {
    const auto w = where + ".evidence_list[" + std::to_string(i) + "]";
    std::string title = need_str(ev[i], "title", w);
    std::string fact = need_str(ev[i], "fact", w);
    auto it = std::find_if(r.context.begin(), r.context.end(), [&](const Passage& p) {
      return normalize_title(p.title) == normalize_title(title);
    });
    if (it == r.context.end()) {
      r.context.push_back({title, {fact}});
      r.gold_supporting.insert({title, 0});
    } else {
      it->sentences.push_back(fact);
    }
  }
  for (std::size_t i = 0; i < r.context.size(); ++i) {
    try {
      r.context[i].check();
    } catch (const std::invalid_argument& e) {
      bad(where + ".evidence_list", e.what());
    }
  }
  check_record(r, where);
  return r;
}

// Uniform draw in [0, bound) from raw engine output, so results do not
// depend on the standard library's distribution implementations.
std::uint64_t bounded(std::mt19937_64& rng, std::uint64_t bound) {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % bound;
}

}  // namespace

std::string_view to_string(DatasetName name) {
  switch (name) {
    case DatasetName::kHotpotQA: return "hotpotqa";
    case DatasetName::k2Wiki: return "2wiki";
    case DatasetName::kMusique: return "musique";
    case DatasetName::kMultiHopRag: return "multihoprag";
    case DatasetName::kInternal: return "internal";
  }
  return "internal";
}

DatasetName dataset_from_string(std::string_view name) {
  for (auto n : {DatasetName::kHotpotQA, DatasetName::k2Wiki, DatasetName::kMusique,
                 DatasetName::kMultiHopRag, DatasetName::kInternal}) {
    if (to_string(n) == name) return n;
  }
  throw ConfigError("unknown dataset '" + std::string(name) +
                    "' (expected hotpotqa, 2wiki, musique, multihoprag or internal)");
}

bool has_fact_level(DatasetName name) {
  return name == DatasetName::kHotpotQA || name == DatasetName::k2Wiki ||
         name == DatasetName::kInternal;
}

std::vector<QARecord> load(const DatasetSpec& spec, LoadStats* stats) {
  LoadStats local;
  LoadStats& st = stats ? *stats : local;
  st = {};
  const auto items = read_items(spec.path);
  std::vector<QARecord> records;
  for (std::size_t i = 0; i < items.size(); ++i) {
    const std::string where = spec.path + "[" + std::to_string(i) + "]";
    try {
      std::optional<QARecord> r;
      switch (spec.name) {
        case DatasetName::kHotpotQA:
        case DatasetName::k2Wiki: r = from_wiki_style(items[i], where); break;
        case DatasetName::kMusique:
          r = from_musique(items[i], where);
          if (!r) ++st.skipped_unanswerable;
          break;
        case DatasetName::kMultiHopRag:
          r = from_multihoprag(items[i], i, where);
          if (!r) ++st.skipped_no_evidence;
          break;
        case DatasetName::kInternal: r = record_from_json(items[i], where); break;
      }
      if (r) records.push_back(std::move(*r));
    } catch (const SchemaError&) {
      if (!spec.skip_invalid) throw;
      ++st.skipped_invalid;
    }
  }
  if (spec.sample) records = sample(records, spec.sample->n, spec.sample->seed);
  st.loaded = records.size();
  return records;
}

std::vector<std::size_t> sample_indices(std::size_t size, std::size_t n, std::uint64_t seed) {
  if (n > size) {
    throw SampleTooLarge("cannot sample " + std::to_string(n) + " of " + std::to_string(size) +
                         " records");
  }
  std::vector<std::size_t> idx(size);
  for (std::size_t i = 0; i < size; ++i) idx[i] = i;
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < n; ++i) {
    auto j = i + static_cast<std::size_t>(bounded(rng, size - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(n);
  std::sort(idx.begin(), idx.end());
  return idx;
}

std::vector<QARecord> sample(std::span<const QARecord> records, std::size_t n,
                             std::uint64_t seed) {
  std::vector<QARecord> out;
  out.reserve(n);
  for (auto i : sample_indices(records.size(), n, seed)) out.push_back(records[i]);
  return out;
}

void save_records(const std::string& path, std::span<const QARecord> records) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw MissingFile("cannot write " + path);
  for (const auto& r : records) out << to_json(r).dump() << '\n';
}

std::vector<QARecord> make_fixture_suite(std::size_t n, std::uint64_t seed) {
  static const std::vector<std::string> kAdj = {"Silent", "Crimson", "Last", "Hidden", "Golden",
                                                "Broken", "Northern", "Quiet", "Iron", "Wild"};
  static const std::vector<std::string> kNoun = {"Harbor", "Mayor", "River", "Garden", "Frontier",
                                                 "Letter", "Orchard", "Bridge", "Lantern",
                                                 "Canyon"};
  static const std::vector<std::string> kFirst = {"Marta", "Tomas", "Elin", "Anders", "Lucia",
                                                  "Pavel", "Ines", "Oskar", "Rosa", "Henrik"};
  static const std::vector<std::string> kLast = {"Vell", "Arnault", "Kessler", "Moraes", "Lindqvist",
                                                 "Okafor", "Brandt", "Castell", "Noor", "Halloran"};
  static const std::vector<std::string> kTown = {"Eastmere", "Valdoro", "Kirkholm", "Santa Brisa",
                                                 "Oldcastle", "Marrow Bay", "Tessaly", "Grunwald",
                                                 "Port Alden", "Lisvik"};
  static const std::vector<std::string> kCountry = {"Norway", "Portugal", "Chile", "Poland",
                                                    "Ireland", "Estonia"};
  static const std::vector<std::string> kGenre = {"drama", "western", "comedy", "thriller",
                                                  "musical"};

  std::mt19937_64 rng(seed);
  auto pick = [&](const std::vector<std::string>& v) { return v[bounded(rng, v.size())]; };
  auto year = [&] { return 1920 + static_cast<int>(bounded(rng, 80)); };

  struct Film {
    std::string title, director, town, country, genre;
    int released, director_born, director_died;
  };
  std::set<std::string> used_titles, used_people, used_towns;
  auto fresh_film = [&] {
    Film f;
    do {
      f.title = "The " + pick(kAdj) + " " + pick(kNoun);
    } while (!used_titles.insert(f.title).second && used_titles.size() < 100);
    do {
      f.director = pick(kFirst) + " " + pick(kLast);
    } while (!used_people.insert(f.director).second && used_people.size() < 100);
    f.town = pick(kTown);
    f.country = pick(kCountry);
    f.genre = pick(kGenre);
    f.released = year();
    f.director_born = f.released - 25 - static_cast<int>(bounded(rng, 20));
    f.director_died = f.released + 5 + static_cast<int>(bounded(rng, 40));
    return f;
  };

  auto film_passage = [&](const Film& f, bool intro) {
    Passage p{f.title, {}};
    if (intro) p.sentences.push_back(f.title + " is remembered for its long production.");
    p.sentences.push_back(f.title + " is a " + std::to_string(f.released) + " " + f.genre +
                          " film directed by " + f.director + ".");
    p.sentences.push_back("The film was shot on location over a single summer.");
    return p;
  };
  auto director_passage = [&](const Film& f) {
    return Passage{f.director,
                   {f.director + " (" + std::to_string(f.director_born) + " - " +
                        std::to_string(f.director_died) + ") was a film director.",
                    f.director + " was born in " + f.town + ".",
                    "Critics praised the director's use of natural light."}};
  };
  auto town_passage = [&](const Film& f) {
    return Passage{f.town,
                   {f.town + " is a small town with a busy harbor.",
                    f.town + " is located in " + f.country + "."}};
  };

  std::vector<QARecord> out;
  for (std::size_t i = 0; i < n; ++i) {
    used_titles.clear();
    used_people.clear();
    QARecord r;
    r.id = "fixture-" + std::to_string(i);
    const bool intro = bounded(rng, 2) == 1;
    const std::size_t film_sent = intro ? 1 : 0;
    Film a = fresh_film();
    Film b = fresh_film();
    switch (i % 3) {
      case 0:  // bridge
        r.qtype = "bridge";
        r.hops = 2;
        r.question = "Where was the director of " + a.title + " born?";
        r.gold_answer = a.town;
        r.context = {film_passage(a, intro), director_passage(a)};
        r.gold_supporting = {{a.title, film_sent}, {a.director, 1}};
        break;
      case 1: {  // comparison
        r.qtype = "comparison";
        r.hops = 2;
        if (a.released == b.released) ++b.released;
        r.question = "Which film came out first, " + a.title + " or " + b.title + "?";
        r.gold_answer = a.released < b.released ? a.title : b.title;
        r.context = {film_passage(a, intro), film_passage(b, false)};
        r.gold_supporting = {{a.title, film_sent}, {b.title, 0}};
        break;
      }
      default:  // three-hop bridge
        r.qtype = "compositional";
        r.hops = 3;
        r.question = "In which country is the birthplace of the director of " + a.title + "?";
        r.gold_answer = a.country;
        r.context = {film_passage(a, intro), director_passage(a), town_passage(a)};
        r.gold_supporting = {{a.title, film_sent}, {a.director, 1}, {a.town, 1}};
        break;
    }
    // Distractors share vocabulary with the question but not its entities.
    const std::size_t distractors = 4 + bounded(rng, 3);
    for (std::size_t d = 0; d < distractors; ++d) {
      Film x = fresh_film();
      Passage p = (d % 2 == 0) ? film_passage(x, false) : director_passage(x);
      if (find_passage(r.context, p.title) != nullptr) continue;
      r.context.push_back(std::move(p));
    }
    // Deterministic shuffle of the pool.
    for (std::size_t k = r.context.size(); k > 1; --k) {
      std::swap(r.context[k - 1], r.context[bounded(rng, k)]);
    }
    r.check();
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace prism
