#include "prism/app.hpp"

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <set>
#include <ostream>
#include <sstream>

#include "prism/bm25.hpp"
#include "prism/error.hpp"
#include "prism/eval.hpp"
#include "prism/llm/backends.hpp"

namespace prism::app {
namespace {

namespace fs = std::filesystem;

std::string now_iso8601() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

ojson read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw MissingFile("cannot open " + path);
  try {
    return ojson::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(path + ": " + e.what());
  }
}

void write_json_file(const std::string& path, const ojson& j) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw MissingFile("cannot write " + path);
  out << j.dump(2) << '\n';
}

std::string manifest_path_for(const std::string& results_path) {
  return (fs::path(results_path).parent_path() / kManifestFile).string();
}

ojson templates_json(const AgentConfig& ac) {
  ojson out = ojson::object();
  for (const auto* t : {&ac.analyzer, &ac.selector, &ac.adder, &ac.answer}) {
    out[t->name] = {{"hash", fnv1a_hex(t->body)}, {"body", t->body}};
  }
  return out;
}

void apply_templates(AgentConfig& ac, const ojson& templates) {
  auto set = [&](llm::PromptTemplate& t) {
    if (auto it = templates.find(t.name); it != templates.end() && it->contains("body")) {
      t.body = (*it)["body"].get<std::string>();
    }
  };
  set(ac.analyzer);
  set(ac.selector);
  set(ac.adder);
  set(ac.answer);
}

ojson line_json(const PipelineResult& r, const QARecord& rec, std::span<const Passage> pool) {
  ojson j = to_json(r);
  j["question"] = rec.question;
  ojson cands = ojson::array();
  for (const auto& p : pool) cands.push_back(to_json(p));
  j["candidates"] = std::move(cands);
  return j;
}

ojson score_json(const eval::RetrievalScore& s) {
  return {{"precision", s.precision},
          {"recall", s.recall},
          {"f1", s.f1},
          {"n_retrieved", s.n_retrieved},
          {"false_positive_rate", s.false_positive_rate}};
}

ojson row_json(const eval::EvalRow& row) {
  ojson answers = ojson::object();
  for (const auto& [cond, a] : row.answers) {
    answers[cond] = {{"prediction", a.prediction}, {"em", a.em}, {"f1", a.f1}, {"pma", a.pma}};
  }
  return {{"id", row.id},
          {"qtype", row.qtype ? ojson(*row.qtype) : ojson(nullptr)},
          {"hops", row.hops ? ojson(*row.hops) : ojson(nullptr)},
          {"passage", score_json(row.passage)},
          {"fact", row.fact ? score_json(*row.fact) : ojson(nullptr)},
          {"answers", answers}};
}

std::string replace_all(std::string s, std::string_view from, std::string_view to) {
  for (auto pos = s.find(from); pos != std::string::npos; pos = s.find(from, pos + to.size())) {
    s.replace(pos, from.size(), to);
  }
  return s;
}

void erase_key_recursive(ojson& j, const std::string& key) {
  if (j.is_object()) {
    j.erase(key);
    for (auto& [k, v] : j.items()) erase_key_recursive(v, key);
  } else if (j.is_array()) {
    for (auto& v : j) erase_key_recursive(v, key);
  }
}

}  // namespace

BackendChoice BackendChoice::parse(const std::string& text) {
  if (text == "live") return {Kind::kLive, {}};
  if (text == "oracle") return {Kind::kOracle, {}};
  if (text.rfind("mock:", 0) == 0 && text.size() > 5) return {Kind::kMock, text.substr(5)};
  if (text == "mock") throw ConfigError("mock backend requires a script path (mock:<path>)");
  throw ConfigError("unknown backend '" + text + "' (expected live, oracle or mock:<path>)");
}

std::string BackendChoice::to_string() const {
  switch (kind) {
    case Kind::kLive: return "live";
    case Kind::kOracle: return "oracle";
    case Kind::kMock: return "mock:" + script_path;
  }
  return "oracle";
}

PoolPolicy PoolPolicy::parse(const std::string& text, std::string corpus_path) {
  PoolPolicy p;
  p.corpus_path = std::move(corpus_path);
  if (text == "record-context") return p;
  if (text.rfind("bm25-topk", 0) == 0) {
    p.kind = Kind::kBm25TopK;
    if (text.size() > 10 && text[9] == ':') {
      try {
        long k = std::stol(text.substr(10));
        if (k < 1) throw ConfigError("bm25-topk k must be >= 1");
        p.k = static_cast<std::size_t>(k);
      } catch (const std::logic_error&) {
        throw ConfigError("bad pool '" + text + "'");
      }
    } else if (text != "bm25-topk") {
      throw ConfigError("bad pool '" + text + "'");
    }
    return p;
  }
  throw ConfigError("unknown pool '" + text + "' (expected record-context or bm25-topk:<k>)");
}

std::string PoolPolicy::to_string() const {
  return kind == Kind::kRecordContext ? "record-context" : "bm25-topk:" + std::to_string(k);
}

void RunConfig::check() const {
  pipeline.check();
  if (dataset.path.empty()) throw ConfigError("no dataset path given");
  if (!fs::exists(dataset.path)) throw ConfigError("dataset file not found: " + dataset.path);
  if (backend.kind == BackendChoice::Kind::kMock && backend.script_path.empty()) {
    throw ConfigError("mock backend requires a script path");
  }
  if (pool.kind == PoolPolicy::Kind::kBm25TopK && pool.corpus_path.empty()) {
    throw ConfigError("bm25-topk pool requires a corpus path");
  }
  if (parallelism < 1) throw ConfigError("parallelism must be >= 1");
  if (method != "prism" && method != "oner") throw ConfigError("unknown method '" + method + "'");
  if (oner_k < 1) throw ConfigError("oner k must be >= 1");
  for (const auto& [name, path] : template_paths) {
    if (name != "analyzer" && name != "selector" && name != "adder" && name != "answer") {
      throw ConfigError("unknown template '" + name + "'");
    }
    if (!fs::exists(path)) throw ConfigError("template file not found: " + path);
  }
}

ojson to_json(const RunConfig& cfg) {
  ojson sample = cfg.dataset.sample
                     ? ojson{{"n", cfg.dataset.sample->n}, {"seed", cfg.dataset.sample->seed}}
                     : ojson(nullptr);
  return {{"dataset",
           {{"name", std::string(to_string(cfg.dataset.name))},
            {"path", cfg.dataset.path},
            {"sample", sample},
            {"skip_invalid", cfg.dataset.skip_invalid}}},
          {"pipeline",
           {{"max_iterations", cfg.pipeline.max_iterations},
            {"use_analyzer", cfg.pipeline.use_analyzer},
            {"use_loop", cfg.pipeline.use_loop},
            {"early_stop", cfg.pipeline.early_stop},
            {"answer_mode", cfg.pipeline.answer_mode
                                ? ojson(std::string(to_string(*cfg.pipeline.answer_mode)))
                                : ojson("none")}}},
          {"backend", cfg.backend.to_string()},
          {"model", cfg.model},
          {"temperature", cfg.temperature},
          {"max_tokens", cfg.max_tokens},
          {"pool", cfg.pool.to_string()},
          {"corpus", cfg.pool.corpus_path},
          {"parallelism", cfg.parallelism},
          {"out_dir", cfg.out_dir},
          {"seed", cfg.seed},
          {"method", cfg.method},
          {"oner_k", cfg.oner_k},
          {"template_paths", cfg.template_paths}};
}

RunConfig run_config_from_json(const ojson& j) {
  try {
    RunConfig cfg;
    const auto& ds = j.at("dataset");
    cfg.dataset.name = dataset_from_string(ds.at("name").get<std::string>());
    cfg.dataset.path = ds.at("path").get<std::string>();
    if (ds.contains("sample") && !ds["sample"].is_null()) {
      cfg.dataset.sample = SampleSpec{ds["sample"].at("n").get<std::size_t>(),
                                      ds["sample"].at("seed").get<std::uint64_t>()};
    }
    cfg.dataset.skip_invalid = ds.value("skip_invalid", false);
    const auto& pl = j.at("pipeline");
    cfg.pipeline.max_iterations = pl.at("max_iterations").get<int>();
    cfg.pipeline.use_analyzer = pl.at("use_analyzer").get<bool>();
    cfg.pipeline.use_loop = pl.at("use_loop").get<bool>();
    cfg.pipeline.early_stop = pl.at("early_stop").get<bool>();
    const auto mode = pl.at("answer_mode").get<std::string>();
    cfg.pipeline.answer_mode =
        mode == "none" ? std::nullopt : std::optional(answer_mode_from_string(mode));
    cfg.backend = BackendChoice::parse(j.at("backend").get<std::string>());
    cfg.model = j.at("model").get<std::string>();
    cfg.temperature = j.value("temperature", 0.0);
    cfg.max_tokens = j.value("max_tokens", 1024);
    cfg.pool = PoolPolicy::parse(j.at("pool").get<std::string>(), j.value("corpus", ""));
    cfg.parallelism = j.value("parallelism", 1);
    cfg.out_dir = j.value("out_dir", "");
    cfg.seed = j.value("seed", std::uint64_t{0});
    cfg.method = j.value("method", "prism");
    cfg.oner_k = j.value("oner_k", std::size_t{5});
    if (j.contains("template_paths")) {
      cfg.template_paths = j["template_paths"].get<std::map<std::string, std::string>>();
    }
    return cfg;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("manifest config: ") + e.what());
  }
}

std::string fnv1a_hex(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

std::unique_ptr<llm::Backend> make_backend(const BackendChoice& choice,
                                           std::span<const QARecord> records, std::ostream& log) {
  switch (choice.kind) {
    case BackendChoice::Kind::kLive: {
      auto cfg = llm::OpenAIConfig::from_env();
      log << "live backend: " << cfg.base_url << "\n";
      return std::make_unique<llm::OpenAIBackend>(std::move(cfg));
    }
    case BackendChoice::Kind::kMock:
      return std::make_unique<llm::ScriptedBackend>(llm::load_script(choice.script_path));
    case BackendChoice::Kind::kOracle: return std::make_unique<llm::OracleBackend>(records);
  }
  throw ConfigError("unknown backend");
}

AgentConfig make_agent_config(const RunConfig& cfg, llm::Backend& backend) {
  AgentConfig ac{.backend = backend};
  ac.model = cfg.model;
  ac.temperature = cfg.temperature;
  ac.max_tokens = cfg.max_tokens;
  for (const auto& [name, path] : cfg.template_paths) {
    auto t = llm::load_template(name, path);
    if (name == "analyzer") ac.analyzer = t;
    else if (name == "selector") ac.selector = t;
    else if (name == "adder") ac.adder = t;
    else if (name == "answer") ac.answer = t;
  }
  return ac;
}

PoolFn make_pool(const PoolPolicy& policy) {
  if (policy.kind == PoolPolicy::Kind::kRecordContext) return record_context_pool;
  auto index = std::make_shared<const bm25::Index>(bm25::build(bm25::load_corpus(policy.corpus_path)));
  const auto k = policy.k;
  return [index, k](const QARecord& rec) {
    std::vector<Passage> out;
    for (const auto& hit : bm25::retrieve_topk(*index, rec.question, k)) {
      out.push_back(index->passage(hit.doc));
    }
    return out;
  };
}

int cmd_run(const RunConfig& cfg_in, std::ostream& out, std::ostream& err) {
  RunConfig cfg = cfg_in;
  std::vector<QARecord> records;
  LoadStats stats;
  PoolFn pool;
  std::unique_ptr<llm::Backend> backend;
  try {
    cfg.check();
    records = load(cfg.dataset, &stats);
    pool = make_pool(cfg.pool);
    backend = make_backend(cfg.backend, records, err);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitError;
  }
  if (cfg.backend.kind == BackendChoice::Kind::kMock && cfg.parallelism > 1) {
    err << "note: mock scripts are consumed in order; running with parallelism 1\n";
    cfg.parallelism = 1;
  }

  try {
    const Agents agents(make_agent_config(cfg, *backend));
    fs::create_directories(cfg.out_dir);
    const auto manifest_path = (fs::path(cfg.out_dir) / kManifestFile).string();
    const auto results_path = (fs::path(cfg.out_dir) / kResultsFile).string();

    ojson manifest{{"tool", "prism"},
                   {"command", "run"},
                   {"config", to_json(cfg)},
                   {"seed", cfg.seed},
                   {"templates", templates_json(agents.config())},
                   {"started_at", now_iso8601()},
                   {"finished_at", nullptr},
                   {"load_stats",
                    {{"loaded", stats.loaded},
                     {"skipped_unanswerable", stats.skipped_unanswerable},
                     {"skipped_no_evidence", stats.skipped_no_evidence},
                     {"skipped_invalid", stats.skipped_invalid}}}};
    write_json_file(manifest_path, manifest);

    std::ofstream results(results_path, std::ios::trunc);
    if (!results) throw MissingFile("cannot write " + results_path);

    // The pool a record ran on is stored with its result so replay needs nothing else.
    std::vector<std::vector<Passage>> pools(records.size());
    std::mutex pools_mu;
    auto index_of = [&](const QARecord& rec) {
      return static_cast<std::size_t>(&rec - records.data());
    };
    PoolFn recording_pool = [&](const QARecord& rec) {
      auto p = pool(rec);
      std::lock_guard lock(pools_mu);
      pools[index_of(rec)] = p;
      return p;
    };
    RecordRunner runner = [&](const QARecord& rec, std::span<const Passage> cands) {
      if (cfg.method == "oner") {
        return run_oner(rec, cands, static_cast<int>(cfg.oner_k), cfg.pipeline, &agents);
      }
      return run(rec, cands, cfg.pipeline, agents);
    };
    std::size_t failed = 0;
    ResultSink sink = [&](std::size_t i, const PipelineResult& r) {
      if (r.failed()) ++failed;
      std::vector<Passage> p;
      {
        std::lock_guard lock(pools_mu);
        p = pools[i];
      }
      results << line_json(r, records[i], p).dump() << '\n';
      results.flush();
    };
    run_batch_with(records, runner, cfg.parallelism, recording_pool, sink);

    manifest["finished_at"] = now_iso8601();
    manifest["records"] = records.size();
    manifest["failed"] = failed;
    write_json_file(manifest_path, manifest);
    out << records.size() << " records (" << failed << " failed) -> " << results_path << "\n";
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitError;
  }
  return kExitOk;
}

std::vector<StoredResult> read_results(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw MissingFile("cannot open results " + path);
  std::vector<StoredResult> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = path + ":" + std::to_string(lineno);
    StoredResult s;
    try {
      s.raw = ojson::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw SchemaError(where + ": " + e.what());
    }
    s.result = result_from_json(s.raw, where);
    s.question = s.raw.value("question", s.result.subs.original);
    if (auto it = s.raw.find("candidates"); it != s.raw.end() && it->is_array()) {
      for (std::size_t i = 0; i < it->size(); ++i) {
        s.candidates.push_back(
            passage_from_json((*it)[i], where + ".candidates[" + std::to_string(i) + "]"));
      }
    }
    out.push_back(std::move(s));
  }
  return out;
}

std::optional<std::string> first_divergence(const ojson& expected, const ojson& actual,
                                            const std::string& path) {
  if (expected.is_number() && actual.is_number()) {
    if (expected != actual) return path.empty() ? "/" : path;
    return std::nullopt;
  }
  if (expected.type() != actual.type()) return path.empty() ? "/" : path;
  if (expected.is_object()) {
    for (const auto& [k, v] : expected.items()) {
      if (!actual.contains(k)) return path + "/" + k;
      if (auto d = first_divergence(v, actual[k], path + "/" + k)) return d;
    }
    for (const auto& [k, v] : actual.items()) {
      if (!expected.contains(k)) return path + "/" + k;
    }
    return std::nullopt;
  }
  if (expected.is_array()) {
    const auto n = std::min(expected.size(), actual.size());
    for (std::size_t i = 0; i < n; ++i) {
      if (auto d = first_divergence(expected[i], actual[i], path + "/" + std::to_string(i))) return d;
    }
    if (expected.size() != actual.size()) return path + "/" + std::to_string(n);
    return std::nullopt;
  }
  if (expected != actual) return path.empty() ? "/" : path;
  return std::nullopt;
}

int cmd_eval(const EvalOptions& opts, std::ostream& out, std::ostream& err) {
  try {
    auto stored = read_results(opts.results_path);
    std::optional<ojson> manifest;
    if (fs::exists(manifest_path_for(opts.results_path))) {
      manifest = read_json_file(manifest_path_for(opts.results_path));
    }
    DatasetSpec spec;
    std::optional<RunConfig> run_cfg;
    if (manifest) run_cfg = run_config_from_json(manifest->at("config"));
    if (opts.dataset) {
      spec = *opts.dataset;
    } else if (run_cfg) {
      spec = run_cfg->dataset;
    } else {
      throw ConfigError("no dataset given and no run manifest next to " + opts.results_path);
    }
    const auto records = load(spec);

    std::map<std::string, const QARecord*> by_id;
    for (const auto& r : records) by_id[r.id] = &r;
    std::set<std::string> seen;
    for (const auto& s : stored) {
      if (!by_id.count(s.result.record_id)) {
        throw IdMismatch("result id '" + s.result.record_id + "' is not in the dataset");
      }
      seen.insert(s.result.record_id);
    }
    for (const auto& r : records) {
      if (!seen.count(r.id)) throw IdMismatch("dataset record '" + r.id + "' has no result");
    }

    std::unique_ptr<llm::Backend> backend;
    std::optional<Agents> agents;
    if (opts.backend) {
      backend = make_backend(*opts.backend, records, err);
      RunConfig rc;
      rc.model = opts.model;
      AgentConfig ac = make_agent_config(rc, *backend);
      if (manifest && manifest->contains("templates")) apply_templates(ac, (*manifest)["templates"]);
      agents.emplace(std::move(ac));
    }

    const DatasetName ds = spec.name;
    std::set<std::string> skipped;
    std::vector<eval::EvalRow> rows;
    for (const auto& s : stored) {
      const QARecord& rec = *by_id.at(s.result.record_id);
      eval::EvalRow row;
      row.id = rec.id;
      row.qtype = rec.qtype;
      row.hops = rec.hops;
      row.passage = eval::passage_prf(s.result.final_evidence, rec.gold_supporting, ds);
      if (has_fact_level(ds)) {
        row.fact = eval::fact_prf(s.result.final_evidence, rec.gold_supporting, ds);
      }
      for (const auto& cond : opts.conditions) {
        std::optional<AnswerMode> mode;
        const EvidenceSet* evidence = &s.result.final_evidence;
        std::span<const Passage> context = s.candidates;
        if (cond == "retrieved") {
          mode = AnswerMode::kFactsOnly;
        } else if (cond == "passages") {
          mode = AnswerMode::kPassages;
        } else if (cond == "full-context") {
          mode = AnswerMode::kFullContext;
        } else if (cond == "gold") {
          evidence = &rec.gold_supporting;
          context = rec.context;
          mode = AnswerMode::kFactsOnly;
        } else {
          throw ConfigError("unknown eval condition '" + cond + "'");
        }
        std::optional<std::string> prediction;
        if (cond != "gold" && s.result.answer_mode == mode && s.result.prediction) {
          prediction = s.result.prediction;
        } else if (cond != "gold" && s.result.failed()) {
          prediction = "";
        } else if (agents) {
          AgentCall call;
          call.record_id = rec.id;
          try {
            prediction = agents->answer(rec.question, *evidence, context, *mode, call);
          } catch (const std::exception& e) {
            err << "warning: " << rec.id << " (" << cond << "): " << e.what() << "\n";
            prediction = "";
          }
        }
        if (!prediction) {
          skipped.insert(cond);
          continue;
        }
        row.answers[cond] = eval::score_answer(*prediction, rec.gold_answer);
      }
      rows.push_back(std::move(row));
    }
    for (const auto& cond : skipped) {
      err << "note: condition '" << cond
          << "' skipped for records without a stored prediction (pass --backend to answer them)\n";
    }

    const auto report = eval::aggregate(rows);
    std::ostringstream text;
    text << eval::render_summary(report, "Evaluation of " + opts.results_path + " [" +
                                             std::string(to_string(ds)) + "]");
    const std::string first_cond = opts.conditions.empty() ? "retrieved" : opts.conditions.front();
    bool any_qtype = false, any_hops = false;
    for (const auto& r : rows) {
      any_qtype |= r.qtype.has_value();
      any_hops |= r.hops.has_value();
    }
    if (any_qtype) {
      text << "\n" << eval::render_breakdown(eval::breakdown(rows, eval::BreakdownKey::kQType, first_cond));
    }
    if (any_hops) {
      text << "\n" << eval::render_breakdown(eval::breakdown(rows, eval::BreakdownKey::kHops, first_cond));
    }
    text << "\n"
         << eval::render_breakdown(
                eval::breakdown(rows, eval::BreakdownKey::kRecallCondition, first_cond));

    const fs::path dir = opts.out_dir.empty() ? fs::path(opts.results_path).parent_path()
                                              : fs::path(opts.out_dir);
    if (!dir.empty()) fs::create_directories(dir);
    {
      std::ofstream rows_out(dir / "eval_rows.jsonl", std::ios::trunc);
      for (const auto& r : rows) rows_out << row_json(r).dump() << '\n';
      std::ofstream report_out(dir / "eval_report.txt", std::ios::trunc);
      report_out << text.str();
    }
    out << text.str();
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitError;
  }
  return kExitOk;
}

int cmd_ablate(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  struct Variant {
    const char* name;
    bool analyzer;
    bool loop;
  };
  const Variant variants[] = {{"full", true, true}, {"no-analyzer", false, true}, {"no-loop", true, false}};
  std::ostringstream table;
  table << std::left << std::setw(14) << "Variant" << std::right << std::setw(24) << "P/R/F1"
        << std::setw(10) << "#Pssg" << "\n";
  for (const auto& v : variants) {
    RunConfig vc = cfg;
    vc.pipeline.use_analyzer = v.analyzer;
    vc.pipeline.use_loop = v.loop;
    vc.pipeline.answer_mode.reset();
    vc.out_dir = (fs::path(cfg.out_dir) / v.name).string();
    if (vc.backend.kind == BackendChoice::Kind::kMock) {
      vc.backend.script_path = replace_all(vc.backend.script_path, "{variant}", v.name);
    }
    if (int rc = cmd_run(vc, out, err); rc != kExitOk) return rc;
    try {
      const auto stored = read_results((fs::path(vc.out_dir) / kResultsFile).string());
      const auto records = load(vc.dataset);
      std::map<std::string, const QARecord*> by_id;
      for (const auto& r : records) by_id[r.id] = &r;
      std::vector<eval::EvalRow> rows;
      for (const auto& s : stored) {
        auto it = by_id.find(s.result.record_id);
        if (it == by_id.end()) throw IdMismatch("unknown record '" + s.result.record_id + "'");
        eval::EvalRow row;
        row.id = s.result.record_id;
        row.passage = eval::passage_prf(s.result.final_evidence, it->second->gold_supporting,
                                        vc.dataset.name);
        rows.push_back(std::move(row));
      }
      const auto rep = eval::aggregate(rows);
      table << std::left << std::setw(14) << v.name << std::right << std::setw(24)
            << (eval::format_fixed2(rep.passage.precision) + "/" +
                eval::format_fixed2(rep.passage.recall) + "/" + eval::format_fixed2(rep.passage.f1))
            << std::setw(10) << eval::format_fixed2(rep.passage.n_retrieved) << "\n";
    } catch (const std::exception& e) {
      err << "error: " << e.what() << "\n";
      return kExitError;
    }
  }
  std::ofstream(fs::path(cfg.out_dir) / "ablation.txt", std::ios::trunc) << table.str();
  out << table.str();
  return kExitOk;
}

int cmd_replay(const std::string& results_path, std::ostream& out, std::ostream& err) {
  try {
    const ojson manifest = read_json_file(manifest_path_for(results_path));
    const RunConfig cfg = run_config_from_json(manifest.at("config"));
    const auto stored = read_results(results_path);
    std::size_t n = 0;
    for (const auto& s : stored) {
      if (s.raw.contains("candidates") == false) {
        throw SchemaError("result '" + s.result.record_id + "' has no stored candidate pool");
      }
      auto backend = llm::ScriptedBackend::from_replies(s.result.raw_responses());
      RunConfig rc = cfg;
      rc.template_paths.clear();
      AgentConfig ac = make_agent_config(rc, backend);
      if (manifest.contains("templates")) apply_templates(ac, manifest["templates"]);
      const Agents agents(std::move(ac));

      QARecord rec;
      rec.id = s.result.record_id;
      rec.question = s.question;
      const PipelineResult again =
          cfg.method == "oner"
              ? run_oner(rec, s.candidates, static_cast<int>(cfg.oner_k), cfg.pipeline, &agents)
              : run(rec, s.candidates, cfg.pipeline, agents);

      ojson expected = s.raw;
      expected.erase("question");
      expected.erase("candidates");
      ojson actual = to_json(again);
      for (auto* j : {&expected, &actual}) {
        erase_key_recursive(*j, "timing");
        j->erase("error");
      }
      if (auto d = first_divergence(expected, actual)) {
        err << "divergence in record '" << rec.id << "' at " << *d << "\n";
        return kExitDivergence;
      }
      ++n;
    }
    out << "replayed " << n << " records, no divergence\n";
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitError;
  }
  return kExitOk;
}

}  // namespace prism::app
