#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "prism/agents.hpp"
#include "prism/datasets.hpp"
#include "prism/llm/backend.hpp"
#include "prism/orchestrator.hpp"
#include "prism/serialize.hpp"

namespace prism::app {

inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 2;
inline constexpr int kExitDivergence = 3;

inline constexpr const char* kResultsFile = "results.jsonl";
inline constexpr const char* kManifestFile = "manifest.json";

struct BackendChoice {
  enum class Kind { kLive, kMock, kOracle };
  Kind kind = Kind::kOracle;
  std::string script_path;  // mock only

  /// "live" | "oracle" | "mock:<path>"
  static BackendChoice parse(const std::string& text);
  std::string to_string() const;
};

struct PoolPolicy {
  enum class Kind { kRecordContext, kBm25TopK };
  Kind kind = Kind::kRecordContext;
  std::size_t k = 20;
  std::string corpus_path;

  /// "record-context" | "bm25-topk:<k>"
  static PoolPolicy parse(const std::string& text, std::string corpus_path = {});
  std::string to_string() const;
};

struct RunConfig {
  DatasetSpec dataset;
  PipelineConfig pipeline{.answer_mode = AnswerMode::kFactsOnly};
  BackendChoice backend;
  std::string model = "gpt-4o";
  double temperature = 0.0;
  int max_tokens = 1024;
  PoolPolicy pool;
  int parallelism = 1;
  std::string out_dir = "prism-out";
  std::uint64_t seed = 0;
  std::string method = "prism";  // or "oner"
  std::size_t oner_k = 5;
  std::map<std::string, std::string> template_paths;  // analyzer/selector/adder/answer

  void check() const;  // throws ConfigError
};

ojson to_json(const RunConfig& cfg);
RunConfig run_config_from_json(const ojson& j);

/// 64-bit FNV-1a, hex encoded. Stable across platforms.
std::string fnv1a_hex(std::string_view text);

/// Builds the backend a config asks for. The oracle is bound to `records`.
std::unique_ptr<llm::Backend> make_backend(const BackendChoice& choice,
                                           std::span<const QARecord> records,
                                           std::ostream& log);

/// Default templates with any file overrides applied.
AgentConfig make_agent_config(const RunConfig& cfg, llm::Backend& backend);

/// Candidate pools for a config: record contexts or BM25 top-k over a corpus.
PoolFn make_pool(const PoolPolicy& policy);

int cmd_run(const RunConfig& cfg, std::ostream& out, std::ostream& err);

struct EvalOptions {
  std::string results_path;
  std::optional<DatasetSpec> dataset;  // defaults to the run manifest's
  /// Any of "retrieved", "passages", "full-context", "gold".
  std::vector<std::string> conditions = {"retrieved"};
  std::optional<BackendChoice> backend;  // used to answer missing conditions
  std::string model = "gpt-4o";
  std::string out_dir;  // defaults to the results directory
};

int cmd_eval(const EvalOptions& opts, std::ostream& out, std::ostream& err);
int cmd_ablate(const RunConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_replay(const std::string& results_path, std::ostream& out, std::ostream& err);

/// A results file line: the pipeline result plus the question and pool it ran on.
struct StoredResult {
  PipelineResult result;
  std::string question;
  std::vector<Passage> candidates;
  ojson raw;  // the line as read
};

std::vector<StoredResult> read_results(const std::string& path);

/// JSON-pointer style path of the first difference between two documents.
std::optional<std::string> first_divergence(const ojson& expected, const ojson& actual,
                                            const std::string& path = "");

}  // namespace prism::app
