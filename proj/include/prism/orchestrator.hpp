#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "prism/agents.hpp"
#include "prism/evidence.hpp"

namespace prism {

struct PipelineConfig {
  int max_iterations = 3;
  bool use_analyzer = true;
  bool use_loop = true;
  bool early_stop = true;
  std::optional<AnswerMode> answer_mode;  // nullopt: no answer generation

  void check() const;  // throws ConfigError
};

/// Wall-clock milliseconds per stage.
struct StageTiming {
  double analyze_ms = 0;
  double select_ms = 0;  // iteration 0
  double loop_ms = 0;
  double answer_ms = 0;
  double total_ms = 0;
};

struct PipelineResult {
  std::string record_id;
  SubQuestions subs;
  std::vector<IterationTrace> traces;
  EvidenceSet final_evidence;
  std::optional<std::string> prediction;
  std::optional<AnswerMode> answer_mode;
  std::vector<std::string> analyzer_responses;
  std::vector<std::string> answer_responses;
  std::vector<RejectedRef> rejected;
  std::vector<std::string> flags;
  std::optional<std::string> error;  // set when the record failed
  StageTiming timing;

  bool failed() const noexcept { return error.has_value(); }

  /// Every raw model reply in the order the calls were issued.
  std::vector<std::string> raw_responses() const;
};

/// Runs analyze, the initial selection pass, up to `max_iterations`
/// Adder-then-Selector rounds, and the final merge for one record. Never
/// throws for agent or backend failures: those produce a result with empty
/// evidence, a "failed:<stage>" flag and `error` set.
PipelineResult run(const QARecord& record, std::span<const Passage> candidates,
                   const PipelineConfig& cfg, const Agents& agents);

/// Single-pass BM25 baseline: the top-k pool passages (ranked against the
/// question) become the evidence, every sentence included.
PipelineResult run_oner(const QARecord& record, std::span<const Passage> candidates, int k,
                        const PipelineConfig& cfg, const Agents* agents);

using PoolFn = std::function<std::vector<Passage>(const QARecord&)>;
using RecordRunner =
    std::function<PipelineResult(const QARecord&, std::span<const Passage>)>;
/// Receives results strictly in input order, one call at a time.
using ResultSink = std::function<void(std::size_t index, const PipelineResult&)>;

/// Pool policy that hands every record its own context.
std::vector<Passage> record_context_pool(const QARecord& record);

/// Runs records concurrently with at most `parallelism` in flight. Results
/// come back in input order.
std::vector<PipelineResult> run_batch(std::span<const QARecord> records,
                                      const PipelineConfig& cfg, const Agents& agents,
                                      int parallelism, const PoolFn& pool = record_context_pool,
                                      const ResultSink& sink = {});

/// Same scheduling as run_batch with an arbitrary per-record runner.
std::vector<PipelineResult> run_batch_with(std::span<const QARecord> records,
                                           const RecordRunner& runner, int parallelism,
                                           const PoolFn& pool = record_context_pool,
                                           const ResultSink& sink = {});

}  // namespace prism
