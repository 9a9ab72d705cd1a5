#include "prism/orchestrator.hpp"

#include <atomic>
#include <chrono>
#include <mutex>
#include <stdexcept>
#include <thread>

#include "prism/bm25.hpp"
#include "prism/error.hpp"

namespace prism {
namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

// Moves replies issued since `mark` out of the call log.
std::vector<std::string> take_new(const AgentCall& call, std::size_t& mark) {
  std::vector<std::string> out(call.responses.begin() + static_cast<std::ptrdiff_t>(mark),
                               call.responses.end());
  mark = call.responses.size();
  return out;
}

void fail(PipelineResult& result, std::string_view stage, const std::exception& e) {
  result.final_evidence = {};
  result.flags.push_back("failed:" + std::string(stage));
  result.error = e.what();
}

}  // namespace

void PipelineConfig::check() const {
  if (max_iterations < 1) throw ConfigError("max_iterations must be >= 1");
}

std::vector<std::string> PipelineResult::raw_responses() const {
  std::vector<std::string> out = analyzer_responses;
  for (const auto& t : traces) out.insert(out.end(), t.raw_responses.begin(), t.raw_responses.end());
  out.insert(out.end(), answer_responses.begin(), answer_responses.end());
  return out;
}

PipelineResult run(const QARecord& record, std::span<const Passage> candidates,
                   const PipelineConfig& cfg, const Agents& agents) {
  const auto t_start = Clock::now();
  PipelineResult result;
  result.record_id = record.id;
  result.subs = {record.question, {record.question}};
  result.answer_mode = cfg.answer_mode;

  AgentCall call;
  call.record_id = record.id;
  std::size_t mark = 0;
  std::string stage = "config";

  auto finish = [&] {
    result.rejected = std::move(call.rejected);
    result.flags.insert(result.flags.begin(), call.flags.begin(), call.flags.end());
    result.timing.total_ms = ms_since(t_start);
    return result;
  };

  try {
    cfg.check();
    if (candidates.empty()) {
      stage = "pool";
      throw std::invalid_argument("candidate pool is empty");
    }

    stage = "analyze";
    auto t = Clock::now();
    if (cfg.use_analyzer) {
      result.subs = agents.analyze(record.question, call);
      result.analyzer_responses = take_new(call, mark);
    }
    result.timing.analyze_ms = ms_since(t);

    stage = "select";
    t = Clock::now();
    IterationTrace initial;
    initial.iteration = 0;
    initial.selector_output =
        agents.select(record.question, result.subs, candidates, all_refs(candidates), call);
    initial.raw_responses = take_new(call, mark);
    result.traces.push_back(std::move(initial));
    result.timing.select_ms = ms_since(t);

    if (cfg.use_loop) {
      stage = "loop";
      t = Clock::now();
      for (int i = 1; i <= cfg.max_iterations; ++i) {
        const IterationTrace& prev = result.traces.back();
        IterationTrace trace;
        trace.iteration = i;
        trace.adder_output =
            agents.add(record.question, result.subs, candidates, prev.selector_output, call);
        trace.selector_output =
            agents.select(record.question, result.subs, candidates, trace.adder_output, call);
        trace.raw_responses = take_new(call, mark);
        const bool fixed_point = i > 1 && trace.adder_output.same_members(prev.adder_output) &&
                                 trace.selector_output.same_members(prev.selector_output);
        result.traces.push_back(std::move(trace));
        if (cfg.early_stop && fixed_point) {
          result.flags.push_back("early_stop@" + std::to_string(i));
          break;
        }
      }
      result.timing.loop_ms = ms_since(t);
    }

    std::vector<EvidenceSet> selections;
    for (const auto& tr : result.traces) selections.push_back(tr.selector_output);
    auto checked = validate_refs(merge_dedup(selections), candidates);
    for (auto& r : checked.rejected) call.rejected.push_back(std::move(r));
    result.final_evidence = std::move(checked.valid);

    if (cfg.answer_mode) {
      stage = "answer";
      t = Clock::now();
      result.prediction =
          agents.answer(record.question, result.final_evidence, candidates, *cfg.answer_mode, call);
      result.answer_responses = take_new(call, mark);
      result.timing.answer_ms = ms_since(t);
    }
  } catch (const std::exception& e) {
    // Keep whatever the failing stage received so a replay hits the same failure.
    auto pending = take_new(call, mark);
    if (stage == "analyze") {
      result.analyzer_responses = std::move(pending);
    } else if (stage == "answer") {
      result.answer_responses = std::move(pending);
    } else if (!pending.empty()) {
      IterationTrace partial;
      partial.iteration = static_cast<int>(result.traces.size());
      partial.raw_responses = std::move(pending);
      result.traces.push_back(std::move(partial));
    }
    fail(result, stage, e);
  }
  return finish();
}

PipelineResult run_oner(const QARecord& record, std::span<const Passage> candidates, int k,
                        const PipelineConfig& cfg, const Agents* agents) {
  const auto t_start = Clock::now();
  PipelineResult result;
  result.record_id = record.id;
  result.subs = {record.question, {record.question}};
  result.answer_mode = cfg.answer_mode;
  result.flags.push_back("oner");
  AgentCall call;
  call.record_id = record.id;
  std::string stage = "retrieve";
  try {
    if (candidates.empty()) throw std::invalid_argument("candidate pool is empty");
    std::vector<Passage> pool(candidates.begin(), candidates.end());
    const auto index = bm25::build(pool);
    const auto t = Clock::now();
    for (const auto& hit : bm25::retrieve_topk(index, record.question, k)) {
      const Passage& p = index.passage(hit.doc);
      for (std::size_t i = 0; i < p.sentences.size(); ++i) result.final_evidence.insert({p.title, i});
    }
    result.timing.select_ms = ms_since(t);
    if (cfg.answer_mode && agents != nullptr) {
      stage = "answer";
      const auto ta = Clock::now();
      result.prediction =
          agents->answer(record.question, result.final_evidence, candidates, *cfg.answer_mode, call);
      result.answer_responses = call.responses;
      result.timing.answer_ms = ms_since(ta);
    }
  } catch (const std::exception& e) {
    if (stage == "answer") result.answer_responses = call.responses;
    fail(result, stage, e);
  }
  result.timing.total_ms = ms_since(t_start);
  return result;
}

std::vector<Passage> record_context_pool(const QARecord& record) { return record.context; }

std::vector<PipelineResult> run_batch_with(std::span<const QARecord> records,
                                           const RecordRunner& runner, int parallelism,
                                           const PoolFn& pool, const ResultSink& sink) {
  if (parallelism < 1) throw ConfigError("parallelism must be >= 1");
  const std::size_t n = records.size();
  std::vector<PipelineResult> results(n);
  std::vector<char> done(n, 0);
  std::size_t next_to_emit = 0;
  std::mutex sink_mu;
  std::atomic<std::size_t> next{0};

  auto worker = [&] {
    for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
      PipelineResult r;
      try {
        const auto candidates = pool(records[i]);
        r = runner(records[i], candidates);
      } catch (const std::exception& e) {
        r = PipelineResult{};
        r.record_id = records[i].id;
        r.subs = {records[i].question, {records[i].question}};
        fail(r, "pool", e);
      }
      std::lock_guard lock(sink_mu);
      results[i] = std::move(r);
      done[i] = 1;
      while (next_to_emit < n && done[next_to_emit]) {
        if (sink) sink(next_to_emit, results[next_to_emit]);
        ++next_to_emit;
      }
    }
  };

  const auto workers = std::min<std::size_t>(static_cast<std::size_t>(parallelism), n);
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::jthread> threads;
    threads.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) threads.emplace_back(worker);
  }
  return results;
}

std::vector<PipelineResult> run_batch(std::span<const QARecord> records,
                                      const PipelineConfig& cfg, const Agents& agents,
                                      int parallelism, const PoolFn& pool,
                                      const ResultSink& sink) {
  cfg.check();
  return run_batch_with(
      records,
      [&](const QARecord& rec, std::span<const Passage> candidates) {
        return run(rec, candidates, cfg, agents);
      },
      parallelism, pool, sink);
}

}  // namespace prism
