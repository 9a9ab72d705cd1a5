#include "prism/serialize.hpp"

#include "prism/error.hpp"

namespace prism {
namespace {

[[noreturn]] void bad(const std::string& where, const std::string& what) {
  throw SchemaError(where + ": " + what);
}

const ojson& field(const ojson& j, const char* key, const std::string& where) {
  if (!j.is_object()) bad(where, "expected object");
  auto it = j.find(key);
  if (it == j.end()) bad(where + "." + key, "missing");
  return *it;
}

std::string str(const ojson& j, const std::string& where) {
  if (!j.is_string()) bad(where, "expected string");
  return j.get<std::string>();
}

std::vector<std::string> str_list(const ojson& j, const std::string& where) {
  if (!j.is_array()) bad(where, "expected array");
  std::vector<std::string> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(str(j[i], where + "[" + std::to_string(i) + "]"));
  return out;
}

std::optional<std::string> opt_str(const ojson& j, const char* key, const std::string& where) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  return str(*it, where + "." + key);
}

ojson opt(const std::optional<std::string>& s) { return s ? ojson(*s) : ojson(nullptr); }

}  // namespace

ojson to_json(const Passage& p) { return {{"title", p.title}, {"sentences", p.sentences}}; }

ojson to_json(const EvidenceRef& r) { return ojson::array({r.title, r.sentence_index}); }

ojson to_json(const EvidenceSet& s) {
  ojson out = ojson::array();
  for (const auto& r : s) out.push_back(to_json(r));
  return out;
}

ojson to_json(const QARecord& r) {
  ojson ctx = ojson::array();
  for (const auto& p : r.context) ctx.push_back(to_json(p));
  ojson j{{"id", r.id},
          {"question", r.question},
          {"gold_answer", r.gold_answer},
          {"context", ctx},
          {"gold_supporting", to_json(r.gold_supporting)}};
  if (r.qtype) j["qtype"] = *r.qtype;
  if (r.hops) j["hops"] = *r.hops;
  return j;
}

ojson to_json(const IterationTrace& t) {
  return {{"iteration", t.iteration},
          {"adder_output", to_json(t.adder_output)},
          {"selector_output", to_json(t.selector_output)},
          {"raw_responses", t.raw_responses}};
}

ojson to_json(const PipelineResult& r) {
  ojson traces = ojson::array();
  for (const auto& t : r.traces) traces.push_back(to_json(t));
  ojson rejected = ojson::array();
  for (const auto& x : r.rejected) rejected.push_back({{"ref", to_json(x.ref)}, {"reason", x.reason}});
  return {{"record_id", r.record_id},
          {"subs", {{"original", r.subs.original}, {"subs", r.subs.subs}}},
          {"traces", traces},
          {"final_evidence", to_json(r.final_evidence)},
          {"prediction", opt(r.prediction)},
          {"answer_mode",
           r.answer_mode ? ojson(std::string(to_string(*r.answer_mode))) : ojson(nullptr)},
          {"analyzer_responses", r.analyzer_responses},
          {"answer_responses", r.answer_responses},
          {"rejected", rejected},
          {"flags", r.flags},
          {"error", opt(r.error)},
          {"timing",
           {{"analyze_ms", r.timing.analyze_ms},
            {"select_ms", r.timing.select_ms},
            {"loop_ms", r.timing.loop_ms},
            {"answer_ms", r.timing.answer_ms},
            {"total_ms", r.timing.total_ms}}}};
}

Passage passage_from_json(const ojson& j, const std::string& where) {
  Passage p{str(field(j, "title", where), where + ".title"),
            str_list(field(j, "sentences", where), where + ".sentences")};
  try {
    p.check();
  } catch (const std::invalid_argument& e) {
    bad(where, e.what());
  }
  return p;
}

EvidenceSet evidence_from_json(const ojson& j, const std::string& where) {
  if (!j.is_array()) bad(where, "expected array");
  EvidenceSet out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const auto w = where + "[" + std::to_string(i) + "]";
    const auto& pair = j[i];
    if (!pair.is_array() || pair.size() != 2 || !pair[0].is_string() ||
        !pair[1].is_number_unsigned()) {
      bad(w, "expected [title, non-negative index]");
    }
    out.insert({pair[0].get<std::string>(), pair[1].get<std::size_t>()});
  }
  return out;
}

QARecord record_from_json(const ojson& j, const std::string& where) {
  QARecord r;
  r.id = str(field(j, "id", where), where + ".id");
  r.question = str(field(j, "question", where), where + ".question");
  r.gold_answer = str(field(j, "gold_answer", where), where + ".gold_answer");
  const auto& ctx = field(j, "context", where);
  if (!ctx.is_array()) bad(where + ".context", "expected array");
  for (std::size_t i = 0; i < ctx.size(); ++i) {
    r.context.push_back(passage_from_json(ctx[i], where + ".context[" + std::to_string(i) + "]"));
  }
  r.gold_supporting =
      evidence_from_json(field(j, "gold_supporting", where), where + ".gold_supporting");
  r.qtype = opt_str(j, "qtype", where);
  if (auto it = j.find("hops"); it != j.end() && !it->is_null()) {
    if (!it->is_number_integer()) bad(where + ".hops", "expected integer");
    r.hops = it->get<int>();
  }
  try {
    r.check();
  } catch (const std::invalid_argument& e) {
    bad(where, e.what());
  }
  return r;
}

PipelineResult result_from_json(const ojson& j, const std::string& where) {
  PipelineResult r;
  try {
    r.record_id = str(field(j, "record_id", where), where + ".record_id");
    const auto& subs = field(j, "subs", where);
    r.subs.original = str(field(subs, "original", where + ".subs"), where + ".subs.original");
    r.subs.subs = str_list(field(subs, "subs", where + ".subs"), where + ".subs.subs");
    const auto& traces = field(j, "traces", where);
    if (!traces.is_array()) bad(where + ".traces", "expected array");
    for (std::size_t i = 0; i < traces.size(); ++i) {
      const auto w = where + ".traces[" + std::to_string(i) + "]";
      IterationTrace t;
      t.iteration = field(traces[i], "iteration", w).get<int>();
      t.adder_output = evidence_from_json(field(traces[i], "adder_output", w), w + ".adder_output");
      t.selector_output =
          evidence_from_json(field(traces[i], "selector_output", w), w + ".selector_output");
      t.raw_responses = str_list(field(traces[i], "raw_responses", w), w + ".raw_responses");
      r.traces.push_back(std::move(t));
    }
    r.final_evidence =
        evidence_from_json(field(j, "final_evidence", where), where + ".final_evidence");
    r.prediction = opt_str(j, "prediction", where);
    if (auto mode = opt_str(j, "answer_mode", where)) r.answer_mode = answer_mode_from_string(*mode);
    r.analyzer_responses =
        str_list(field(j, "analyzer_responses", where), where + ".analyzer_responses");
    r.answer_responses = str_list(field(j, "answer_responses", where), where + ".answer_responses");
    for (const auto& x : field(j, "rejected", where)) {
      auto ref = evidence_from_json(ojson::array({x.at("ref")}), where + ".rejected");
      r.rejected.push_back({ref[0], x.at("reason").get<std::string>()});
    }
    r.flags = str_list(field(j, "flags", where), where + ".flags");
    r.error = opt_str(j, "error", where);
    if (auto it = j.find("timing"); it != j.end() && it->is_object()) {
      r.timing.analyze_ms = it->value("analyze_ms", 0.0);
      r.timing.select_ms = it->value("select_ms", 0.0);
      r.timing.loop_ms = it->value("loop_ms", 0.0);
      r.timing.answer_ms = it->value("answer_ms", 0.0);
      r.timing.total_ms = it->value("total_ms", 0.0);
    }
  } catch (const nlohmann::json::exception& e) {
    bad(where, e.what());
  } catch (const ConfigError& e) {
    bad(where + ".answer_mode", e.what());
  }
  return r;
}

}  // namespace prism
