#pragma once

#include <nlohmann/json.hpp>

#include "prism/evidence.hpp"
#include "prism/orchestrator.hpp"

namespace prism {

using ojson = nlohmann::ordered_json;

ojson to_json(const Passage& p);
ojson to_json(const EvidenceRef& r);
ojson to_json(const EvidenceSet& s);
ojson to_json(const QARecord& r);
ojson to_json(const IterationTrace& t);
ojson to_json(const PipelineResult& r);

// Parsers throw SchemaError with the offending field path.
Passage passage_from_json(const ojson& j, const std::string& where = "passage");
EvidenceSet evidence_from_json(const ojson& j, const std::string& where = "evidence");
QARecord record_from_json(const ojson& j, const std::string& where = "record");
PipelineResult result_from_json(const ojson& j, const std::string& where = "result");

}  // namespace prism
