#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "prism/evidence.hpp"

namespace prism {

enum class DatasetName {
  kHotpotQA,
  k2Wiki,
  kMusique,
  kMultiHopRag,
  kInternal,  // one canonical QARecord object per line
};

std::string_view to_string(DatasetName name);
DatasetName dataset_from_string(std::string_view name);  // throws ConfigError

/// Sentence-level gold exists only for HotpotQA, 2Wiki and the internal format.
bool has_fact_level(DatasetName name);

struct SampleSpec {
  std::size_t n = 500;
  std::uint64_t seed = 0;
};

struct DatasetSpec {
  DatasetName name = DatasetName::kInternal;
  std::string path;
  std::optional<SampleSpec> sample;
  /// Drop records that break QARecord invariants instead of failing the load.
  bool skip_invalid = false;
};

struct LoadStats {
  std::size_t loaded = 0;
  std::size_t skipped_unanswerable = 0;  // MuSiQue answerable == false
  std::size_t skipped_no_evidence = 0;   // MultiHopRAG null queries
  std::size_t skipped_invalid = 0;       // only with skip_invalid
};

/// Reads a benchmark file into records. Throws MissingFile, or SchemaError
/// naming the first offending field.
std::vector<QARecord> load(const DatasetSpec& spec, LoadStats* stats = nullptr);

/// Order-preserving subset of n records drawn without replacement. The draw
/// depends only on (size, n, seed). Throws SampleTooLarge.
std::vector<QARecord> sample(std::span<const QARecord> records, std::size_t n, std::uint64_t seed);
/// Indices chosen by `sample`, ascending.
std::vector<std::size_t> sample_indices(std::size_t size, std::size_t n, std::uint64_t seed);

/// Writes records in the internal one-object-per-line format.
void save_records(const std::string& path, std::span<const QARecord> records);

/// Synthetic distractor-style records (bridge, comparison and three-hop
/// questions over invented films, directors and towns). Deterministic in seed.
std::vector<QARecord> make_fixture_suite(std::size_t n, std::uint64_t seed = 1);

}  // namespace prism
