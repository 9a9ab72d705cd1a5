#pragma once

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "prism/datasets.hpp"
#include "prism/evidence.hpp"
#include "prism/llm/backends.hpp"

namespace prism::testing {

inline std::string data_path(const std::string& name) {
  return std::string(PRISM_TEST_DATA) + "/" + name;
}

inline QARecord trace_record() {
  return load({.name = DatasetName::k2Wiki, .path = data_path("trace_2wiki.json")}).at(0);
}

inline std::vector<llm::ScriptEntry> trace_script() {
  return llm::load_script(data_path("trace_script.json"));
}

inline EvidenceSet trace_gold() {
  return {{"Deuce High", 0}, {"The King is the Best Mayor", 0}, {"Richard Thorpe", 0}, {"Rafael Gil", 0}};
}

/// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::mt19937_64 rng(std::random_device{}());
    path_ = std::filesystem::temp_directory_path() /
            ("prism-" + tag + "-" + std::to_string(rng() % 1000000000));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::string operator/(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

}  // namespace prism::testing
