#include <gtest/gtest.h>

#include <random>

#include "prism/evidence.hpp"
#include "support.hpp"

namespace prism {
namespace {

TEST(NormalizeTitle, FoldsCaseAndWhitespace) {
  EXPECT_EQ(normalize_title("  Rafael  Gil "), "rafael gil");
  EXPECT_EQ(normalize_title("The King is the Best Mayor"), "the king is the best mayor");
  EXPECT_EQ(normalize_title("Deuce High"), "deuce high");
}

TEST(EvidenceSet, KeepsInsertionOrderAndDropsDuplicates) {
  EvidenceSet s;
  EXPECT_TRUE(s.insert({"B", 1}));
  EXPECT_TRUE(s.insert({"A", 0}));
  EXPECT_FALSE(s.insert({"b", 1}));
  ASSERT_EQ(s.size(), 2u);
  EXPECT_EQ(s[0].title, "B");
  EXPECT_EQ(s[1].title, "A");
  EXPECT_TRUE(s.contains({"  a ", 0}));
}

TEST(MergeDedup, UnionWithDuplicate) {
  const std::vector<EvidenceSet> sets{{{"A", 0}}, {{"A", 0}, {"B", 1}}};
  const EvidenceSet expected{{"A", 0}, {"B", 1}};
  EXPECT_EQ(merge_dedup(sets), expected);
}

TEST(MergeDedup, EmptyInput) {
  EXPECT_TRUE(merge_dedup({}).empty());
}

TEST(MergeDedup, TraceIterationOutputs) {
  const EvidenceSet e0{{"Deuce High", 0}, {"The King is the Best Mayor", 0}};
  const EvidenceSet four = testing::trace_gold();
  EvidenceSet six = four;
  six.insert({"Richard Thorpe", 1});
  six.insert({"Rafael Gil", 1});
  const std::vector<EvidenceSet> outputs{e0, four, six, four};
  const auto merged = merge_dedup(outputs);
  EXPECT_EQ(merged, six);
}

TEST(MergeDedup, PropertiesOnRandomSets) {
  std::mt19937_64 rng(11);
  auto random_set = [&] {
    EvidenceSet s;
    const int n = static_cast<int>(rng() % 6);
    for (int i = 0; i < n; ++i) {
      s.insert({std::string(1, static_cast<char>('A' + rng() % 4)), rng() % 3});
    }
    return s;
  };
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<EvidenceSet> sets;
    const int k = static_cast<int>(rng() % 5);
    for (int i = 0; i < k; ++i) sets.push_back(random_set());
    const auto merged = merge_dedup(sets);
    std::size_t max_size = 0, total = 0;
    for (const auto& s : sets) {
      EXPECT_TRUE(s.is_subset_of(merged));
      max_size = std::max(max_size, s.size());
      total += s.size();
    }
    EXPECT_GE(merged.size(), max_size);
    EXPECT_LE(merged.size(), total);
    for (const auto& r : merged) {
      bool found = false;
      for (const auto& s : sets) found |= s.contains(r);
      EXPECT_TRUE(found);
    }
    const std::vector<EvidenceSet> twice{merged, merged};
    EXPECT_EQ(merge_dedup(twice), merged);
  }
}

TEST(ValidateRefs, ResolvesAndRejects) {
  const std::vector<Passage> ctx{{"Deuce High", {"s0", "s1", "s2"}}};
  auto ok = validate_refs({{"deuce high", 0}}, ctx);
  ASSERT_EQ(ok.valid.size(), 1u);
  EXPECT_EQ(ok.valid[0].title, "Deuce High");
  EXPECT_TRUE(ok.rejected.empty());

  auto unknown = validate_refs({{"Nonexistent", 0}}, ctx);
  EXPECT_TRUE(unknown.valid.empty());
  ASSERT_EQ(unknown.rejected.size(), 1u);
  EXPECT_EQ(unknown.rejected[0].reason, "unknown title");

  auto range = validate_refs({{"Deuce High", 99}}, ctx);
  ASSERT_EQ(range.rejected.size(), 1u);
  EXPECT_EQ(range.rejected[0].reason, "index out of range");
}

TEST(QARecord, CheckRejectsBrokenInvariants) {
  QARecord r{"x", "q?", "a", {{"T", {"s"}}}, {{"T", 0}}, std::nullopt, std::nullopt};
  EXPECT_NO_THROW(r.check());
  r.gold_supporting = {{"T", 3}};
  EXPECT_THROW(r.check(), std::invalid_argument);
  r.gold_supporting = {{"T", 0}};
  r.context.push_back({"t", {"dup"}});
  EXPECT_THROW(r.check(), std::invalid_argument);
}

}  // namespace
}  // namespace prism
