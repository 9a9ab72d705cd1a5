#include <gtest/gtest.h>

#include <fstream>

#include "prism/datasets.hpp"
#include "prism/error.hpp"
#include "support.hpp"

namespace prism {
namespace {

const char* kMinimalHotpot = R"([{
  "_id": "h1", "question": "Where was X born?", "answer": "Y", "type": "bridge", "level": "easy",
  "context": [["X", ["X is a person.", "X was born in Y."]], ["Z", ["Z is unrelated."]]],
  "supporting_facts": [["X", 1]]
}])";

TEST(Load, MinimalHotpot) {
  testing::TempDir dir("hotpot");
  std::ofstream(dir / "h.json") << kMinimalHotpot;
  LoadStats stats;
  const auto recs = load({.name = DatasetName::kHotpotQA, .path = dir / "h.json"}, &stats);
  ASSERT_EQ(recs.size(), 1u);
  EXPECT_EQ(recs[0].gold_supporting, (EvidenceSet{{"X", 1}}));
  EXPECT_EQ(recs[0].qtype, "bridge");
  EXPECT_EQ(recs[0].context.size(), 2u);
  EXPECT_EQ(stats.loaded, 1u);
}

TEST(Load, TraceRecord) {
  const auto rec = testing::trace_record();
  EXPECT_EQ(rec.id, "e95acdbc085f11ebbd5dac1f6bf848b6");
  EXPECT_EQ(rec.question,
            "Which film has the director who died earlier, Deuce High or The King Is The Best Mayor?");
  EXPECT_EQ(rec.gold_answer, "The King Is The Best Mayor");
  EXPECT_EQ(rec.gold_supporting.size(), 4u);
}

TEST(Load, AbsentSupportingTitleIsSchemaError) {
  testing::TempDir dir("bad");
  std::string text = kMinimalHotpot;
  text.replace(text.find("[[\"X\", 1]]"), 10, "[[\"Q\", 0]]");
  std::ofstream(dir / "h.json") << text;
  try {
    load({.name = DatasetName::kHotpotQA, .path = dir / "h.json"});
    FAIL() << "expected SchemaError";
  } catch (const SchemaError& e) {
    EXPECT_NE(std::string(e.what()).find("[0]"), std::string::npos) << e.what();
  }
  LoadStats stats;
  const auto kept =
      load({.name = DatasetName::kHotpotQA, .path = dir / "h.json", .skip_invalid = true}, &stats);
  EXPECT_TRUE(kept.empty());
  EXPECT_EQ(stats.skipped_invalid, 1u);
}

TEST(Load, MissingFile) {
  EXPECT_THROW(load({.name = DatasetName::kHotpotQA, .path = "/nonexistent/x.json"}), MissingFile);
}

TEST(Load, Musique) {
  testing::TempDir dir("musique");
  std::ofstream(dir / "m.jsonl")
      << R"({"id": "2hop__1_2", "question": "q?", "answer": "a", "answerable": true, )"
      << R"("question_decomposition": [{}, {}], "paragraphs": [)"
      << R"({"idx": 0, "title": "A", "paragraph_text": "A text.", "is_supporting": true}, )"
      << R"({"idx": 1, "title": "A", "paragraph_text": "Other A.", "is_supporting": false}, )"
      << R"({"idx": 2, "title": "B", "paragraph_text": "B text.", "is_supporting": true}]})"
      << "\n"
      << R"({"id": "3hop1__9", "question": "q2?", "answer": "", "answerable": false, "paragraphs": []})"
      << "\n";
  LoadStats stats;
  const auto recs = load({.name = DatasetName::kMusique, .path = dir / "m.jsonl"}, &stats);
  ASSERT_EQ(recs.size(), 1u);
  EXPECT_EQ(stats.skipped_unanswerable, 1u);
  EXPECT_EQ(recs[0].qtype, "2hop");
  EXPECT_EQ(recs[0].hops, 2);
  EXPECT_EQ(recs[0].context[1].title, "A (para 1)");
  EXPECT_EQ(recs[0].gold_supporting, (EvidenceSet{{"A", 0}, {"B", 0}}));
}

TEST(Load, MultiHopRag) {
  testing::TempDir dir("mhrag");
  std::ofstream(dir / "r.json") << R"([
{"query": "q?", "answer": "yes", "question_type": "comparison_query",
 "evidence_list": [{"title": "T1", "fact": "f1"}, {"title": "T2", "fact": "f2"}, {"title": "T1", "fact": "f3"}]},
{"query": "none?", "answer": "Insufficient information.", "question_type": "null_query", "evidence_list": []}])";
  LoadStats stats;
  const auto recs = load({.name = DatasetName::kMultiHopRag, .path = dir / "r.json"}, &stats);
  ASSERT_EQ(recs.size(), 1u);
  EXPECT_EQ(stats.skipped_no_evidence, 1u);
  EXPECT_EQ(recs[0].qtype, "comparison");
  EXPECT_EQ(recs[0].context[0].sentences.size(), 2u);
  EXPECT_EQ(recs[0].gold_supporting.size(), 2u);
}

TEST(Sample, IdentityWhenNEqualsSize) {
  const auto recs = make_fixture_suite(6);
  const auto s = sample(recs, 6, 42);
  ASSERT_EQ(s.size(), 6u);
  for (std::size_t i = 0; i < 6; ++i) EXPECT_EQ(s[i].id, recs[i].id);
}

TEST(Sample, DeterministicAndOrdered) {
  const auto a = sample_indices(100, 10, 7);
  EXPECT_EQ(a, sample_indices(100, 10, 7));
  EXPECT_NE(a, sample_indices(100, 10, 8));
  EXPECT_TRUE(std::is_sorted(a.begin(), a.end()));
  EXPECT_EQ(std::set<std::size_t>(a.begin(), a.end()).size(), 10u);
  EXPECT_EQ(sample_indices(5, 2, 7), sample_indices(5, 2, 7));
  EXPECT_THROW(sample_indices(5, 6, 1), SampleTooLarge);
}

TEST(SaveRecords, RoundTrip) {
  testing::TempDir dir("rt");
  const auto recs = make_fixture_suite(5);
  save_records(dir / "r.jsonl", recs);
  const auto back = load({.name = DatasetName::kInternal, .path = dir / "r.jsonl"});
  ASSERT_EQ(back.size(), recs.size());
  for (std::size_t i = 0; i < recs.size(); ++i) {
    EXPECT_EQ(back[i].id, recs[i].id);
    EXPECT_EQ(back[i].context, recs[i].context);
    EXPECT_EQ(back[i].gold_supporting, recs[i].gold_supporting);
    EXPECT_EQ(back[i].qtype, recs[i].qtype);
    EXPECT_EQ(back[i].hops, recs[i].hops);
  }
}

TEST(FixtureSuite, RecordsAreValidAndDeterministic) {
  const auto a = make_fixture_suite(25);
  const auto b = make_fixture_suite(25);
  ASSERT_EQ(a.size(), 25u);
  std::set<std::string> types;
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_NO_THROW(a[i].check());
    EXPECT_EQ(a[i].question, b[i].question);
    EXPECT_GT(a[i].context.size(), a[i].gold_supporting.size());
    types.insert(a[i].qtype.value_or(""));
  }
  EXPECT_GE(types.size(), 3u);
}

}  // namespace
}  // namespace prism
