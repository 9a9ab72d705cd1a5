#include <gtest/gtest.h>

#include "prism/agents.hpp"
#include "prism/error.hpp"
#include "prism/llm/backends.hpp"
#include "support.hpp"

namespace prism {
namespace {

using llm::ScriptedBackend;

const SubQuestions kTraceSubs{
    "Which film has the director who died earlier, Deuce High or The King Is The Best Mayor?",
    {"Who directed Deuce High?", "Who directed The King Is The Best Mayor?",
     "When did the director of Deuce High die?",
     "When did the director of The King Is The Best Mayor die?", "Which director died earlier?"}};

EvidenceSet six_refs() {
  EvidenceSet s = testing::trace_gold();
  s.insert({"Richard Thorpe", 1});
  s.insert({"Rafael Gil", 1});
  return s;
}

TEST(Analyze, TraceDecomposition) {
  const auto rec = testing::trace_record();
  auto backend = ScriptedBackend::from_replies({testing::trace_script()[0].reply});
  Agents agents({.backend = backend});
  AgentCall call;
  const auto subs = agents.analyze(rec.question, call);
  ASSERT_EQ(subs.subs.size(), 5u);
  EXPECT_EQ(subs.subs.back(), "Which director died earlier?");
  EXPECT_EQ(subs.original, rec.question);
}

TEST(Analyze, TemplateExample) {
  auto backend = ScriptedBackend::from_replies(
      {"1. Who starred in Legally Blonde?\n2. What character did that actress portray in another "
       "film?\n3. Who played the brother of that character?"});
  Agents agents({.backend = backend});
  AgentCall call;
  const auto subs = agents.analyze(
      "Which actor played the brother of the character who was portrayed by the same actress that "
      "starred in Legally Blonde?",
      call);
  EXPECT_EQ(subs.subs.size(), 3u);
}

TEST(Analyze, DegradesAfterTwoBadReplies) {
  auto backend = ScriptedBackend::from_replies({"", "   "});
  Agents agents({.backend = backend});
  AgentCall call;
  const auto subs = agents.analyze("q?", call);
  EXPECT_EQ(subs.subs, std::vector<std::string>{"q?"});
  EXPECT_NE(std::find(call.flags.begin(), call.flags.end(), "analyzer_degraded"), call.flags.end());
  EXPECT_EQ(call.responses.size(), 2u);
}

TEST(Select, PrunesTraceIterationTwo) {
  const auto rec = testing::trace_record();
  auto backend = ScriptedBackend::from_replies({testing::trace_script()[5].reply});
  Agents agents({.backend = backend});
  AgentCall call;
  const auto out = agents.select(rec.question, kTraceSubs, rec.context, six_refs(), call);
  EXPECT_EQ(out, testing::trace_gold());
}

TEST(Select, EmptyCurrentSkipsBackend) {
  const auto rec = testing::trace_record();
  ScriptedBackend backend(std::vector<llm::ScriptEntry>{});
  Agents agents({.backend = backend});
  AgentCall call;
  EXPECT_TRUE(agents.select(rec.question, kTraceSubs, rec.context, {}, call).empty());
  EXPECT_EQ(backend.consumed(), 0u);
}

TEST(Select, NeverAddsEvenWhenAsked) {
  const auto rec = testing::trace_record();
  auto backend = ScriptedBackend::from_replies({R"([["Rafael Gil", 0], ["Gil Vicente", 0]])"});
  Agents agents({.backend = backend});
  AgentCall call;
  const EvidenceSet current{{"Rafael Gil", 0}, {"Deuce High", 0}};
  const auto out = agents.select(rec.question, kTraceSubs, rec.context, current, call);
  EXPECT_EQ(out, (EvidenceSet{{"Rafael Gil", 0}}));
  ASSERT_EQ(call.rejected.size(), 1u);
  EXPECT_EQ(call.rejected[0].ref.title, "Gil Vicente");
}

TEST(Select, OracleKeepsGoldIntersection) {
  const std::vector<QARecord> recs{testing::trace_record()};
  llm::OracleBackend oracle(recs);
  Agents agents({.backend = oracle});
  AgentCall call;
  call.record_id = recs[0].id;
  const auto out = agents.select(recs[0].question, kTraceSubs, recs[0].context, six_refs(), call);
  EXPECT_TRUE(out.same_members(testing::trace_gold()));
}

TEST(Add, TraceIterationOne) {
  const auto rec = testing::trace_record();
  auto backend = ScriptedBackend::from_replies({testing::trace_script()[2].reply});
  Agents agents({.backend = backend});
  AgentCall call;
  const EvidenceSet current{{"Deuce High", 0}, {"The King is the Best Mayor", 0}};
  EXPECT_EQ(agents.add(rec.question, kTraceSubs, rec.context, current, call), testing::trace_gold());
}

TEST(Add, NeverDropsCurrent) {
  const auto rec = testing::trace_record();
  auto backend = ScriptedBackend::from_replies({R"([["Rafael Gil", 1]])"});
  Agents agents({.backend = backend});
  AgentCall call;
  const auto out = agents.add(rec.question, kTraceSubs, rec.context, testing::trace_gold(), call);
  EXPECT_TRUE(testing::trace_gold().is_subset_of(out));
  EXPECT_EQ(out.size(), 5u);
}

TEST(Add, FixedPointWhenNothingNew) {
  const auto rec = testing::trace_record();
  auto backend = ScriptedBackend::from_replies({"[]"});
  Agents agents({.backend = backend});
  AgentCall call;
  EXPECT_EQ(agents.add(rec.question, kTraceSubs, rec.context, testing::trace_gold(), call), testing::trace_gold());
}

TEST(Add, OracleCompletesGold) {
  const std::vector<QARecord> recs{testing::trace_record()};
  llm::OracleBackend oracle(recs);
  Agents agents({.backend = oracle});
  AgentCall call;
  call.record_id = recs[0].id;
  const EvidenceSet current{{"Deuce High", 0}};
  const auto out = agents.add(recs[0].question, kTraceSubs, recs[0].context, current, call);
  EXPECT_TRUE(out.same_members(testing::trace_gold()));
}

TEST(AskRefs, RetriesOnceOnParseFailure) {
  const auto rec = testing::trace_record();
  auto backend = ScriptedBackend::from_replies({"sorry, thinking", R"([["Deuce High", 0]])"});
  Agents agents({.backend = backend});
  AgentCall call;
  const auto out = agents.select(rec.question, kTraceSubs, rec.context, testing::trace_gold(), call);
  EXPECT_EQ(out.size(), 1u);
  EXPECT_NE(std::find(call.flags.begin(), call.flags.end(), "selector_parse_retry"), call.flags.end());
}

TEST(AskRefs, SecondFailurePropagates) {
  const auto rec = testing::trace_record();
  auto backend = ScriptedBackend::from_replies({"no", "still no"});
  Agents agents({.backend = backend});
  AgentCall call;
  EXPECT_THROW(agents.select(rec.question, kTraceSubs, rec.context, testing::trace_gold(), call),
               ParseFailure);
}

TEST(Answer, OracleGivesGoldAnswer) {
  const std::vector<QARecord> recs{testing::trace_record()};
  llm::OracleBackend oracle(recs);
  Agents agents({.backend = oracle});
  AgentCall call;
  call.record_id = recs[0].id;
  EXPECT_EQ(agents.answer(recs[0].question, recs[0].gold_supporting, recs[0].context,
                          AnswerMode::kFactsOnly, call),
            "The King Is The Best Mayor");
}

TEST(Answer, PassthroughAndEmptyEvidence) {
  ScriptedBackend backend(std::vector<llm::ScriptEntry>{{"Evidence: None", "Not Answerable"}, {std::nullopt, " Paris \n"}});
  Agents agents({.backend = backend});
  AgentCall call;
  EXPECT_EQ(agents.answer("q?", {}, {}, AnswerMode::kFactsOnly, call), "Not Answerable");
  EXPECT_EQ(agents.answer("q?", {}, {}, AnswerMode::kFactsOnly, call), "Paris");
}

TEST(RenderEvidence, Modes) {
  const auto rec = testing::trace_record();
  const EvidenceSet ev{{"Rafael Gil", 0}};
  const auto facts = render_evidence(ev, rec.context, AnswerMode::kFactsOnly);
  EXPECT_NE(facts.find("Rafael Gil (May 22, 1913"), std::string::npos);
  EXPECT_EQ(facts.find("seventy films"), std::string::npos);
  const auto passages = render_evidence(ev, rec.context, AnswerMode::kPassages);
  EXPECT_NE(passages.find("seventy films"), std::string::npos);
  EXPECT_EQ(passages.find("Deuce High"), std::string::npos);
  const auto full = render_evidence(ev, rec.context, AnswerMode::kFullContext);
  EXPECT_NE(full.find("Thorpe Park"), std::string::npos);
}

TEST(RenderCandidates, OneLinePerSentence) {
  const std::vector<Passage> ctx{{"T", {"a.", "b."}}};
  EXPECT_EQ(render_candidates(ctx), "\n[\"T\", 0] a.\n[\"T\", 1] b.");
}

}  // namespace
}  // namespace prism
