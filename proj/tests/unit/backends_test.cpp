#include <gtest/gtest.h>
#include <httplib.h>

#include <atomic>
#include <fstream>
#include <thread>

#include "prism/error.hpp"
#include "prism/llm/backends.hpp"
#include "prism/llm/parse.hpp"
#include "prism/llm/prompt.hpp"
#include "prism/serialize.hpp"
#include "support.hpp"

namespace prism::llm {
namespace {

ChatRequest request(std::string user, std::string agent = "selector", std::string id = "r") {
  ChatRequest r;
  r.user = std::move(user);
  r.tag = {std::move(agent), std::move(id)};
  return r;
}

TEST(ScriptedBackend, EchoesInOrder) {
  ScriptedBackend b(std::vector<ScriptEntry>{{std::nullopt, R"(["x",0])"}, {std::nullopt, "second"}});
  EXPECT_EQ(b.complete(request("a")).text, R"(["x",0])");
  EXPECT_EQ(b.complete(request("b")).text, "second");
  EXPECT_EQ(b.consumed(), 2u);
  EXPECT_THROW(b.complete(request("c")), ScriptExhausted);
}

TEST(ScriptedBackend, MismatchDoesNotConsume) {
  ScriptedBackend b(std::vector<ScriptEntry>{{"Adder Agent", "[]"}});
  EXPECT_THROW(b.complete(request("You are a Selector Agent")), ScriptMismatch);
  EXPECT_EQ(b.remaining(), 1u);
  EXPECT_EQ(b.complete(request("You are an Adder Agent")).text, "[]");
}

TEST(ScriptedBackend, SameScriptSameReplies) {
  auto run = [] {
    auto b = ScriptedBackend::from_replies({"a", "b", "c"});
    std::string out;
    for (int i = 0; i < 3; ++i) out += b.complete(request("p")).text + "|";
    return out;
  };
  EXPECT_EQ(run(), run());
}

TEST(LoadScript, ArrayAndJsonLines) {
  testing::TempDir dir("script");
  std::ofstream(dir / "a.json") << R"([{"reply": "x"}, {"match": "m", "reply": "y"}])";
  std::ofstream(dir / "b.jsonl") << "{\"reply\": \"x\"}\n\n{\"match\": \"m\", \"reply\": \"y\"}\n";
  for (const auto* name : {"a.json", "b.jsonl"}) {
    const auto s = load_script(dir / name);
    ASSERT_EQ(s.size(), 2u);
    EXPECT_FALSE(s[0].match);
    EXPECT_EQ(*s[1].match, "m");
    EXPECT_EQ(s[1].reply, "y");
  }
  std::ofstream(dir / "bad.json") << R"([{"text": "x"}])";
  EXPECT_THROW(load_script(dir / "bad.json"), SchemaError);
  EXPECT_THROW(load_script(dir / "missing.json"), MissingFile);
}

TEST(OracleBackend, SelectorGetsGoldRefsFromCandidates) {
  const std::vector<QARecord> records{testing::trace_record()};
  OracleBackend oracle(records);
  std::string prompt = "Candidates:\n";
  for (const auto& p : records[0].context) {
    for (std::size_t i = 0; i < p.sentences.size(); ++i) {
      prompt += format_ref({p.title, i}) + " " + p.sentences[i] + "\n";
    }
  }
  const auto reply = oracle.complete(request(prompt, "selector", records[0].id)).text;
  EvidenceSet got(parse_ref_list(reply));
  EXPECT_TRUE(got.same_members(testing::trace_gold()));
  EXPECT_EQ(got.size(), 4u);
}

TEST(OracleBackend, AnalyzerAndAnswer) {
  const std::vector<QARecord> records{testing::trace_record()};
  OracleBackend oracle(records);
  const auto subs = parse_subquestions(oracle.complete(request("x", "analyzer", records[0].id)).text);
  EXPECT_EQ(subs, std::vector<std::string>{records[0].question});
  EXPECT_EQ(oracle.complete(request("x", "answer", records[0].id)).text, "The King Is The Best Mayor");
  EXPECT_THROW(oracle.complete(request("x", "selector", "nope")), BackendError);
}

TEST(RecordingBackend, LogsCalls) {
  auto inner = ScriptedBackend::from_replies({"a", "b"});
  RecordingBackend rec(inner);
  rec.complete(request("p1", "selector"));
  rec.complete(request("p2", "adder"));
  EXPECT_EQ(rec.count("selector"), 1u);
  EXPECT_EQ(rec.count("adder"), 1u);
  ASSERT_EQ(rec.calls().size(), 2u);
  EXPECT_EQ(rec.calls()[1].prompt, "p2");
  EXPECT_EQ(rec.calls()[1].reply, "b");
}

// Local stand-in for a chat completions endpoint.
class FakeUpstream {
 public:
  using Handler = std::function<void(const httplib::Request&, httplib::Response&, int call)>;

  explicit FakeUpstream(Handler handler) : handler_(std::move(handler)) {
    server_.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
      last_body_ = req.body;
      last_auth_ = req.get_header_value("Authorization");
      handler_(req, res, calls_++);
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~FakeUpstream() {
    server_.stop();
    thread_.join();
  }

  OpenAIConfig config(std::string key = "k") const {
    OpenAIConfig c;
    c.base_url = "http://127.0.0.1:" + std::to_string(port_) + "/v1";
    c.api_key = std::move(key);
    c.max_retries = 2;
    c.initial_backoff = std::chrono::milliseconds(1);
    c.max_backoff = std::chrono::milliseconds(5);
    c.timeout = std::chrono::seconds(5);
    return c;
  }
  int calls() const { return calls_; }
  const std::string& last_body() const { return last_body_; }
  const std::string& last_auth() const { return last_auth_; }

 private:
  httplib::Server server_;
  Handler handler_;
  std::thread thread_;
  int port_ = 0;
  std::atomic<int> calls_{0};
  std::string last_body_;
  std::string last_auth_;
};

std::string completion(const std::string& text) {
  return nlohmann::json{{"choices", {{{"message", {{"role", "assistant"}, {"content", text}}}}}},
                        {"usage", {{"prompt_tokens", 7}, {"completion_tokens", 2}}}}
      .dump();
}

TEST(OpenAIBackend, SendsRequestAndDecodesReply) {
  FakeUpstream up([](const auto&, auto& res, int) { res.set_content(completion("Paris"), "application/json"); });
  OpenAIBackend b(up.config("secret"));
  ChatRequest req = request("What is the capital of France?", "answer");
  req.model = "m1";
  req.system = "be brief";
  const auto r = b.complete(req);
  EXPECT_EQ(r.text, "Paris");
  ASSERT_TRUE(r.usage);
  EXPECT_EQ(r.usage->prompt_tokens, 7);
  EXPECT_EQ(up.last_auth(), "Bearer secret");
  const auto body = nlohmann::json::parse(up.last_body());
  EXPECT_EQ(body["model"], "m1");
  EXPECT_EQ(body["temperature"], 0.0);
  ASSERT_EQ(body["messages"].size(), 2u);
  EXPECT_EQ(body["messages"][0]["role"], "system");
  EXPECT_EQ(body["messages"][1]["content"], "What is the capital of France?");
}

TEST(OpenAIBackend, InvalidKeyIsAuthError) {
  FakeUpstream up([](const auto&, auto& res, int) {
    res.status = 401;
    res.set_content(R"({"error": {"message": "bad key"}})", "application/json");
  });
  OpenAIBackend b(up.config("wrong"));
  EXPECT_THROW(b.complete(request("x")), AuthError);
  EXPECT_EQ(up.calls(), 1);
  EXPECT_THROW(OpenAIBackend(up.config("")), AuthError);
}

TEST(OpenAIBackend, RetriesServerErrors) {
  FakeUpstream up([](const auto&, auto& res, int call) {
    if (call < 2) {
      res.status = 503;
      return;
    }
    res.set_content(completion("ok"), "application/json");
  });
  OpenAIBackend b(up.config());
  EXPECT_EQ(b.complete(request("x")).text, "ok");
  EXPECT_EQ(up.calls(), 3);
}

TEST(OpenAIBackend, PersistentRateLimit) {
  FakeUpstream up([](const auto&, auto& res, int) {
    res.status = 429;
    res.set_header("Retry-After", "0");
  });
  OpenAIBackend b(up.config());
  EXPECT_THROW(b.complete(request("x")), RateLimited);
  EXPECT_EQ(up.calls(), 3);
}

TEST(OpenAIBackend, MalformedReply) {
  FakeUpstream up([](const auto&, auto& res, int) { res.set_content(R"({"choices": []})", "application/json"); });
  OpenAIBackend b(up.config());
  EXPECT_THROW(b.complete(request("x")), MalformedUpstream);
}

TEST(OpenAIBackend, ClientErrorIsNotRetried) {
  FakeUpstream up([](const auto&, auto& res, int) { res.status = 400; });
  OpenAIBackend b(up.config());
  EXPECT_THROW(b.complete(request("x")), BackendError);
  EXPECT_EQ(up.calls(), 1);
}

}  // namespace
}  // namespace prism::llm
