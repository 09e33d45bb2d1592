#include <gtest/gtest.h>

#include <deque>
#include <sstream>
#include <thread>

#include "fixtures.hpp"
#include "httplib.h"
#include "json.hpp"
#include "sfadapt/llm.hpp"
#include "sfadapt/log.hpp"
#include "sfadapt/tensor_io.hpp"

using namespace sfa;

namespace {

// Replays a script of replies; an empty optional means "transport failure".
class ScriptedTransport : public ChatTransport {
 public:
  explicit ScriptedTransport(std::deque<std::optional<std::string>> script)
      : script_(std::move(script)) {}

  std::string complete(const ChatRequest& req) override {
    requests.push_back(req);
    if (script_.empty()) throw TransportError("script exhausted");
    auto next = script_.front();
    script_.pop_front();
    if (!next) throw TransportError("connection refused", "503 body");
    return *next;
  }

  std::vector<ChatRequest> requests;

 private:
  std::deque<std::optional<std::string>> script_;
};

MetaPromptConfig config(int retry = 2) {
  auto cfg = default_llm_config();
  cfg.endpoint = "http://127.0.0.1:9/v1/chat/completions";
  cfg.model = "test-model";
  cfg.retry = retry;
  return cfg;
}

const RawPromptBatch kBatch{{"Liverr", "Spleen CT", "Abdomen duodenum"}};
const std::string kReply =
    "Liver in abdomen CT. [SEP] Spleen in abdomen CT. [SEP] Duodenum in abdomen CT.";

// Silences warnings the retry path logs.
struct QuietLog {
  std::ostringstream sink;
  QuietLog() { set_log_sink(&sink); }
  ~QuietLog() { set_log_sink(nullptr); }
};

}  // namespace

TEST(Llm, SuccessOnFirstAttempt) {
  ScriptedTransport t({kReply});
  const auto out = canonicalize_llm(kBatch, config(), t);
  ASSERT_EQ(out.size(), 3u);
  EXPECT_EQ(emit_canonical(out[2]), "Duodenum in abdomen CT.");
  ASSERT_EQ(t.requests.size(), 1u);
  EXPECT_EQ(t.requests[0].user, "Liverr [SEP] Spleen CT [SEP] Abdomen duodenum");
  EXPECT_EQ(t.requests[0].model, "test-model");
  EXPECT_FALSE(t.requests[0].system.empty());
}

TEST(Llm, RetriesTransportFailures) {
  QuietLog quiet;
  ScriptedTransport t({std::nullopt, std::nullopt, kReply});
  const auto out = canonicalize_llm(kBatch, config(3), t);
  EXPECT_EQ(out.size(), 3u);
  EXPECT_EQ(t.requests.size(), 3u);
  EXPECT_NE(quiet.sink.str().find("llm.transport_failure"), std::string::npos);
}

TEST(Llm, TransportExhausted) {
  QuietLog quiet;
  ScriptedTransport t({std::nullopt, std::nullopt, std::nullopt, kReply});
  try {
    canonicalize_llm(kBatch, config(2), t);
    FAIL();
  } catch (const LlmError& e) {
    EXPECT_EQ(e.kind(), LlmErrorKind::kTransportExhausted);
    EXPECT_EQ(e.attempts(), 3);
    EXPECT_EQ(e.raw_response(), "503 body");
    EXPECT_EQ(std::string(e.what()).rfind("transport exhausted after 3 attempts", 0), 0u);
  }
  EXPECT_EQ(t.requests.size(), 3u);
}

TEST(Llm, UnparseableReplyIsNotRetried) {
  ScriptedTransport t({"no idea", kReply});
  try {
    canonicalize_llm(kBatch, config(3), t);
    FAIL();
  } catch (const LlmError& e) {
    EXPECT_EQ(e.kind(), LlmErrorKind::kUnparseableCompletion);
    EXPECT_EQ(e.raw_response(), "no idea");
    EXPECT_EQ(e.attempts(), 1);
  }
  EXPECT_EQ(t.requests.size(), 1u);
}

TEST(Llm, WrongPromptCountRejected) {
  ScriptedTransport t({"Liver in abdomen CT."});
  try {
    canonicalize_llm(kBatch, config(), t);
    FAIL();
  } catch (const LlmError& e) {
    EXPECT_EQ(e.kind(), LlmErrorKind::kUnparseableCompletion);
    EXPECT_NE(std::string(e.what()).find("expected 3 prompts, got 1"), std::string::npos);
  }
}

TEST(Llm, RequestBodyShape) {
  const auto body = nlohmann::json::parse(
      encode_chat_request({"m", "sys", "a [SEP] b", 5.0}));
  EXPECT_EQ(body["model"], "m");
  EXPECT_EQ(body["temperature"], 0);
  ASSERT_EQ(body["messages"].size(), 2u);
  EXPECT_EQ(body["messages"][0]["role"], "system");
  EXPECT_EQ(body["messages"][0]["content"], "sys");
  EXPECT_EQ(body["messages"][1]["role"], "user");
  EXPECT_EQ(body["messages"][1]["content"], "a [SEP] b");
}

TEST(Llm, ResponseEnvelope) {
  EXPECT_EQ(decode_chat_response(R"({"choices":[{"message":{"role":"assistant","content":"x"}}]})"),
            "x");
  EXPECT_THROW(decode_chat_response(R"({"choices":[]})"), TransportError);
  EXPECT_THROW(decode_chat_response("<html>"), TransportError);
  EXPECT_THROW(decode_chat_response(R"({"choices":[{"message":{"content":3}}]})"),
               TransportError);
}

TEST(Endpoint, Parse) {
  auto ep = parse_endpoint("http://localhost:8080/v1/chat/completions");
  EXPECT_EQ(ep.host, "localhost");
  EXPECT_EQ(ep.port, 8080);
  EXPECT_EQ(ep.path, "/v1/chat/completions");
  ep = parse_endpoint("http://llm.internal");
  EXPECT_EQ(ep.port, 80);
  EXPECT_EQ(ep.path, "/v1/chat/completions");
  EXPECT_THROW(parse_endpoint("https://x"), InvalidArgument);
  EXPECT_THROW(parse_endpoint("localhost:80"), InvalidArgument);
  EXPECT_THROW(parse_endpoint("http://:80"), InvalidArgument);
  EXPECT_THROW(parse_endpoint("http://h:99999"), InvalidArgument);
}

TEST(LlmConfig, TomlWithSectionAndPromptFile) {
  fixtures::TempDir tmp;
  write_file(tmp / "prompt.txt", "custom meta prompt");
  write_file(tmp / "llm.toml",
             "[llm]\n"
             "endpoint = \"http://127.0.0.1:8000/v1/chat/completions\"\n"
             "model = \"gpt-x\"\n"
             "timeout = 2.5\n"
             "retry = 4\n"
             "meta_prompt_file = \"prompt.txt\"\n");
  const auto cfg = load_llm_config(tmp / "llm.toml");
  EXPECT_EQ(cfg.model, "gpt-x");
  EXPECT_DOUBLE_EQ(cfg.timeout_s, 2.5);
  EXPECT_EQ(cfg.retry, 4);
  EXPECT_EQ(cfg.meta_prompt, "custom meta prompt");
}

TEST(LlmConfig, JsonTopLevelAndDefaults) {
  const auto cfg = parse_llm_config(R"({"endpoint": "http://h", "model": "m"})");
  EXPECT_EQ(cfg.retry, 2);
  EXPECT_DOUBLE_EQ(cfg.timeout_s, 60.0);
  EXPECT_EQ(cfg.meta_prompt, default_llm_config().meta_prompt);
}

TEST(LlmConfig, Errors) {
  EXPECT_THROW(parse_llm_config("endpoint = \"http://h\"\n"), InvalidArgument);  // no model
  EXPECT_THROW(parse_llm_config("endpoint = \"ftp://h\"\nmodel = \"m\"\n"), InvalidArgument);
  EXPECT_THROW(parse_llm_config("endpoint = \"http://h\"\nmodel = \"m\"\ntimeout = 0\n"),
               InvalidArgument);
  EXPECT_THROW(parse_llm_config("endpoint = \"http://h\"\nmodel = \"m\"\nretry = \"x\"\n"),
               InvalidArgument);
  EXPECT_THROW(parse_llm_config("{\"model\": "), FormatError);
}

TEST(HttpTransport, LoopbackServer) {
  httplib::Server server;
  std::string seen_body;
  server.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
    seen_body = req.body;
    nlohmann::json reply;
    reply["choices"] = {{{"message", {{"role", "assistant"}, {"content", kReply}}}}};
    res.set_content(reply.dump(), "application/json");
  });
  server.Post("/fail", [](const httplib::Request&, httplib::Response& res) {
    res.status = 500;
    res.set_content("overloaded", "text/plain");
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  ASSERT_GT(port, 0);
  std::thread worker([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  auto cfg = config(0);
  cfg.endpoint = "http://127.0.0.1:" + std::to_string(port) + "/v1/chat/completions";
  cfg.timeout_s = 5;
  HttpChatTransport ok(cfg.endpoint);
  const auto out = canonicalize_llm(kBatch, cfg, ok);
  EXPECT_EQ(out.size(), 3u);
  EXPECT_EQ(nlohmann::json::parse(seen_body)["messages"][1]["content"],
            "Liverr [SEP] Spleen CT [SEP] Abdomen duodenum");

  HttpChatTransport bad("http://127.0.0.1:" + std::to_string(port) + "/fail");
  try {
    bad.complete({"m", "s", "u", 5});
    FAIL();
  } catch (const TransportError& e) {
    EXPECT_EQ(e.raw(), "overloaded");
  }

  server.stop();
  worker.join();
}
