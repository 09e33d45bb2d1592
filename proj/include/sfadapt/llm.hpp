#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "sfadapt/capr.hpp"
#include "sfadapt/errors.hpp"

namespace sfa {

struct MetaPromptConfig {
  std::string meta_prompt;  // system message
  std::string endpoint;     // http://host[:port][/path]
  std::string model;
  double timeout_s = 60.0;
  int retry = 2;  // extra attempts after a transport failure

  // Throws InvalidArgument on a malformed endpoint, empty model or
  // non-positive timeout.
  void validate() const;
};

// Config with the shipped meta-prompt and nothing else filled in.
MetaPromptConfig default_llm_config();

// Reads endpoint, model, timeout, retry and optionally meta_prompt_file
// (relative to the config file) from TOML or JSON; keys may sit at top level
// or under an [llm] table. JSON is detected by a leading '{'.
MetaPromptConfig load_llm_config(const std::filesystem::path& path);
MetaPromptConfig parse_llm_config(const std::string& text,
                                  const std::filesystem::path& base_dir = {});

struct Endpoint {
  std::string scheme;  // "http"
  std::string host;
  int port = 80;
  std::string path;  // defaults to /v1/chat/completions
};

Endpoint parse_endpoint(std::string_view url);

struct ChatRequest {
  std::string model;
  std::string system;
  std::string user;
  double timeout_s = 60.0;
};

// OpenAI-style chat-completion body, temperature 0.
std::string encode_chat_request(const ChatRequest& req);
// choices[0].message.content; throws TransportError on any other shape.
std::string decode_chat_response(std::string_view body);

// One failed exchange. `raw()` holds whatever came back, possibly empty.
class TransportError : public Error {
 public:
  TransportError(const std::string& what, std::string raw = {})
      : Error(what), raw_(std::move(raw)) {}
  const std::string& raw() const noexcept { return raw_; }

 private:
  std::string raw_;
};

class ChatTransport {
 public:
  virtual ~ChatTransport() = default;
  // Returns the completion text or throws TransportError.
  virtual std::string complete(const ChatRequest& req) = 0;
};

// Plain-HTTP transport. One instance per thread.
class HttpChatTransport : public ChatTransport {
 public:
  explicit HttpChatTransport(std::string endpoint);
  std::string complete(const ChatRequest& req) override;

 private:
  Endpoint endpoint_;
};

enum class LlmErrorKind { kTransportExhausted, kUnparseableCompletion };

class LlmError : public Error {
 public:
  LlmError(LlmErrorKind kind, const std::string& what, std::string raw, int attempts)
      : Error(what), kind_(kind), raw_(std::move(raw)), attempts_(attempts) {}
  LlmErrorKind kind() const noexcept { return kind_; }
  const std::string& raw_response() const noexcept { return raw_; }
  int attempts() const noexcept { return attempts_; }

 private:
  LlmErrorKind kind_;
  std::string raw_;
  int attempts_;
};

// Sends the meta-prompt and the " [SEP] "-joined batch in one request and
// parses the reply with split_batch + parse_canonical. Transport failures are
// retried up to cfg.retry times; a reply that does not parse, or has the
// wrong number of prompts, is rejected without retrying.
std::vector<CanonicalPrompt> canonicalize_llm(const RawPromptBatch& batch,
                                              const MetaPromptConfig& cfg,
                                              ChatTransport& transport,
                                              const Lexicon& lex = default_lexicon());

}  // namespace sfa
