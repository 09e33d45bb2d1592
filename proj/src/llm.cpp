#include "sfadapt/llm.hpp"

#include <charconv>
#include <sstream>

#include "CLI11.hpp"
#include "httplib.h"
#include "json.hpp"
#include "sfadapt/embedded_data.hpp"
#include "sfadapt/log.hpp"
#include "sfadapt/tensor_io.hpp"

namespace sfa {

namespace {

constexpr std::string_view kDefaultPath = "/v1/chat/completions";

double to_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw InvalidArgument("llm config: '" + key + "' must be a number");
  }
  return out;
}

int to_int(const std::string& key, const std::string& v) {
  int out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw InvalidArgument("llm config: '" + key + "' must be an integer");
  }
  return out;
}

void apply_key(MetaPromptConfig& cfg, const std::string& key, const std::string& value,
               const std::filesystem::path& base_dir) {
  if (key == "endpoint") {
    cfg.endpoint = value;
  } else if (key == "model") {
    cfg.model = value;
  } else if (key == "timeout") {
    cfg.timeout_s = to_double(key, value);
  } else if (key == "retry") {
    cfg.retry = to_int(key, value);
  } else if (key == "meta_prompt_file") {
    std::filesystem::path p(value);
    if (p.is_relative()) p = base_dir / p;
    cfg.meta_prompt = read_file(p);
  } else if (key == "meta_prompt") {
    cfg.meta_prompt = value;
  } else {
    log_event(LogLevel::kWarn, "llm_config.ignored_key", {{"key", key}});
  }
}

std::string scalar_text(const nlohmann::json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  if (v.is_number()) return v.dump();
  throw InvalidArgument("llm config: values must be strings or numbers");
}

}  // namespace

void MetaPromptConfig::validate() const {
  parse_endpoint(endpoint);
  if (model.empty()) throw InvalidArgument("llm config: model is required");
  if (!(timeout_s > 0.0)) throw InvalidArgument("llm config: timeout must be > 0");
  if (retry < 0) throw InvalidArgument("llm config: retry must be >= 0");
  if (meta_prompt.empty()) throw InvalidArgument("llm config: empty meta-prompt");
}

MetaPromptConfig default_llm_config() {
  MetaPromptConfig cfg;
  cfg.meta_prompt = std::string(embedded::meta_prompt());
  return cfg;
}

MetaPromptConfig parse_llm_config(const std::string& text,
                                  const std::filesystem::path& base_dir) {
  MetaPromptConfig cfg = default_llm_config();
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') {
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(FormatErrorKind::kMalformedHeader,
                        std::string("llm config: ") + e.what());
    }
    const auto& body = doc.contains("llm") && doc["llm"].is_object() ? doc["llm"] : doc;
    for (const auto& [key, value] : body.items()) {
      if (key == "llm") continue;
      apply_key(cfg, key, scalar_text(value), base_dir);
    }
  } else {
    std::istringstream in(text);
    std::vector<CLI::ConfigItem> items;
    try {
      items = CLI::ConfigTOML().from_config(in);
    } catch (const CLI::Error& e) {
      throw FormatError(FormatErrorKind::kMalformedHeader,
                        std::string("llm config: ") + e.what());
    }
    for (const auto& item : items) {
      if (item.name == "++" || item.name == "--") continue;  // section markers
      if (!item.parents.empty() && !(item.parents.size() == 1 && item.parents[0] == "llm")) {
        continue;
      }
      if (item.inputs.size() != 1) {
        throw InvalidArgument("llm config: '" + item.name + "' must be a scalar");
      }
      apply_key(cfg, item.name, item.inputs[0], base_dir);
    }
  }
  cfg.validate();
  return cfg;
}

MetaPromptConfig load_llm_config(const std::filesystem::path& path) {
  return parse_llm_config(read_file(path), path.parent_path());
}

Endpoint parse_endpoint(std::string_view url) {
  const std::string text(url);
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string_view::npos) {
    throw InvalidArgument("endpoint '" + text + "' has no scheme");
  }
  Endpoint ep;
  ep.scheme = std::string(url.substr(0, scheme_end));
  if (ep.scheme != "http") {
    throw InvalidArgument("endpoint '" + text + "': only http:// is supported");
  }
  std::string_view rest = url.substr(scheme_end + 3);
  const auto slash = rest.find('/');
  std::string_view authority = rest.substr(0, slash);
  ep.path = slash == std::string_view::npos ? std::string(kDefaultPath)
                                            : std::string(rest.substr(slash));
  const auto colon = authority.rfind(':');
  if (colon != std::string_view::npos) {
    const auto port = authority.substr(colon + 1);
    const auto [ptr, ec] = std::from_chars(port.data(), port.data() + port.size(), ep.port);
    if (ec != std::errc() || ptr != port.data() + port.size() || ep.port <= 0 ||
        ep.port > 65535) {
      throw InvalidArgument("endpoint '" + text + "' has an invalid port");
    }
    authority = authority.substr(0, colon);
  }
  if (authority.empty()) throw InvalidArgument("endpoint '" + text + "' has no host");
  ep.host = std::string(authority);
  return ep;
}

std::string encode_chat_request(const ChatRequest& req) {
  nlohmann::ordered_json body;
  body["model"] = req.model;
  body["messages"] = nlohmann::ordered_json::array(
      {{{"role", "system"}, {"content", req.system}},
       {{"role", "user"}, {"content", req.user}}});
  body["temperature"] = 0;
  return body.dump();
}

std::string decode_chat_response(std::string_view body) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(body);
    const auto& content = doc.at("choices").at(0).at("message").at("content");
    if (!content.is_string()) throw TransportError("completion content is not a string", std::string(body));
    return content.get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw TransportError(std::string("malformed chat response: ") + e.what(),
                         std::string(body));
  }
}

HttpChatTransport::HttpChatTransport(std::string endpoint)
    : endpoint_(parse_endpoint(endpoint)) {}

std::string HttpChatTransport::complete(const ChatRequest& req) {
  httplib::Client client(endpoint_.host, endpoint_.port);
  const auto usec = static_cast<long long>(req.timeout_s * 1e6);
  client.set_connection_timeout(usec / 1000000, usec % 1000000);
  client.set_read_timeout(usec / 1000000, usec % 1000000);
  client.set_write_timeout(usec / 1000000, usec % 1000000);
  auto res = client.Post(endpoint_.path, encode_chat_request(req), "application/json");
  if (!res) {
    throw TransportError("http request failed: " + httplib::to_string(res.error()));
  }
  if (res->status != 200) {
    throw TransportError("http status " + std::to_string(res->status), res->body);
  }
  return decode_chat_response(res->body);
}

std::vector<CanonicalPrompt> canonicalize_llm(const RawPromptBatch& batch,
                                              const MetaPromptConfig& cfg,
                                              ChatTransport& transport,
                                              const Lexicon& lex) {
  if (batch.prompts.empty()) throw InvalidArgument("empty batch");
  if (cfg.retry < 0) throw InvalidArgument("llm config: retry must be >= 0");
  const ChatRequest req{cfg.model, cfg.meta_prompt, join_batch(batch.prompts),
                        cfg.timeout_s};

  std::string completion;
  std::string last_raw;
  std::string last_error;
  const int attempts = cfg.retry + 1;
  int attempt = 0;
  for (; attempt < attempts; ++attempt) {
    try {
      completion = transport.complete(req);
      break;
    } catch (const TransportError& e) {
      last_raw = e.raw();
      last_error = e.what();
      log_event(LogLevel::kWarn, "llm.transport_failure",
                {{"attempt", attempt + 1}, {"of", attempts}, {"error", last_error}});
    }
  }
  if (attempt == attempts) {
    throw LlmError(LlmErrorKind::kTransportExhausted,
                   "transport exhausted after " + std::to_string(attempts) +
                       " attempts: " + last_error,
                   last_raw, attempts);
  }

  auto reject = [&](const std::string& why) {
    return LlmError(LlmErrorKind::kUnparseableCompletion,
                    "unparseable completion: " + why, completion, attempt + 1);
  };
  std::vector<CanonicalPrompt> out;
  try {
    for (const auto& p : split_batch(completion).prompts) {
      out.push_back(parse_canonical(p, lex));
    }
  } catch (const Error& e) {
    throw reject(e.what());
  }
  if (out.size() != batch.prompts.size()) {
    throw reject("expected " + std::to_string(batch.prompts.size()) + " prompts, got " +
                 std::to_string(out.size()));
  }
  return out;
}

}  // namespace sfa
