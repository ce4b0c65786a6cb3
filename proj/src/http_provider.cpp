#include <httplib.h>

#include <chrono>
#include <json.hpp>

#include "pubbie/llm.hpp"

namespace pubbie::llm {
namespace {

using json = nlohmann::json;

struct ParsedUrl {
  std::string origin;  // scheme://host[:port]
  std::string base_path;
};

ParsedUrl parse_endpoint(const std::string& endpoint) {
  const auto scheme_end = endpoint.find("://");
  if (scheme_end == std::string::npos) {
    throw Error(ErrorCode::ConfigError, "llm.endpoint must be an http(s) URL: '" + endpoint + "'");
  }
  const auto path_start = endpoint.find('/', scheme_end + 3);
  ParsedUrl url;
  url.origin = endpoint.substr(0, path_start);
  url.base_path = path_start == std::string::npos ? "" : endpoint.substr(path_start);
  while (!url.base_path.empty() && url.base_path.back() == '/') url.base_path.pop_back();
  return url;
}

}  // namespace

struct HttpProvider::Impl {
  HttpConfig config;
  ParsedUrl url;

  json post(const std::string& route, const json& body) {
    httplib::Client client(url.origin);
    const auto timeout = std::chrono::milliseconds(config.timeout_ms);
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);
    httplib::Headers headers;
    if (!config.api_key.empty()) {
      headers.emplace("Authorization", "Bearer " + config.api_key);
      headers.emplace("api-key", config.api_key);  // Azure OpenAI
    }
    const std::string payload = body.dump();
    const std::string path = url.base_path + route;

    std::string transport_error;
    for (int attempt = 0; attempt <= std::max(0, config.retries); ++attempt) {
      auto res = client.Post(path, headers, payload, "application/json");
      if (!res) {
        transport_error = httplib::to_string(res.error());
        continue;
      }
      if (res->status < 200 || res->status >= 300) {
        throw Error(ErrorCode::ProviderError,
                    "provider returned HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 500),
                    static_cast<std::size_t>(res->status));
      }
      try {
        return json::parse(res->body);
      } catch (const json::exception& e) {
        throw Error(ErrorCode::ProviderError, std::string("provider returned malformed JSON: ") + e.what(),
                    static_cast<std::size_t>(res->status));
      }
    }
    throw Error(ErrorCode::ProviderUnreachable,
                "cannot reach " + url.origin + path + ": " + transport_error);
  }
};

HttpProvider::HttpProvider(HttpConfig config) : impl_(std::make_unique<Impl>()) {
  impl_->url = parse_endpoint(config.endpoint);
  impl_->config = std::move(config);
}

HttpProvider::~HttpProvider() = default;

StageCompletion HttpProvider::complete(const StageRequest& request) {
  request.validate();
  json messages = json::array();
  for (const auto& m : request.messages) {
    messages.push_back({{"role", to_string(m.role)}, {"content", m.content}});
  }
  const json body{{"model", impl_->config.model},
                  {"messages", messages},
                  {"temperature", request.temperature},
                  {"max_tokens", request.max_tokens}};

  const auto started = std::chrono::steady_clock::now();
  const json res = impl_->post("/chat/completions", body);
  StageCompletion out;
  out.provider_latency_ms =
      std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - started).count();
  try {
    const auto& choice = res.at("choices").at(0);
    const auto& content = choice.at("message").at("content");
    out.text = content.is_null() ? std::string() : content.get<std::string>();
    const std::string reason = choice.value("finish_reason", "stop");
    out.finish_reason = reason == "length" ? FinishReason::Length : FinishReason::Stop;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ProviderError, std::string("unexpected completion payload: ") + e.what());
  }
  return out;
}

std::vector<Embedding> HttpProvider::embed(const std::vector<std::string>& texts) {
  if (texts.empty()) throw Error(ErrorCode::InvalidArgument, "embed needs at least one text");
  const json body{{"model", impl_->config.embed_model}, {"input", texts}};
  const json res = impl_->post("/embeddings", body);
  std::vector<Embedding> out(texts.size());
  try {
    const auto& data = res.at("data");
    if (data.size() != texts.size()) {
      throw Error(ErrorCode::ProviderError, "provider returned " + std::to_string(data.size()) +
                                                " embeddings for " + std::to_string(texts.size()) + " inputs");
    }
    for (std::size_t i = 0; i < data.size(); ++i) {
      const std::size_t index = data[i].value("index", i);
      if (index >= out.size()) throw Error(ErrorCode::ProviderError, "embedding index out of range");
      out[index] = data[i].at("embedding").get<Embedding>();
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ProviderError, std::string("unexpected embedding payload: ") + e.what());
  }
  check_embedding_width(out);
  return out;
}

}  // namespace pubbie::llm
