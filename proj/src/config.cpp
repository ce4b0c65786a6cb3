#include "pubbie/config.hpp"

#include <charconv>
#include <functional>
#include <map>

#include "pubbie/error.hpp"
#include "pubbie/file_util.hpp"
#include "pubbie/strings.hpp"

namespace pubbie {
namespace {

[[noreturn]] void config_error(const std::string& msg) { throw Error(ErrorCode::ConfigError, msg); }

template <typename T>
T parse_number(std::string_view key, std::string_view value) {
  T out{};
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    config_error(std::string(key) + ": expected a non-negative integer, got '" + std::string(value) + "'");
  }
  return out;
}

bool parse_bool(std::string_view key, std::string_view value) {
  const auto v = strings::to_lower(value);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  config_error(std::string(key) + ": expected true or false, got '" + std::string(value) + "'");
}

std::string resolve(const std::filesystem::path& base, std::string_view value) {
  if (value.empty() || value == ":memory:" || base.empty()) return std::string(value);
  const std::filesystem::path p(value);
  return p.is_absolute() ? p.string() : (base / p).lexically_normal().string();
}

}  // namespace

Config Config::parse(std::string_view text, const std::filesystem::path& base_dir) {
  Config c;
  using Setter = std::function<void(std::string_view)>;
  auto path = [&base_dir](std::string& field) -> Setter {
    return [&base_dir, &field](std::string_view v) { field = resolve(base_dir, v); };
  };
  auto str = [](std::string& field) -> Setter { return [&field](std::string_view v) { field = std::string(v); }; };
  std::map<std::string, Setter, std::less<>> setters{
      {"store.path", path(c.store_path)},
      {"llm.provider", str(c.llm_provider)},
      {"llm.endpoint", str(c.llm_endpoint)},
      {"llm.api_key_env", str(c.llm_api_key_env)},
      {"llm.model", str(c.llm_model)},
      {"llm.embed_model", str(c.llm_embed_model)},
      {"llm.timeout_ms", [&](std::string_view v) { c.llm_timeout_ms = parse_number<int>("llm.timeout_ms", v); }},
      {"llm.retries", [&](std::string_view v) { c.llm_retries = parse_number<int>("llm.retries", v); }},
      {"llm.mock_script", path(c.llm_mock_script)},
      {"llm.embedding_cache", path(c.llm_embedding_cache)},
      {"llm.offline", [&](std::string_view v) { c.llm_offline = parse_bool("llm.offline", v); }},
      {"templates.dir", path(c.templates_dir)},
      {"history.window",
       [&](std::string_view v) { c.history_window = parse_number<std::size_t>("history.window", v); }},
      {"server.bind_addr", str(c.server_bind_addr)},
      {"server.max_upload_bytes",
       [&](std::string_view v) {
         c.server_max_upload_bytes = parse_number<std::size_t>("server.max_upload_bytes", v);
       }},
      {"server.busy_policy", str(c.server_busy_policy)},
      {"classifier.model_path", path(c.classifier_model_path)},
      {"retrieval.k", [&](std::string_view v) { c.retrieval_k = parse_number<std::size_t>("retrieval.k", v); }},
  };

  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < text.size()) {
    const auto end = text.find('\n', pos);
    const auto line =
        strings::trim(text.substr(pos, end == std::string_view::npos ? std::string_view::npos : end - pos));
    pos = end == std::string_view::npos ? text.size() : end + 1;
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      config_error("config line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    const auto key = strings::trim(line.substr(0, eq));
    const auto value = strings::trim(line.substr(eq + 1));
    const auto it = setters.find(key);
    if (it == setters.end()) {
      config_error("config line " + std::to_string(line_no) + ": unknown key '" + std::string(key) + "'");
    }
    it->second(value);
  }
  return c;
}

Config Config::load(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const Error& e) {
    config_error(std::string("cannot read config: ") + e.what());
  }
  return parse(text, path.parent_path().empty() ? std::filesystem::path(".") : path.parent_path());
}

void Config::validate() const {
  namespace fs = std::filesystem;
  std::error_code ec;
  if (llm_provider != "http" && llm_provider != "mock") config_error("llm.provider must be 'http' or 'mock'");
  if (llm_provider == "http" && llm_endpoint.empty()) config_error("llm.endpoint is required for the http provider");
  if (llm_provider == "mock" && !llm_mock_script.empty() && !fs::exists(llm_mock_script, ec)) {
    config_error("llm.mock_script not found: " + llm_mock_script);
  }
  if (llm_offline && llm_embedding_cache.empty()) config_error("llm.offline needs llm.embedding_cache");
  if (!templates_dir.empty() && !fs::is_directory(templates_dir, ec)) {
    config_error("templates.dir not found: " + templates_dir);
  }
  if (!classifier_model_path.empty() && !fs::exists(classifier_model_path, ec)) {
    config_error("classifier.model_path not found: " + classifier_model_path);
  }
  if (store_path != ":memory:") {
    const auto parent = fs::path(store_path).parent_path();
    if (!parent.empty() && !fs::is_directory(parent, ec)) {
      config_error("directory for store.path does not exist: " + parent.string());
    }
  }
  if (server_max_upload_bytes < (1u << 20)) config_error("server.max_upload_bytes must be at least 1 MiB");
  if (server_busy_policy != "wait" && server_busy_policy != "reject") {
    config_error("server.busy_policy must be 'wait' or 'reject'");
  }
  if (retrieval_k == 0) config_error("retrieval.k must be positive");
  split_bind_addr(server_bind_addr);
}

std::pair<std::string, int> split_bind_addr(const std::string& addr) {
  const auto colon = addr.rfind(':');
  if (colon == std::string::npos || colon == 0) config_error("server.bind_addr must be host:port");
  const auto port = parse_number<int>("server.bind_addr port", std::string_view(addr).substr(colon + 1));
  if (port > 65535) config_error("server.bind_addr port out of range");
  return {addr.substr(0, colon), port};
}

}  // namespace pubbie
