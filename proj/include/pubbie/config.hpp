#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>

namespace pubbie {

// Flat `key = value` file, one setting per line; `#` starts a comment line.
// Unknown keys and malformed values are CONFIG_ERROR. Relative paths are
// resolved against the config file's directory.
struct Config {
  std::string store_path = "pubbie.db";

  std::string llm_provider = "http";  // "http" or "mock"
  std::string llm_endpoint = "http://127.0.0.1:8000/v1";
  std::string llm_api_key_env = "PUBBIE_API_KEY";
  std::string llm_model = "gpt-35-turbo";
  std::string llm_embed_model = "text-embedding";
  int llm_timeout_ms = 30000;
  int llm_retries = 2;
  std::string llm_mock_script;      // mock provider only
  std::string llm_embedding_cache;  // optional
  bool llm_offline = false;         // embedding cache misses are errors

  std::string templates_dir;  // empty: built-in templates
  std::size_t history_window = 6;
  std::string server_bind_addr = "127.0.0.1:8080";
  std::size_t server_max_upload_bytes = 64u << 20;
  std::string server_busy_policy = "wait";  // "wait" or "reject"
  std::string classifier_model_path;        // empty: unlabeled rows get No Program
  std::size_t retrieval_k = 5;

  static Config parse(std::string_view text, const std::filesystem::path& base_dir = {});
  static Config load(const std::filesystem::path& path);

  // Checks value ranges and that every configured input path exists.
  void validate() const;
};

// "host:port" split; CONFIG_ERROR when malformed.
std::pair<std::string, int> split_bind_addr(const std::string& addr);

}  // namespace pubbie
