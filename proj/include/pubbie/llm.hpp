#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pubbie/error.hpp"
#include "pubbie/linear_head.hpp"

namespace pubbie::llm {

// Pipeline roles: history gate, rewrite, question type, generic answer,
// text-to-SQL, response formulation.
enum class StageId { A1, A2, B, C, D, E };

std::string_view to_string(StageId stage);
std::optional<StageId> stage_from_string(std::string_view text);

enum class Role { System, User, Assistant };
std::string_view to_string(Role role);

struct ChatMessage {
  Role role = Role::User;
  std::string content;
  friend bool operator==(const ChatMessage&, const ChatMessage&) = default;
};

struct StageRequest {
  StageId stage = StageId::B;
  std::vector<ChatMessage> messages;
  double temperature = 0.0;
  std::size_t max_tokens = 0;

  // Request with the stage's default temperature and token budget.
  static StageRequest for_stage(StageId stage, std::vector<ChatMessage> messages);

  // At least one message and the first one is the system prompt; throws
  // INVALID_ARGUMENT otherwise.
  void validate() const;
  // Empty when there is no user message.
  std::string_view last_user_message() const;

  friend bool operator==(const StageRequest&, const StageRequest&) = default;
};

enum class FinishReason { Stop, Length, Error };
std::string_view to_string(FinishReason reason);

struct StageCompletion {
  std::string text;
  FinishReason finish_reason = FinishReason::Stop;
  std::int64_t provider_latency_ms = 0;
  friend bool operator==(const StageCompletion&, const StageCompletion&) = default;
};

// Chat-completion and embedding backend. Implementations are safe to call
// from several threads.
class Provider {
 public:
  virtual ~Provider() = default;
  virtual StageCompletion complete(const StageRequest& request) = 0;
  // One kEmbeddingDim vector per input, in input order.
  virtual std::vector<Embedding> embed(const std::vector<std::string>& texts) = 0;
};

// ---------------------------------------------------------------------------
// Scripted mock

// Matches when the stage agrees (or the entry is a wildcard) and `matcher`
// is a substring of the request's last user message. A response of exactly
// "{echo}" returns the last user message itself.
struct ScriptEntry {
  std::optional<StageId> stage;  // nullopt = any stage ("*")
  std::string matcher;
  std::string response;
  friend bool operator==(const ScriptEntry&, const ScriptEntry&) = default;
};

struct CallRecord {
  StageRequest request;
  StageCompletion response;
  friend bool operator==(const CallRecord&, const CallRecord&) = default;
};

struct MockScript {
  std::vector<ScriptEntry> entries;
  std::vector<CallRecord> call_log;
  friend bool operator==(const MockScript&, const MockScript&) = default;
};

// Script files hold one entry per line: `stage | matcher | response`, where
// stage is A1..E or `*`. Inside fields `\|`, `\\`, `\n`, `\r`, `\t` and `\s`
// (a space, for edge spaces) are escapes. Blank lines and lines starting
// with `#` are ignored. Fields are whitespace-trimmed.
std::string serialize_script(const std::vector<ScriptEntry>& entries);
std::vector<ScriptEntry> parse_script(std::string_view text);  // PARSE_ERROR(line)
MockScript load_script(const std::filesystem::path& path);     // IO_ERROR, PARSE_ERROR
void save_script(const std::filesystem::path& path, const std::vector<ScriptEntry>& entries);

class MockProvider final : public Provider {
 public:
  MockProvider() = default;
  explicit MockProvider(std::vector<ScriptEntry> entries);
  explicit MockProvider(MockScript script) : MockProvider(std::move(script.entries)) {}

  // First matching entry wins. Throws MOCK_NO_MATCH when nothing matches.
  StageCompletion complete(const StageRequest& request) override;
  // Deterministic pseudo-embeddings derived from a hash of each text.
  std::vector<Embedding> embed(const std::vector<std::string>& texts) override;

  void add(ScriptEntry entry);
  // The next `times` calls for `stage` (nullopt = any) throw `code`.
  void inject_failure(std::optional<StageId> stage, ErrorCode code, std::size_t times = 1);

  std::vector<CallRecord> call_log() const;
  MockScript script() const;
  // Writes the call log as a replayable script.
  void record_session(const std::filesystem::path& path) const;

 private:
  struct Fault {
    std::optional<StageId> stage;
    ErrorCode code;
    std::size_t remaining;
  };

  mutable std::mutex mu_;
  std::vector<ScriptEntry> entries_;
  std::vector<CallRecord> log_;
  std::vector<Fault> faults_;
};

// Turns a call log into script entries keyed on each call's last user message.
std::vector<ScriptEntry> script_from_log(const std::vector<CallRecord>& log);

// Deterministic hash-seeded unit-scale vector; what the mock returns.
Embedding pseudo_embedding(std::string_view text);

// ---------------------------------------------------------------------------
// OpenAI-compatible HTTP client

struct HttpConfig {
  std::string endpoint;  // base URL, e.g. http://127.0.0.1:8080/v1
  std::string api_key;
  std::string model = "gpt-35-turbo";
  std::string embed_model = "text-embedding";
  int timeout_ms = 30000;
  int retries = 2;  // extra attempts on transport failure only
};

// POSTs `{endpoint}/chat/completions` and `{endpoint}/embeddings`. Transport
// failures are retried up to `retries` times and then raise
// PROVIDER_UNREACHABLE; any HTTP error status raises PROVIDER_ERROR without
// retrying.
class HttpProvider final : public Provider {
 public:
  explicit HttpProvider(HttpConfig config);
  ~HttpProvider() override;

  StageCompletion complete(const StageRequest& request) override;
  std::vector<Embedding> embed(const std::vector<std::string>& texts) override;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// ---------------------------------------------------------------------------
// Embedding cache

// Maps sha256(text) to a stored vector. File format: one line per entry,
// `<64 hex chars> <768 space-separated decimals>`.
class EmbeddingCache {
 public:
  EmbeddingCache() = default;

  static std::shared_ptr<EmbeddingCache> load(const std::filesystem::path& path);  // IO_ERROR, PARSE_ERROR
  void save(const std::filesystem::path& path) const;

  std::optional<Embedding> get(std::string_view text) const;
  std::optional<Embedding> get_by_hash(const std::string& hash) const;
  void put(std::string_view text, Embedding vector);
  std::size_t size() const;

 private:
  mutable std::mutex mu_;
  std::map<std::string, Embedding> entries_;
};

// Answers embed() from the cache. Misses go to `upstream` (and are cached)
// unless the provider is offline or has no upstream, in which case they
// raise CACHE_MISS carrying the text hash. complete() is forwarded to
// `upstream`; without one it raises PROVIDER_UNREACHABLE.
class CachedProvider final : public Provider {
 public:
  CachedProvider(std::shared_ptr<EmbeddingCache> cache, std::shared_ptr<Provider> upstream = nullptr,
                 bool offline = false);

  StageCompletion complete(const StageRequest& request) override;
  std::vector<Embedding> embed(const std::vector<std::string>& texts) override;

 private:
  std::shared_ptr<EmbeddingCache> cache_;
  std::shared_ptr<Provider> upstream_;
  bool offline_;
};

// Throws DIMENSION_MISMATCH unless every vector has kEmbeddingDim entries.
void check_embedding_width(const std::vector<Embedding>& vectors);

}  // namespace pubbie::llm
