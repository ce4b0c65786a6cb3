#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <string_view>
#include <thread>

#include "pubbie/config.hpp"
#include "pubbie/orchestrator.hpp"

namespace pubbie {

// What an HTTP client sees for a failed request.
struct ApiError {
  std::string code;
  std::string message;
  bool retryable = false;
  int http_status = 500;
};

// Maps an error code to its API form. Messages are fixed per code so that
// engine or provider detail never reaches clients.
ApiError api_error(ErrorCode code);
std::string api_error_json(const ApiError& e);

inline constexpr std::size_t kMaxChatTextBytes = 8 * 1024;

struct ServiceOptions {
  std::size_t max_upload_bytes = 64u << 20;
  bool debug = false;  // include stage traces and warnings in turn bodies
};

struct ExportResponse {
  std::string bytes;
  std::string filename;  // pubbie-export-<UTC timestamp>.csv
  std::string summary;
  ChatTurn turn;
};

// Request-level API over the orchestrator; the HTTP server is a thin adapter
// over this class.
class Service {
 public:
  Service(Orchestrator& orchestrator, ServiceOptions options);

  std::string create_session();
  // TEXT_TOO_LONG over 8 KiB, INVALID_ARGUMENT when blank.
  ChatTurn post_chat(const std::string& session_id, std::string_view text);
  // PAYLOAD_TOO_LARGE over max_upload_bytes.
  ChatTurn post_upload(const std::string& session_id, std::string_view csv);
  ExportResponse get_export(const std::string& session_id);

  // JSON body for a turn; stage_trace and warnings only in debug mode.
  std::string turn_body(const ChatTurn& turn) const;

  const ServiceOptions& options() const { return options_; }

 private:
  Orchestrator& orchestrator_;
  ServiceOptions options_;
};

// Everything `serve`, `ingest`, `eval-nl2sql` and `chat` need, built from a
// validated config.
struct Runtime {
  Config config;
  std::unique_ptr<Store> store;
  std::shared_ptr<llm::Provider> provider;
  std::unique_ptr<Orchestrator> orchestrator;
  std::unique_ptr<Service> service;
};

std::shared_ptr<llm::Provider> make_provider(const Config& config);
// Program predictor for ingest from classifier.model_path; empty when unset.
Labeler make_labeler(const Config& config, std::shared_ptr<llm::Provider> provider);
std::unique_ptr<Runtime> make_runtime(const Config& config, bool debug = false);

// HTTP/JSON API:
//   POST /api/sessions                 -> 201 {"session_id": ...}
//   POST /api/sessions/{id}/chat       {"text": ...} -> turn
//   POST /api/sessions/{id}/upload     CSV body (raw or multipart) -> turn
//   GET  /api/sessions/{id}/export     -> text/csv attachment, X-Pubbie-Summary header
//   GET  /api/health                   -> {"status": "ok"}
//   GET  /health                       -> "ok"
// Errors are {"error": {"code", "message", "retryable"}}.
class HttpServer {
 public:
  explicit HttpServer(Service& service);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  // Port 0 picks a free port. Returns the bound port; CONFIG_ERROR if the
  // address cannot be bound.
  int bind(const std::string& host, int port);
  // Blocks until stop().
  void listen();
  // bind + listen on a background thread.
  int start(const std::string& host, int port);
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace pubbie
