#include "pubbie/service.hpp"

#include <chrono>
#include <ctime>
#include <json.hpp>

#include "pubbie/features.hpp"
#include "pubbie/model_io.hpp"
#include "pubbie/naive_bayes.hpp"
#include "pubbie/strings.hpp"

namespace pubbie {
namespace {

using json = nlohmann::json;

std::string export_filename() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[40];
  std::strftime(buf, sizeof buf, "pubbie-export-%Y%m%dT%H%M%SZ.csv", &tm);
  return buf;
}

json error_object(ErrorCode code) {
  const auto e = api_error(code);
  return {{"code", e.code}, {"message", e.message}, {"retryable", e.retryable}};
}

}  // namespace

ApiError api_error(ErrorCode code) {
  ApiError e;
  e.code = std::string(to_string(code));
  switch (code) {
    case ErrorCode::SessionNotFound:
      e = {e.code, "Session not found.", false, 404};
      break;
    case ErrorCode::NotFound:
      e = {e.code, "No such endpoint.", false, 404};
      break;
    case ErrorCode::TextTooLong:
      e = {e.code, "Message text is longer than 8 KiB.", false, 400};
      break;
    case ErrorCode::PayloadTooLarge:
      e = {e.code, "Upload is larger than the server limit.", false, 413};
      break;
    case ErrorCode::InvalidArgument:
      e = {e.code, "The request is missing a field or has an invalid value.", false, 400};
      break;
    case ErrorCode::ParseError:
      e = {e.code, "The request body could not be parsed.", false, 400};
      break;
    case ErrorCode::EmptyInput:
      e = {e.code, "The uploaded file is empty.", false, 400};
      break;
    case ErrorCode::HeaderMissingRequired:
      e = {e.code, "The uploaded file lacks a required column (eid, title).", false, 400};
      break;
    case ErrorCode::SessionBusy:
      e = {e.code, "Another request is in progress for this session.", true, 409};
      break;
    case ErrorCode::NoResultToExport:
      e = {e.code, "There is no query result to export yet. Ask a question that retrieves data first.", false,
           409};
      break;
    case ErrorCode::SqlGenerationFailed:
    case ErrorCode::ExecError:
      e = {e.code, "The request could not be translated into a valid database query.", false, 422};
      break;
    case ErrorCode::ProviderUnreachable:
      e = {e.code, "The language model service could not be reached.", true, 503};
      break;
    case ErrorCode::ProviderError:
    case ErrorCode::MockNoMatch:
    case ErrorCode::CacheMiss:
      e = {e.code, "The language model service returned an error.", true, 502};
      break;
    case ErrorCode::StoreUnavailable:
      e = {e.code, "The database is unavailable.", true, 503};
      break;
    case ErrorCode::StoreCorrupt:
      e = {e.code, "The database is damaged.", false, 500};
      break;
    case ErrorCode::UnparseableStageOutput:
      e = {e.code, "The language model returned an unexpected answer.", true, 502};
      break;
    default:
      e = {e.code, "The request failed because of an internal error.", false, 500};
      break;
  }
  return e;
}

std::string api_error_json(const ApiError& e) {
  return json{{"error", {{"code", e.code}, {"message", e.message}, {"retryable", e.retryable}}}}.dump();
}

Service::Service(Orchestrator& orchestrator, ServiceOptions options)
    : orchestrator_(orchestrator), options_(options) {}

std::string Service::create_session() { return orchestrator_.create_session(); }

ChatTurn Service::post_chat(const std::string& session_id, std::string_view text) {
  if (text.size() > kMaxChatTextBytes) throw Error(ErrorCode::TextTooLong, "message text exceeds 8 KiB");
  if (strings::trim(text).empty()) throw Error(ErrorCode::InvalidArgument, "message text is empty");
  return orchestrator_.handle_turn(session_id, text);
}

ChatTurn Service::post_upload(const std::string& session_id, std::string_view csv) {
  if (csv.size() > options_.max_upload_bytes) throw Error(ErrorCode::PayloadTooLarge, "upload too large");
  return orchestrator_.run_ingest_workflow(session_id, csv);
}

ExportResponse Service::get_export(const std::string& session_id) {
  auto result = orchestrator_.run_export_workflow(session_id);
  ExportResponse out;
  out.bytes = std::move(result.bytes);
  out.filename = export_filename();
  out.summary = result.turn.agent_text;
  out.turn = std::move(result.turn);
  return out;
}

std::string Service::turn_body(const ChatTurn& t) const {
  auto opt = [](const std::optional<std::string>& v) { return v ? json(*v) : json(nullptr); };
  json j{{"seq", t.seq},
         {"kind", to_string(t.kind)},
         {"user_text", t.user_text},
         {"rewritten_text", t.rewritten_text},
         {"question_type", t.question_type ? json(to_string(*t.question_type)) : json(nullptr)},
         {"sql", opt(t.sql)},
         {"sql_result", opt(t.sql_result_summary)},
         {"summary", opt(t.workflow_summary)},
         {"agent_text", t.agent_text},
         {"finish_reason", llm::to_string(t.finish_reason)},
         {"error", t.error ? error_object(*t.error) : json(nullptr)}};
  if (options_.debug) {
    json trace = json::array();
    for (const auto& e : t.stage_trace) trace.push_back({{"stage", llm::to_string(e.stage)}, {"text", e.text}});
    j["stage_trace"] = std::move(trace);
    j["warnings"] = t.warnings;
  }
  return j.dump();
}

// ---------------------------------------------------------------------------

std::shared_ptr<llm::Provider> make_provider(const Config& config) {
  std::shared_ptr<llm::Provider> upstream;
  if (config.llm_provider == "mock") {
    auto script = config.llm_mock_script.empty() ? llm::MockScript{} : llm::load_script(config.llm_mock_script);
    upstream = std::make_shared<llm::MockProvider>(std::move(script));
  } else {
    llm::HttpConfig http;
    http.endpoint = config.llm_endpoint;
    if (const char* key = std::getenv(config.llm_api_key_env.c_str())) http.api_key = key;
    http.model = config.llm_model;
    http.embed_model = config.llm_embed_model;
    http.timeout_ms = config.llm_timeout_ms;
    http.retries = config.llm_retries;
    upstream = std::make_shared<llm::HttpProvider>(std::move(http));
  }
  if (config.llm_embedding_cache.empty()) return upstream;
  std::error_code ec;
  auto cache = std::filesystem::exists(config.llm_embedding_cache, ec)
                   ? llm::EmbeddingCache::load(config.llm_embedding_cache)
                   : std::make_shared<llm::EmbeddingCache>();
  return std::make_shared<llm::CachedProvider>(std::move(cache), std::move(upstream), config.llm_offline);
}

Labeler make_labeler(const Config& config, std::shared_ptr<llm::Provider> provider) {
  if (config.classifier_model_path.empty()) return {};
  auto model = std::make_shared<const Model>(load_model(config.classifier_model_path));
  if (std::holds_alternative<BowModel>(*model)) {
    return [model](const Publication& pub) {
      return predict_nb(std::get<BowModel>(*model), render_features(pub)).label;
    };
  }
  return [model, provider](const Publication& pub) {
    const auto vectors = provider->embed({render_features(pub).rendered});
    return predict_linear(std::get<LinearHead>(*model), vectors.front()).label;
  };
}

std::unique_ptr<Runtime> make_runtime(const Config& config, bool debug) {
  config.validate();
  auto rt = std::make_unique<Runtime>();
  rt->config = config;
  rt->store = std::make_unique<Store>(config.store_path);
  rt->provider = make_provider(config);

  OrchestratorConfig oc;
  oc.history_window = config.history_window;
  oc.retrieval_k = config.retrieval_k;
  oc.busy_policy = config.server_busy_policy == "reject" ? BusyPolicy::Reject : BusyPolicy::Wait;
  auto templates = config.templates_dir.empty() ? TemplateRegistry{} : TemplateRegistry::load_dir(config.templates_dir);
  rt->orchestrator = std::make_unique<Orchestrator>(*rt->store, rt->provider, std::move(templates), oc,
                                                    make_labeler(config, rt->provider));
  rt->service = std::make_unique<Service>(*rt->orchestrator, ServiceOptions{config.server_max_upload_bytes, debug});
  return rt;
}

}  // namespace pubbie
