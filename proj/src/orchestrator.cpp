#include "pubbie/orchestrator.hpp"

#include <cctype>
#include <chrono>
#include <ctime>

#include "pubbie/crypto.hpp"
#include "pubbie/strings.hpp"

namespace pubbie {
namespace {

using llm::StageId;

constexpr std::string_view kUploadPrompt =
    "I uploaded a CSV file of publications. Confirm that the upload is complete and summarize the result.";
constexpr std::string_view kExportPrompt =
    "I downloaded the last query result as a CSV file. Summarize what the file contains.";

std::string utc_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// Errors that end the request instead of becoming agent text.
bool is_fatal(ErrorCode code) {
  return code == ErrorCode::StoreUnavailable || code == ErrorCode::StoreCorrupt ||
         code == ErrorCode::SessionNotFound || code == ErrorCode::SessionBusy;
}

// Leading run of letters, digits and underscores, uppercased.
std::string first_word(std::string_view text) {
  auto t = strings::trim(text);
  while (!t.empty() && (t.front() == '"' || t.front() == '\'' || t.front() == '`' || t.front() == '*')) {
    t.remove_prefix(1);
  }
  std::size_t n = 0;
  while (n < t.size() && (std::isalnum(static_cast<unsigned char>(t[n])) || t[n] == '_')) ++n;
  return strings::to_upper(t.substr(0, n));
}

std::string label_list() {
  std::string out;
  for (std::size_t i = 0; i < ProgramLabel::kCount; ++i) {
    if (!out.empty()) out += '\n';
    out += "- ";
    out += ProgramLabel::from_index(i).name();
  }
  return out;
}

std::string plural(std::size_t n, std::string_view word) {
  return std::to_string(n) + " " + std::string(word) + (n == 1 ? "" : "s");
}

}  // namespace

Orchestrator::Orchestrator(Store& store, std::shared_ptr<llm::Provider> provider, TemplateRegistry templates,
                           OrchestratorConfig config, Labeler labeler)
    : store_(store),
      provider_(std::move(provider)),
      templates_(std::move(templates)),
      config_(config),
      labeler_(std::move(labeler)) {
  if (!provider_) throw Error(ErrorCode::InvalidArgument, "orchestrator needs a provider");
  refresh_index();
}

void Orchestrator::refresh_index() {
  RetrievalIndex fresh(store_.all_publications());
  std::unique_lock lock(index_mu_);
  index_ = std::move(fresh);
}

// ---------------------------------------------------------------------------
// Sessions

std::string Orchestrator::create_session() {
  const std::string id = random_token(16);
  const std::string created = utc_now();
  store_.create_session(id, created);
  auto slot = std::make_shared<Slot>();
  slot->session = ChatSession{id, created, {}, std::nullopt};
  std::lock_guard lock(slots_mu_);
  slots_[id] = std::move(slot);
  return id;
}

bool Orchestrator::session_exists(const std::string& id) const {
  {
    std::lock_guard lock(slots_mu_);
    if (slots_.count(id)) return true;
  }
  return store_.session_exists(id);
}

std::shared_ptr<Orchestrator::Slot> Orchestrator::slot_for(const std::string& id) const {
  std::lock_guard lock(slots_mu_);
  if (auto it = slots_.find(id); it != slots_.end()) return it->second;
  if (!store_.session_exists(id)) throw Error(ErrorCode::SessionNotFound, "no session with this id");
  auto slot = std::make_shared<Slot>();
  slots_[id] = slot;
  return slot;
}

std::unique_lock<std::mutex> Orchestrator::lock_turns(Slot& slot) const {
  if (config_.busy_policy == BusyPolicy::Wait) return std::unique_lock(slot.turn_mu);
  std::unique_lock lock(slot.turn_mu, std::try_to_lock);
  if (!lock.owns_lock()) throw Error(ErrorCode::SessionBusy, "another request is running on this session");
  return lock;
}

ChatSession& Orchestrator::loaded(Slot& slot, const std::string& id) const {
  if (slot.session) return *slot.session;
  auto record = store_.load_session(id);
  if (!record) throw Error(ErrorCode::SessionNotFound, "no session with this id");
  ChatSession s;
  s.id = record->id;
  s.created_at = record->created_at;
  for (const auto& body : record->turn_json) s.turns.push_back(turn_from_json(body));
  if (record->last_result_json) s.last_result = result_from_json(*record->last_result_json);
  slot.session = std::move(s);
  return *slot.session;
}

ChatSession Orchestrator::session(const std::string& id) const {
  auto slot = slot_for(id);
  std::lock_guard lock(slot->turn_mu);
  return loaded(*slot, id);
}

void Orchestrator::persist_turn(ChatSession& session, ChatTurn turn) {
  turn.seq = session.turns.size();
  store_.append_turn(session.id, turn.seq, turn_to_json(turn));
  session.turns.push_back(std::move(turn));
}

// ---------------------------------------------------------------------------
// Stages

llm::StageCompletion Orchestrator::call(StageId stage, const SlotBindings& bindings, StageLog& log) {
  auto request = llm::StageRequest::for_stage(stage, templates_.get(stage).render(bindings));
  auto completion = provider_->complete(request);
  log.trace.push_back({stage, completion.text});
  return completion;
}

std::string Orchestrator::history_text(const ChatSession& session) const {
  const std::size_t k = std::min(config_.history_window, session.turns.size());
  std::string out;
  for (std::size_t i = session.turns.size() - k; i < session.turns.size(); ++i) {
    const auto& t = session.turns[i];
    if (!out.empty()) out += '\n';
    out += "User: " + (t.rewritten_text.empty() ? t.user_text : t.rewritten_text) + '\n';
    out += "Agent: " + t.agent_text;
  }
  return out;
}

SlotBindings Orchestrator::base_bindings(std::string_view user_prompt) const {
  SlotBindings b;
  b.emplace("user_prompt", std::string(user_prompt));
  return b;
}

bool Orchestrator::assess_history_relevance(const ChatSession& session, std::string_view user_text,
                                            StageLog& log) {
  if (session.turns.empty() || config_.history_window == 0) return false;
  auto bindings = base_bindings(user_text);
  bindings.emplace("history", history_text(session));
  const auto completion = call(StageId::A1, bindings, log);
  const auto word = first_word(completion.text);
  if (word == "YES") return true;
  if (word == "NO") return false;
  log.warnings.push_back("UNPARSEABLE_STAGE_OUTPUT(A1): '" + completion.text + "'; treated as NO");
  return false;
}

std::string Orchestrator::rewrite_prompt(const ChatSession& session, std::string_view user_text, StageLog& log) {
  auto bindings = base_bindings(user_text);
  bindings.emplace("history", history_text(session));
  const auto completion = call(StageId::A2, bindings, log);
  const auto text = strings::trim(completion.text);
  if (text.empty()) {
    log.warnings.push_back("stage A2 returned an empty rewrite; using the original prompt");
    return std::string(user_text);
  }
  return std::string(text);
}

QuestionType Orchestrator::classify_question(std::string_view text, StageLog& log) {
  if (strings::trim(text).empty()) throw Error(ErrorCode::InvalidArgument, "question text is empty");
  auto bindings = base_bindings(text);
  bindings.emplace("labels", label_list());
  const auto completion = call(StageId::B, bindings, log);
  if (auto type = question_type_from_string(first_word(completion.text))) return *type;
  log.warnings.push_back("UNPARSEABLE_STAGE_OUTPUT(B): '" + completion.text + "'; treated as GENERIC");
  return QuestionType::Generic;
}

std::string Orchestrator::answer_generic(std::string_view text, const RetrievalIndex& index, StageLog& log) {
  auto bindings = base_bindings(text);
  bindings.emplace("context", render_hits(index.query(text, config_.retrieval_k)));
  return call(StageId::C, bindings, log).text;
}

std::string Orchestrator::answer_generic(std::string_view text, StageLog& log) {
  std::string context;
  {
    std::shared_lock lock(index_mu_);
    context = render_hits(index_.query(text, config_.retrieval_k));
  }
  auto bindings = base_bindings(text);
  bindings.emplace("context", std::move(context));
  return call(StageId::C, bindings, log).text;
}

sql::SqlPlan Orchestrator::generate_sql(std::string_view text, const std::string& schema, StageLog& log) {
  auto bindings = base_bindings(text);
  bindings.emplace("schema", schema);
  bindings.emplace("labels", label_list());
  const auto completion = call(StageId::D, bindings, log);
  try {
    return sql::validate(completion.text);
  } catch (const Error& e) {
    if (is_fatal(e.code())) throw;
    throw SqlGenerationError(e.code(), "SQL_GENERATION_FAILED(" + std::string(to_string(e.code())) + "): " +
                                           e.what());
  }
}

std::string Orchestrator::formulate_response(std::string_view text, std::string_view evidence, StageLog& log) {
  auto bindings = base_bindings(text);
  bindings.emplace("context", std::string(evidence));
  const auto completion = call(StageId::E, bindings, log);
  if (strings::trim(completion.text).empty()) {
    log.warnings.push_back("stage E returned an empty reply; showing the data instead");
    return std::string(evidence);
  }
  return completion.text;
}

// ---------------------------------------------------------------------------
// Workflows

ChatTurn Orchestrator::handle_turn(const std::string& session_id, std::string_view user_text) {
  if (strings::trim(user_text).empty()) throw Error(ErrorCode::InvalidArgument, "message text is empty");
  auto slot = slot_for(session_id);
  auto lock = lock_turns(*slot);
  ChatSession& session = loaded(*slot, session_id);

  ChatTurn turn;
  turn.user_text = std::string(user_text);
  turn.rewritten_text = turn.user_text;
  StageLog log;

  auto fail_sql = [&](ErrorCode code, const std::string& why) {
    turn.agent_text = std::string(kSqlFailureNotice);
    turn.error = code;
    log.warnings.push_back(why);
  };

  try {
    if (assess_history_relevance(session, user_text, log)) {
      turn.rewritten_text = rewrite_prompt(session, user_text, log);
    }
    const auto type = classify_question(turn.rewritten_text, log);
    turn.question_type = type;

    if (type == QuestionType::Generic) {
      turn.agent_text = answer_generic(turn.rewritten_text, log);
    } else {
      const std::string schema = store_.schema_description();
      std::optional<sql::SqlPlan> plan;
      try {
        plan = generate_sql(turn.rewritten_text, schema, log);
      } catch (const SqlGenerationError& e) {
        turn.sql = sql::strip_wrapping(log.trace.back().text);
        fail_sql(ErrorCode::SqlGenerationFailed, e.what());
      }
      if (plan) {
        turn.sql = plan->source;
        if (type == QuestionType::SqlQuery && plan->kind == sql::StatementKind::Update) {
          fail_sql(ErrorCode::SqlGenerationFailed,
                   "SQL_GENERATION_FAILED: an UPDATE was generated for a question; not executed");
          plan.reset();
        }
      }
      if (plan) {
        std::optional<std::string> evidence;
        try {
          if (plan->kind == sql::StatementKind::Select) {
            auto table = store_.execute_select(*plan);
            evidence = render_result(table);
            store_.set_last_result(session.id, result_to_json(table));
            session.last_result = std::move(table);
          } else {
            const auto n = store_.execute_update(*plan);
            evidence = plural(static_cast<std::size_t>(n), "row") + " updated; program set to '" +
                       std::string(plan->new_prog_value->name()) + "'.";
          }
        } catch (const Error& e) {
          if (e.code() != ErrorCode::ExecError) throw;
          fail_sql(ErrorCode::ExecError, std::string("EXEC_ERROR: ") + e.what());
        }
        if (evidence) {
          turn.sql_result_summary = evidence;
          turn.agent_text = formulate_response(turn.rewritten_text, *evidence, log);
        }
      }
    }
  } catch (const Error& e) {
    if (is_fatal(e.code())) throw;
    turn.agent_text = std::string(kProviderFailureNotice);
    turn.finish_reason = llm::FinishReason::Error;
    turn.error = e.code();
    log.warnings.push_back(std::string(to_string(e.code())) + ": " + e.what());
  } catch (const std::exception& e) {
    turn.agent_text = std::string(kProviderFailureNotice);
    turn.finish_reason = llm::FinishReason::Error;
    turn.error = ErrorCode::Internal;
    log.warnings.push_back(std::string("INTERNAL: ") + e.what());
  }

  turn.stage_trace = std::move(log.trace);
  turn.warnings = std::move(log.warnings);
  persist_turn(session, std::move(turn));
  return session.turns.back();
}

ChatTurn Orchestrator::run_ingest_workflow(const std::string& session_id, std::string_view csv) {
  auto slot = slot_for(session_id);
  auto lock = lock_turns(*slot);
  ChatSession& session = loaded(*slot, session_id);

  ChatTurn turn;
  turn.kind = TurnKind::Upload;
  turn.user_text = "Uploaded a CSV file (" + plural(csv.size(), "byte") + ").";
  turn.rewritten_text = turn.user_text;
  StageLog log;

  std::string evidence;
  try {
    const auto report = store_.ingest_csv(csv, labeler_);
    evidence = report.summary();
    refresh_index();
  } catch (const Error& e) {
    if (is_fatal(e.code())) throw;
    evidence = "The upload was rejected (" + std::string(to_string(e.code())) + "): " + e.what();
    turn.error = e.code();
  }
  turn.workflow_summary = evidence;

  try {
    turn.agent_text = formulate_response(kUploadPrompt, evidence, log);
  } catch (const Error& e) {
    if (is_fatal(e.code())) throw;
    turn.agent_text = evidence;
    turn.finish_reason = llm::FinishReason::Error;
    if (!turn.error) turn.error = e.code();
    log.warnings.push_back(std::string(to_string(e.code())) + ": " + e.what() + "; showing the report instead");
  }

  turn.stage_trace = std::move(log.trace);
  turn.warnings = std::move(log.warnings);
  persist_turn(session, std::move(turn));
  return session.turns.back();
}

ExportResult Orchestrator::run_export_workflow(const std::string& session_id) {
  auto slot = slot_for(session_id);
  auto lock = lock_turns(*slot);
  ChatSession& session = loaded(*slot, session_id);
  if (!session.last_result) {
    throw Error(ErrorCode::NoResultToExport, "there is no query result in this session to export yet");
  }

  ExportResult out;
  out.bytes = export_csv(*session.last_result);
  const auto& table = *session.last_result;
  std::string evidence = "The exported CSV file has " + plural(table.rows.size(), "row") + " and " +
                         plural(table.columns.size(), "column");
  if (!table.columns.empty()) {
    evidence += ": ";
    for (std::size_t i = 0; i < table.columns.size(); ++i) evidence += (i ? ", " : "") + table.columns[i];
  }
  evidence += '.';

  ChatTurn turn;
  turn.kind = TurnKind::Export;
  turn.user_text = "Downloaded the last result as CSV.";
  turn.rewritten_text = turn.user_text;
  turn.workflow_summary = evidence;
  StageLog log;
  try {
    turn.agent_text = formulate_response(kExportPrompt, evidence, log);
  } catch (const Error& e) {
    if (is_fatal(e.code())) throw;
    turn.agent_text = evidence;
    turn.finish_reason = llm::FinishReason::Error;
    turn.error = e.code();
    log.warnings.push_back(std::string(to_string(e.code())) + ": " + e.what() + "; showing the summary instead");
  }
  turn.stage_trace = std::move(log.trace);
  turn.warnings = std::move(log.warnings);
  persist_turn(session, std::move(turn));
  out.turn = session.turns.back();
  return out;
}

}  // namespace pubbie
