#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include "pubbie/llm.hpp"
#include "pubbie/result_table.hpp"
#include "pubbie/retrieval.hpp"
#include "pubbie/sql_guard.hpp"
#include "pubbie/store.hpp"
#include "pubbie/templates.hpp"

namespace pubbie {

enum class QuestionType { Generic, SqlQuery, SqlUpdate };
std::string_view to_string(QuestionType type);
std::optional<QuestionType> question_type_from_string(std::string_view text);

enum class TurnKind { Chat, Upload, Export };
std::string_view to_string(TurnKind kind);

inline constexpr std::string_view kSqlFailureNotice =
    "I could not translate that into a database query. Please try rephrasing your request.";
inline constexpr std::string_view kProviderFailureNotice =
    "The language model is not available right now, so I could not answer. Please try again in a moment.";

struct StageTraceEntry {
  llm::StageId stage;
  std::string text;
  friend bool operator==(const StageTraceEntry&, const StageTraceEntry&) = default;
};

// Stage completions and soft failures collected while a turn runs.
struct StageLog {
  std::vector<StageTraceEntry> trace;
  std::vector<std::string> warnings;
};

struct ChatTurn {
  std::size_t seq = 0;
  TurnKind kind = TurnKind::Chat;
  std::string user_text;
  std::string rewritten_text;
  std::optional<QuestionType> question_type;  // set once stage B ran
  std::optional<std::string> sql;             // as the model wrote it
  std::optional<std::string> sql_result_summary;
  std::optional<std::string> workflow_summary;  // ingest report or export summary
  std::string agent_text;
  std::vector<StageTraceEntry> stage_trace;
  std::vector<std::string> warnings;
  llm::FinishReason finish_reason = llm::FinishReason::Stop;
  std::optional<ErrorCode> error;

  friend bool operator==(const ChatTurn&, const ChatTurn&) = default;
};

struct ChatSession {
  std::string id;
  std::string created_at;
  std::vector<ChatTurn> turns;
  std::optional<ResultTable> last_result;
};

std::string turn_to_json(const ChatTurn& turn);
ChatTurn turn_from_json(std::string_view text);  // PARSE_ERROR
std::string result_to_json(const ResultTable& table);
ResultTable result_from_json(std::string_view text);  // PARSE_ERROR

// Evidence text for stage E: a lone cell is its bare value, anything else
// an aligned table of at most `max_rows` rows plus a "+N more rows" line.
std::string render_result(const ResultTable& table, std::size_t max_rows = 50);

// ---------------------------------------------------------------------------
// Text-to-SQL evaluation

enum class Stratum { Frequent, Infrequent };
std::string_view to_string(Stratum s);

struct Nl2SqlCase {
  std::string question;
  Stratum stratum = Stratum::Frequent;
  // Exactly one gold form is set. gold_sql is executed against the store to
  // obtain the expected rows (or affected count for UPDATE).
  std::optional<std::string> gold_sql;
  std::optional<std::vector<std::vector<std::string>>> gold_rows;
  std::optional<std::int64_t> gold_count;
};

struct Nl2SqlCaseResult {
  std::string question;
  Stratum stratum = Stratum::Frequent;
  bool passed = false;
  std::string generated_sql;
  std::string detail;  // why it failed; empty on pass
};

struct Nl2SqlReport {
  std::vector<Nl2SqlCaseResult> cases;
  std::size_t frequent_passed = 0, frequent_total = 0;
  std::size_t infrequent_passed = 0, infrequent_total = 0;

  std::size_t passed() const { return frequent_passed + infrequent_passed; }
  std::size_t total() const { return frequent_total + infrequent_total; }
  // Percentage rounded to 4 decimal places.
  double accuracy_percent() const;
  // e.g. "96.15%"
  std::string accuracy_text() const;
  std::string to_text() const;
};

// JSON Lines: {"question": ..., "stratum": "FREQUENT"|"INFREQUENT", and one of
// "gold_sql", "gold_rows" (array of arrays of strings), "gold_count"}.
// Blank lines and lines starting with '#' are skipped. PARSE_ERROR(line).
std::vector<Nl2SqlCase> parse_nl2sql_cases(std::string_view text);

// ---------------------------------------------------------------------------

enum class BusyPolicy { Wait, Reject };

struct OrchestratorConfig {
  std::size_t history_window = 6;
  std::size_t retrieval_k = 5;
  BusyPolicy busy_policy = BusyPolicy::Wait;
};

// Stage D output rejected by the guard; `cause` is the guard's code.
class SqlGenerationError : public Error {
 public:
  SqlGenerationError(ErrorCode cause, const std::string& message)
      : Error(ErrorCode::SqlGenerationFailed, message), cause_(cause) {}
  ErrorCode cause() const noexcept { return cause_; }

 private:
  ErrorCode cause_;
};

struct ExportResult {
  std::string bytes;
  ChatTurn turn;
};

// Runs the chat pipeline (history gate, rewrite, question type, then either a
// generic answer or text-to-SQL, guard, execution and response formulation)
// plus the upload and export workflows. Sessions and turns are persisted in
// the store. Turns on one session are serialized; different sessions run
// concurrently.
class Orchestrator {
 public:
  Orchestrator(Store& store, std::shared_ptr<llm::Provider> provider, TemplateRegistry templates = {},
               OrchestratorConfig config = {}, Labeler labeler = {});

  std::string create_session();
  bool session_exists(const std::string& id) const;
  // Snapshot. SESSION_NOT_FOUND.
  ChatSession session(const std::string& id) const;

  // Stage failures become agent text; only SESSION_NOT_FOUND, SESSION_BUSY
  // and store failures are raised.
  ChatTurn handle_turn(const std::string& session_id, std::string_view user_text);
  ChatTurn run_ingest_workflow(const std::string& session_id, std::string_view csv);
  // NO_RESULT_TO_EXPORT before any successful SELECT in the session.
  ExportResult run_export_workflow(const std::string& session_id);

  bool assess_history_relevance(const ChatSession& session, std::string_view user_text, StageLog& log);
  std::string rewrite_prompt(const ChatSession& session, std::string_view user_text, StageLog& log);
  QuestionType classify_question(std::string_view text, StageLog& log);
  std::string answer_generic(std::string_view text, const RetrievalIndex& index, StageLog& log);
  std::string answer_generic(std::string_view text, StageLog& log);
  // Throws SqlGenerationError when the guard rejects the completion.
  sql::SqlPlan generate_sql(std::string_view text, const std::string& schema, StageLog& log);
  std::string formulate_response(std::string_view text, std::string_view evidence, StageLog& log);

  Nl2SqlReport evaluate_text_to_sql(const std::vector<Nl2SqlCase>& cases);

  // Rebuilds the retrieval index from the store.
  void refresh_index();

  const OrchestratorConfig& config() const { return config_; }

 private:
  struct Slot {
    std::mutex turn_mu;
    std::optional<ChatSession> session;  // loaded lazily under turn_mu
  };

  std::shared_ptr<Slot> slot_for(const std::string& id) const;
  std::unique_lock<std::mutex> lock_turns(Slot& slot) const;
  ChatSession& loaded(Slot& slot, const std::string& id) const;
  void persist_turn(ChatSession& session, ChatTurn turn);

  llm::StageCompletion call(llm::StageId stage, const SlotBindings& bindings, StageLog& log);
  std::string history_text(const ChatSession& session) const;
  SlotBindings base_bindings(std::string_view user_prompt) const;

  Store& store_;
  std::shared_ptr<llm::Provider> provider_;
  TemplateRegistry templates_;
  OrchestratorConfig config_;
  Labeler labeler_;

  mutable std::mutex slots_mu_;
  mutable std::map<std::string, std::shared_ptr<Slot>> slots_;

  mutable std::shared_mutex index_mu_;
  RetrievalIndex index_;
};

}  // namespace pubbie
