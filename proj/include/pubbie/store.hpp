#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include "pubbie/publication.hpp"
#include "pubbie/result_table.hpp"
#include "pubbie/sql_guard.hpp"

struct sqlite3;

namespace pubbie {

struct IngestIssue {
  std::size_t line = 0;
  std::string message;
  friend bool operator==(const IngestIssue&, const IngestIssue&) = default;
};

// Counters obey:
//   rows_read == rows_inserted + rows_updated + errors.size()
//   rows_predicted + rows_with_ground_truth == rows_inserted + rows_updated
// Rows that arrive unlabeled but already hold a GROUND_TRUTH or
// USER_CORRECTED label keep it and count under rows_with_ground_truth.
struct IngestReport {
  std::size_t rows_read = 0;
  std::size_t rows_inserted = 0;
  std::size_t rows_updated = 0;
  std::size_t rows_predicted = 0;
  std::size_t rows_with_ground_truth = 0;
  std::vector<IngestIssue> errors;
  std::vector<IngestIssue> warnings;

  // Plain-text rendering used as evidence for the confirmation message.
  std::string summary() const;
};

// Program prediction hook used by ingest for unlabeled rows.
using Labeler = std::function<ProgramLabel(const Publication&)>;

// Persisted chat session, stored next to the publications. Turn bodies and
// the last result are opaque JSON owned by the orchestrator.
struct SessionRecord {
  std::string id;
  std::string created_at;
  std::optional<std::string> last_result_json;
  std::vector<std::string> turn_json;
};

// Embedded single-file relational store holding table `pub` plus the
// session tables. Writers are serialized; readers share a lock. Guarded SQL
// additionally runs under an SQLite authorizer that only admits reads of
// `pub` (and writes of pub.prog / pub.prog_source for UPDATE plans).
class Store {
 public:
  // ":memory:" opens a private in-memory database.
  explicit Store(const std::string& path);
  ~Store();
  Store(const Store&) = delete;
  Store& operator=(const Store&) = delete;

  IngestReport ingest_csv(std::string_view data, const Labeler& labeler = {});

  ResultTable execute_select(const sql::SqlPlan& plan) const;
  std::int64_t execute_update(const sql::SqlPlan& plan);
  // Runs an UPDATE plan inside a transaction that is rolled back; returns the
  // number of rows it would touch.
  std::int64_t count_update(const sql::SqlPlan& plan);

  std::string schema_description() const;

  void upsert(const Publication& pub);
  std::optional<Publication> find(std::string_view eid) const;
  std::vector<Publication> all_publications() const;
  std::size_t publication_count() const;

  // Deterministic full text dump of `pub` ordered by eid.
  std::string dump_publications() const;
  // Concatenated DDL of every schema object, ordered by name.
  std::string schema_fingerprint() const;

  void create_session(const std::string& id, const std::string& created_at);
  bool session_exists(const std::string& id) const;
  std::optional<SessionRecord> load_session(const std::string& id) const;
  void append_turn(const std::string& id, std::size_t seq, const std::string& turn_json);
  void set_last_result(const std::string& id, const std::string& result_json);

 private:
  void create_schema();
  void upsert_locked(const Publication& pub);
  std::optional<Publication> find_locked(std::string_view eid) const;

  std::unique_ptr<sqlite3, void (*)(sqlite3*)> db_;
  mutable std::shared_mutex mu_;
};

std::string export_csv(const ResultTable& table);

}  // namespace pubbie
