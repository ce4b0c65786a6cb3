#include "pubbie/store.hpp"

#include <sqlite3.h>

#include <algorithm>
#include <array>
#include <mutex>
#include <sstream>
#include <unordered_map>

#include "pubbie/csv.hpp"
#include "pubbie/strings.hpp"
#include "sqlite_handle.hpp"

namespace pubbie {
namespace {

using detail::Statement;

enum class GuardMode { Off, Select, Update };
thread_local GuardMode t_guard = GuardMode::Off;

// RAII switch for the authorizer mode of the current thread.
class GuardScope {
 public:
  explicit GuardScope(GuardMode mode) : prev_(t_guard) { t_guard = mode; }
  ~GuardScope() { t_guard = prev_; }
  GuardScope(const GuardScope&) = delete;
  GuardScope& operator=(const GuardScope&) = delete;

 private:
  GuardMode prev_;
};

constexpr std::array<std::string_view, 19> kAllowedFunctions{
    "count", "sum",    "avg",   "min",      "max",    "total",        "lower",
    "upper", "length", "trim",  "round",    "abs",    "substr",       "instr",
    "coalesce", "ifnull", "group_concat", "like", "glob"};

bool eq(const char* a, std::string_view b) { return a != nullptr && strings::iequals(a, b); }

int authorize(void*, int action, const char* arg1, const char* arg2, const char*, const char*) {
  const GuardMode mode = t_guard;
  if (mode == GuardMode::Off) return SQLITE_OK;
  switch (action) {
    case SQLITE_SELECT: return SQLITE_OK;
    case SQLITE_READ: return eq(arg1, "pub") ? SQLITE_OK : SQLITE_DENY;
    case SQLITE_FUNCTION:
      for (auto f : kAllowedFunctions) {
        if (eq(arg2, f)) return SQLITE_OK;
      }
      return SQLITE_DENY;
    case SQLITE_UPDATE:
      if (mode == GuardMode::Update && eq(arg1, "pub") &&
          (eq(arg2, "prog") || eq(arg2, "prog_source"))) {
        return SQLITE_OK;
      }
      return SQLITE_DENY;
    // Savepoints and transactions are issued by the store itself while the
    // guard is off; anything else in guarded mode is refused.
    default: return SQLITE_DENY;
  }
}

constexpr const char* kPubDdl = R"sql(
CREATE TABLE IF NOT EXISTS pub (
  eid TEXT PRIMARY KEY NOT NULL CHECK (length(eid) > 0),
  title TEXT NOT NULL,
  year INTEGER,
  authors TEXT,
  authors_with_affil TEXT,
  affiliations TEXT,
  author_keywords TEXT,
  index_keywords TEXT,
  source_title TEXT,
  doi TEXT,
  abstract TEXT,
  document_type TEXT,
  publisher TEXT,
  volume TEXT,
  issue TEXT,
  page_range TEXT,
  cited_by INTEGER,
  language TEXT,
  open_access TEXT,
  link TEXT,
  prog TEXT NOT NULL COLLATE NOCASE,
  prog_source TEXT NOT NULL CHECK (prog_source IN ('GROUND_TRUTH', 'PREDICTED', 'USER_CORRECTED'))
);
CREATE TABLE IF NOT EXISTS chat_session (
  id TEXT PRIMARY KEY NOT NULL,
  created_at TEXT NOT NULL,
  last_result TEXT
);
CREATE TABLE IF NOT EXISTS chat_turn (
  session_id TEXT NOT NULL REFERENCES chat_session(id),
  seq INTEGER NOT NULL,
  body TEXT NOT NULL,
  PRIMARY KEY (session_id, seq)
);
)sql";

constexpr std::string_view kSelectColumns =
    "eid, title, year, authors, authors_with_affil, affiliations, author_keywords, "
    "index_keywords, source_title, doi, abstract, document_type, publisher, volume, issue, "
    "page_range, cited_by, language, open_access, link, prog, prog_source";

Publication read_publication(const Statement& st) {
  Publication p;
  for (std::size_t i = 0; i < kAttributeCount; ++i) {
    const int col = static_cast<int>(i);
    p.set_attribute(kAttributeNames[i], st.is_null(col) ? std::string() : st.text(col));
  }
  const auto label = ProgramLabel::parse(st.text(20));
  if (!label) throw Error(ErrorCode::StoreCorrupt, "stored prog is not a valid label: " + st.text(20));
  p.prog = *label;
  const auto source = label_source_from_string(st.text(21));
  if (!source) throw Error(ErrorCode::StoreCorrupt, "stored prog_source is invalid");
  p.prog_source = *source;
  return p;
}

std::string normalize_header(std::string_view raw) {
  std::string out;
  for (char c : strings::trim(raw)) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    } else if (!out.empty() && out.back() != '_') {
      out.push_back('_');
    }
  }
  while (!out.empty() && out.back() == '_') out.pop_back();
  return out;
}

constexpr std::string_view kProgramColumn = "prog";

// Maps a normalized CSV header to a pub column (or the program column).
std::optional<std::string_view> column_for_header(const std::string& h) {
  for (auto name : kAttributeNames) {
    if (h == name) return name;
  }
  static const std::unordered_map<std::string, std::string_view> aliases{
      {"prog", kProgramColumn},
      {"program", kProgramColumn},
      {"challenge_program", kProgramColumn},
      {"authors_with_affiliations", "authors_with_affil"},
      {"language_of_original_document", "language"},
      {"page_ranges", "page_range"},
      {"pages", "page_range"},
      {"cited", "cited_by"},
  };
  if (auto it = aliases.find(h); it != aliases.end()) return it->second;
  return std::nullopt;
}

void bind_optional_text(Statement& st, int index, const std::string& value) {
  if (value.empty()) {
    st.bind_null(index);
  } else {
    st.bind(index, value);
  }
}

class Transaction {
 public:
  explicit Transaction(sqlite3* db, const char* begin = "BEGIN IMMEDIATE") : db_(db) {
    detail::exec(db_, begin);
  }
  ~Transaction() {
    if (!done_) sqlite3_exec(db_, "ROLLBACK", nullptr, nullptr, nullptr);
  }
  void commit() {
    detail::exec(db_, "COMMIT");
    done_ = true;
  }
  Transaction(const Transaction&) = delete;
  Transaction& operator=(const Transaction&) = delete;

 private:
  sqlite3* db_;
  bool done_ = false;
};

void close_db(sqlite3* db) { sqlite3_close_v2(db); }

}  // namespace

std::string IngestReport::summary() const {
  std::ostringstream os;
  os << "Read " << rows_read << " rows: " << rows_inserted << " inserted, " << rows_updated
     << " updated, " << errors.size() << " rejected. " << rows_predicted
     << " program labels predicted, " << rows_with_ground_truth << " labels from ground truth.";
  constexpr std::size_t kMaxListed = 10;
  for (std::size_t i = 0; i < errors.size() && i < kMaxListed; ++i) {
    os << "\nError on line " << errors[i].line << ": " << errors[i].message;
  }
  if (errors.size() > kMaxListed) os << "\n+" << (errors.size() - kMaxListed) << " more errors";
  for (std::size_t i = 0; i < warnings.size() && i < kMaxListed; ++i) {
    os << "\nWarning on line " << warnings[i].line << ": " << warnings[i].message;
  }
  if (warnings.size() > kMaxListed) os << "\n+" << (warnings.size() - kMaxListed) << " more warnings";
  return os.str();
}

Store::Store(const std::string& path) : db_(nullptr, &close_db) {
  sqlite3* raw = nullptr;
  const int flags = SQLITE_OPEN_READWRITE | SQLITE_OPEN_CREATE | SQLITE_OPEN_FULLMUTEX;
  const int rc = sqlite3_open_v2(path.c_str(), &raw, flags, nullptr);
  db_.reset(raw);
  if (rc != SQLITE_OK) {
    const std::string msg = raw ? sqlite3_errmsg(raw) : "cannot open database";
    throw Error(ErrorCode::StoreUnavailable, "cannot open store '" + path + "': " + msg);
  }
  sqlite3_busy_timeout(raw, 5000);
  sqlite3_set_authorizer(raw, &authorize, nullptr);
  if (path != ":memory:") {
    sqlite3_exec(raw, "PRAGMA journal_mode=WAL", nullptr, nullptr, nullptr);
  }
  try {
    detail::exec(raw, "PRAGMA foreign_keys=ON");
    create_schema();
  } catch (const Error& e) {
    const int code = sqlite3_errcode(raw);
    if (code == SQLITE_NOTADB || code == SQLITE_CORRUPT) {
      throw Error(ErrorCode::StoreCorrupt, "store '" + path + "' is not a valid database: " + e.what());
    }
    throw Error(ErrorCode::StoreUnavailable, "cannot initialize store '" + path + "': " + e.what());
  }
}

Store::~Store() = default;

void Store::create_schema() { detail::exec(db_.get(), kPubDdl); }

IngestReport Store::ingest_csv(std::string_view data, const Labeler& labeler) {
  csv::Reader reader(data);
  auto header = reader.next();
  if (!header || (header->fields.size() == 1 && strings::trim(header->fields[0]).empty())) {
    throw Error(ErrorCode::EmptyInput, "CSV input has no header row");
  }
  if (header->error) {
    throw Error(ErrorCode::HeaderMissingRequired, "malformed header: " + *header->error);
  }

  IngestReport report;
  std::vector<std::optional<std::string_view>> mapping;
  bool has_eid = false;
  bool has_title = false;
  for (const auto& raw : header->fields) {
    const auto col = column_for_header(normalize_header(raw));
    if (!col) {
      report.warnings.push_back({header->line, "ignoring unknown column '" + raw + "'"});
    } else if (std::find(mapping.begin(), mapping.end(), col) != mapping.end()) {
      report.warnings.push_back({header->line, "ignoring duplicate column '" + raw + "'"});
      mapping.push_back(std::nullopt);
      continue;
    }
    has_eid = has_eid || col == "eid";
    has_title = has_title || col == "title";
    mapping.push_back(col);
  }
  if (!has_eid || !has_title) {
    throw Error(ErrorCode::HeaderMissingRequired, "CSV header must contain 'eid' and 'title' columns");
  }

  std::unique_lock lock(mu_);
  Transaction tx(db_.get());
  while (auto rec = reader.next()) {
    if (rec->fields.size() == 1 && rec->fields[0].empty() && !rec->error) continue;  // blank line
    ++report.rows_read;
    if (rec->error) {
      report.errors.push_back({rec->line, *rec->error});
      continue;
    }
    if (rec->fields.size() != mapping.size()) {
      report.errors.push_back({rec->line, "expected " + std::to_string(mapping.size()) +
                                              " fields, found " + std::to_string(rec->fields.size())});
      continue;
    }

    Publication pub;
    std::optional<ProgramLabel> given;
    try {
      for (std::size_t i = 0; i < mapping.size(); ++i) {
        if (!mapping[i]) continue;
        if (*mapping[i] == kProgramColumn) {
          const auto value = strings::trim(rec->fields[i]);
          if (value.empty()) continue;
          given = ProgramLabel::parse(value);
          if (!given) {
            report.warnings.push_back(
                {rec->line, "unknown program label '" + std::string(value) + "'; treated as unlabeled"});
          }
          continue;
        }
        pub.set_attribute(*mapping[i], rec->fields[i]);
      }
    } catch (const Error& e) {
      report.errors.push_back({rec->line, e.what()});
      continue;
    }
    pub.eid = std::string(strings::trim(pub.eid));
    if (pub.eid.empty()) {
      report.errors.push_back({rec->line, "missing eid"});
      continue;
    }
    if (strings::trim(pub.title).empty()) {
      report.errors.push_back({rec->line, "missing title"});
      continue;
    }

    const auto existing = find_locked(pub.eid);
    if (given) {
      pub.prog = *given;
      pub.prog_source = LabelSource::GroundTruth;
      ++report.rows_with_ground_truth;
    } else if (existing && existing->prog_source != LabelSource::Predicted) {
      pub.prog = existing->prog;
      pub.prog_source = existing->prog_source;
      ++report.rows_with_ground_truth;
    } else {
      pub.prog = ProgramLabel::no_program();
      pub.prog_source = LabelSource::Predicted;
      if (labeler) {
        try {
          pub.prog = labeler(pub);
        } catch (const std::exception& e) {
          report.warnings.push_back({rec->line, std::string("prediction failed: ") + e.what()});
        }
      }
      ++report.rows_predicted;
    }
    upsert_locked(pub);
    if (existing) {
      ++report.rows_updated;
    } else {
      ++report.rows_inserted;
    }
  }
  tx.commit();
  return report;
}

void Store::upsert(const Publication& pub) {
  std::unique_lock lock(mu_);
  upsert_locked(pub);
}

void Store::upsert_locked(const Publication& pub) {
  if (pub.eid.empty()) throw Error(ErrorCode::InvalidArgument, "eid must be non-empty");
  Statement st(db_.get(),
               "INSERT INTO pub (eid, title, year, authors, authors_with_affil, affiliations, "
               "author_keywords, index_keywords, source_title, doi, abstract, document_type, "
               "publisher, volume, issue, page_range, cited_by, language, open_access, link, prog, "
               "prog_source) VALUES (?1, ?2, ?3, ?4, ?5, ?6, ?7, ?8, ?9, ?10, ?11, ?12, ?13, ?14, "
               "?15, ?16, ?17, ?18, ?19, ?20, ?21, ?22) ON CONFLICT(eid) DO UPDATE SET "
               "title=excluded.title, year=excluded.year, authors=excluded.authors, "
               "authors_with_affil=excluded.authors_with_affil, affiliations=excluded.affiliations, "
               "author_keywords=excluded.author_keywords, index_keywords=excluded.index_keywords, "
               "source_title=excluded.source_title, doi=excluded.doi, abstract=excluded.abstract, "
               "document_type=excluded.document_type, publisher=excluded.publisher, "
               "volume=excluded.volume, issue=excluded.issue, page_range=excluded.page_range, "
               "cited_by=excluded.cited_by, language=excluded.language, "
               "open_access=excluded.open_access, link=excluded.link, prog=excluded.prog, "
               "prog_source=excluded.prog_source");
  for (std::size_t i = 0; i < kAttributeCount; ++i) {
    const int index = static_cast<int>(i) + 1;
    const auto name = kAttributeNames[i];
    if (name == "year" || name == "cited_by") {
      const auto& v = name == "year" ? pub.year : pub.cited_by;
      if (v) {
        st.bind(index, *v);
      } else {
        st.bind_null(index);
      }
    } else if (name == "title") {
      st.bind(index, pub.title);
    } else {
      bind_optional_text(st, index, pub.attribute(name));
    }
  }
  st.bind(21, pub.prog.name());
  st.bind(22, to_string(pub.prog_source));
  st.run();
}

std::optional<Publication> Store::find(std::string_view eid) const {
  std::shared_lock lock(mu_);
  return find_locked(eid);
}

std::optional<Publication> Store::find_locked(std::string_view eid) const {
  Statement st(db_.get(), "SELECT " + std::string(kSelectColumns) + " FROM pub WHERE eid = ?1");
  st.bind(1, eid);
  if (!st.step()) return std::nullopt;
  return read_publication(st);
}

std::vector<Publication> Store::all_publications() const {
  std::shared_lock lock(mu_);
  Statement st(db_.get(), "SELECT " + std::string(kSelectColumns) + " FROM pub ORDER BY eid");
  std::vector<Publication> out;
  while (st.step()) out.push_back(read_publication(st));
  return out;
}

std::size_t Store::publication_count() const {
  std::shared_lock lock(mu_);
  Statement st(db_.get(), "SELECT COUNT(*) FROM pub");
  st.step();
  return static_cast<std::size_t>(st.integer(0));
}

ResultTable Store::execute_select(const sql::SqlPlan& plan) const {
  if (plan.kind != sql::StatementKind::Select) {
    throw Error(ErrorCode::ExecError, "execute_select requires a SELECT plan");
  }
  std::shared_lock lock(mu_);
  GuardScope guard(GuardMode::Select);
  Statement st(db_.get(), plan.statement);
  if (!sqlite3_stmt_readonly(st.get())) {
    throw Error(ErrorCode::ExecError, "statement is not read-only");
  }
  ResultTable table;
  for (int i = 0; i < st.column_count(); ++i) table.columns.push_back(st.column_name(i));
  while (st.step()) {
    std::vector<Cell> row;
    row.reserve(table.columns.size());
    for (int i = 0; i < st.column_count(); ++i) row.push_back(st.cell(i));
    table.rows.push_back(std::move(row));
  }
  return table;
}

namespace {

std::int64_t run_guarded_update(sqlite3* db, const sql::SqlPlan& plan) {
  if (plan.kind != sql::StatementKind::Update) {
    throw Error(ErrorCode::ExecError, "execute_update requires an UPDATE plan");
  }
  if (!plan.new_prog_value) throw Error(ErrorCode::InvalidLabel, "UPDATE plan has no valid program label");
  if (plan.where_clause.empty()) throw Error(ErrorCode::ExecError, "UPDATE plan has no WHERE clause");
  GuardScope guard(GuardMode::Update);
  Statement st(db, "UPDATE pub SET prog = ?1, prog_source = 'USER_CORRECTED' WHERE " + plan.where_clause);
  st.bind(1, plan.new_prog_value->name());
  st.run();
  return sqlite3_changes(db);
}

}  // namespace

std::int64_t Store::execute_update(const sql::SqlPlan& plan) {
  std::unique_lock lock(mu_);
  return run_guarded_update(db_.get(), plan);
}

std::int64_t Store::count_update(const sql::SqlPlan& plan) {
  std::unique_lock lock(mu_);
  Transaction tx(db_.get(), "BEGIN");
  return run_guarded_update(db_.get(), plan);  // rolled back by ~Transaction
}

std::string Store::schema_description() const {
  std::shared_lock lock(mu_);
  std::ostringstream os;
  os << "SQLite table pub (one row per publication; primary key eid):\n";
  for (auto name : kAttributeNames) {
    const bool integer = name == "year" || name == "cited_by";
    os << "  " << name << ' ' << (integer ? "INTEGER" : "TEXT");
    if (name == "eid" || name == "title") os << " NOT NULL";
    if (name == "eid") os << "  -- Scopus EID";
    if (name == "authors_with_affil") os << "  -- authors with their affiliations";
    os << '\n';
  }
  os << "  prog TEXT NOT NULL  -- challenge program (case-insensitive), one of the values below\n";
  os << "  prog_source TEXT NOT NULL  -- GROUND_TRUTH, PREDICTED or USER_CORRECTED\n";
  os << "Valid prog values:\n";
  for (auto label : ProgramLabel::canonical_names()) os << "  - " << label << '\n';

  Statement st(db_.get(), "SELECT eid, title, year, authors_with_affil, prog FROM pub ORDER BY eid LIMIT 2");
  std::vector<std::string> examples;
  while (st.step()) {
    std::ostringstream row;
    row << "  eid=" << st.text(0) << "; title=" << st.text(1) << "; year=" << st.text(2)
        << "; authors_with_affil=" << st.text(3) << "; prog=" << st.text(4);
    examples.push_back(row.str());
  }
  os << "Example rows (" << examples.size() << "):\n";
  for (const auto& e : examples) os << e << '\n';
  return os.str();
}

std::string Store::dump_publications() const {
  std::shared_lock lock(mu_);
  Statement st(db_.get(), "SELECT " + std::string(kSelectColumns) + " FROM pub ORDER BY eid");
  std::string out;
  while (st.step()) {
    for (int i = 0; i < st.column_count(); ++i) {
      if (i) out.push_back('\x1f');
      out += st.is_null(i) ? std::string("\x00N", 2) : st.text(i);
    }
    out.push_back('\x1e');
  }
  return out;
}

std::string Store::schema_fingerprint() const {
  std::shared_lock lock(mu_);
  Statement st(db_.get(), "SELECT type, name, tbl_name, ifnull(sql, '') FROM sqlite_master ORDER BY name");
  std::string out;
  while (st.step()) {
    out += st.text(0) + '|' + st.text(1) + '|' + st.text(2) + '|' + st.text(3) + '\n';
  }
  return out;
}

void Store::create_session(const std::string& id, const std::string& created_at) {
  std::unique_lock lock(mu_);
  Statement st(db_.get(), "INSERT INTO chat_session (id, created_at) VALUES (?1, ?2)");
  st.bind(1, id).bind(2, created_at);
  st.run();
}

bool Store::session_exists(const std::string& id) const {
  std::shared_lock lock(mu_);
  Statement st(db_.get(), "SELECT 1 FROM chat_session WHERE id = ?1");
  st.bind(1, id);
  return st.step();
}

std::optional<SessionRecord> Store::load_session(const std::string& id) const {
  std::shared_lock lock(mu_);
  Statement st(db_.get(), "SELECT created_at, last_result FROM chat_session WHERE id = ?1");
  st.bind(1, id);
  if (!st.step()) return std::nullopt;
  SessionRecord rec;
  rec.id = id;
  rec.created_at = st.text(0);
  if (!st.is_null(1)) rec.last_result_json = st.text(1);
  Statement turns(db_.get(), "SELECT body FROM chat_turn WHERE session_id = ?1 ORDER BY seq");
  turns.bind(1, id);
  while (turns.step()) rec.turn_json.push_back(turns.text(0));
  return rec;
}

void Store::append_turn(const std::string& id, std::size_t seq, const std::string& turn_json) {
  std::unique_lock lock(mu_);
  Statement st(db_.get(), "INSERT INTO chat_turn (session_id, seq, body) VALUES (?1, ?2, ?3)");
  st.bind(1, id).bind(2, static_cast<std::int64_t>(seq)).bind(3, turn_json);
  st.run();
}

void Store::set_last_result(const std::string& id, const std::string& result_json) {
  std::unique_lock lock(mu_);
  Statement st(db_.get(), "UPDATE chat_session SET last_result = ?2 WHERE id = ?1");
  st.bind(1, id).bind(2, result_json);
  st.run();
}

std::string export_csv(const ResultTable& table) { return csv::write_table(table); }

}  // namespace pubbie
