#pragma once

#include <sqlite3.h>

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>

#include "pubbie/error.hpp"
#include "pubbie/result_table.hpp"

namespace pubbie::detail {

struct DbCloser {
  void operator()(sqlite3* db) const { sqlite3_close_v2(db); }
};
using DbPtr = std::unique_ptr<sqlite3, DbCloser>;

// Thin RAII wrapper over a prepared statement. Bind indices are 1-based.
class Statement {
 public:
  Statement(sqlite3* db, std::string_view sql) : db_(db) {
    sqlite3_stmt* raw = nullptr;
    const int rc = sqlite3_prepare_v2(db, sql.data(), static_cast<int>(sql.size()), &raw, nullptr);
    if (rc != SQLITE_OK) {
      throw Error(ErrorCode::ExecError, sqlite3_errmsg(db));
    }
    stmt_.reset(raw);
  }

  sqlite3_stmt* get() const { return stmt_.get(); }

  Statement& bind(int index, std::string_view text) {
    check(sqlite3_bind_text(stmt_.get(), index, text.data(), static_cast<int>(text.size()),
                            SQLITE_TRANSIENT));
    return *this;
  }
  Statement& bind(int index, std::int64_t value) {
    check(sqlite3_bind_int64(stmt_.get(), index, value));
    return *this;
  }
  Statement& bind_null(int index) {
    check(sqlite3_bind_null(stmt_.get(), index));
    return *this;
  }

  // Returns true while rows are available.
  bool step() {
    const int rc = sqlite3_step(stmt_.get());
    if (rc == SQLITE_ROW) return true;
    if (rc == SQLITE_DONE) return false;
    throw Error(ErrorCode::ExecError, sqlite3_errmsg(db_));
  }

  void run() {
    while (step()) {
    }
  }

  void reset() {
    sqlite3_reset(stmt_.get());
    sqlite3_clear_bindings(stmt_.get());
  }

  int column_count() const { return sqlite3_column_count(stmt_.get()); }

  std::string column_name(int i) const {
    const char* name = sqlite3_column_name(stmt_.get(), i);
    return name ? name : "";
  }

  bool is_null(int i) const { return sqlite3_column_type(stmt_.get(), i) == SQLITE_NULL; }

  std::string text(int i) const {
    const auto* p = sqlite3_column_text(stmt_.get(), i);
    if (!p) return {};
    return std::string(reinterpret_cast<const char*>(p),
                       static_cast<std::size_t>(sqlite3_column_bytes(stmt_.get(), i)));
  }

  std::int64_t integer(int i) const { return sqlite3_column_int64(stmt_.get(), i); }

  Cell cell(int i) const {
    switch (sqlite3_column_type(stmt_.get(), i)) {
      case SQLITE_NULL: return std::monostate{};
      case SQLITE_INTEGER: return integer(i);
      case SQLITE_FLOAT: return sqlite3_column_double(stmt_.get(), i);
      default: return text(i);
    }
  }

 private:
  struct StmtFinalizer {
    void operator()(sqlite3_stmt* s) const { sqlite3_finalize(s); }
  };

  void check(int rc) const {
    if (rc != SQLITE_OK) throw Error(ErrorCode::ExecError, sqlite3_errmsg(db_));
  }

  sqlite3* db_;
  std::unique_ptr<sqlite3_stmt, StmtFinalizer> stmt_;
};

inline void exec(sqlite3* db, const char* sql) {
  char* err = nullptr;
  if (sqlite3_exec(db, sql, nullptr, nullptr, &err) != SQLITE_OK) {
    std::string msg = err ? err : "sqlite error";
    sqlite3_free(err);
    throw Error(ErrorCode::ExecError, msg);
  }
}

}  // namespace pubbie::detail
