#pragma once

#include <optional>
#include <set>
#include <string>
#include <string_view>

#include "pubbie/program_label.hpp"

namespace pubbie::sql {

enum class StatementKind { Select, Update };

std::string_view to_string(StatementKind kind);

// A statement that passed the guard. `statement` is rebuilt from the token
// stream (single spaces, canonical quoting, no comments, no trailing
// semicolon) and is the only text ever handed to the engine. `source` keeps
// the caller's text after fence stripping, for display.
struct SqlPlan {
  StatementKind kind = StatementKind::Select;
  std::string statement;
  std::string source;
  std::set<std::string> tables;
  std::set<std::string> updated_columns;
  std::optional<ProgramLabel> new_prog_value;
  // UPDATE only: the rebuilt WHERE condition (without the keyword).
  std::string where_clause;

  friend bool operator==(const SqlPlan&, const SqlPlan&) = default;
};

// Removes ``` fences (taking the first fenced block when prose surrounds
// it), a leading "SQL:" label, and surrounding whitespace.
std::string strip_wrapping(std::string_view text);

// Admits exactly one SELECT over `pub`, or one `UPDATE pub SET prog = '<label>'
// WHERE ...`. Everything else throws pubbie::Error with one of NOT_SQL,
// MULTI_STATEMENT, FORBIDDEN_STATEMENT, FORBIDDEN_TABLE, FORBIDDEN_COLUMN,
// INVALID_LABEL or SYNTAX_ERROR (with byte offset into the stripped text).
SqlPlan validate(std::string_view sql_text);

StatementKind classify_statement(std::string_view sql_text);

}  // namespace pubbie::sql
