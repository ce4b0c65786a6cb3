#include "pubbie/sql_guard.hpp"

#include <array>
#include <cctype>
#include <vector>

#include "pubbie/error.hpp"
#include "pubbie/strings.hpp"

namespace pubbie::sql {
namespace {

enum class TokenType { Word, QuotedIdent, String, Number, Symbol, Semicolon };

struct Token {
  TokenType type;
  std::string text;  // words as written; strings and quoted idents unescaped
  std::size_t offset;
};

constexpr std::array<std::string_view, 23> kForbiddenLeading{
    "INSERT", "DELETE", "DROP",   "ALTER",   "PRAGMA",    "ATTACH",  "DETACH",   "CREATE",
    "REPLACE", "VACUUM", "REINDEX", "ANALYZE", "BEGIN",    "COMMIT",  "END",      "ROLLBACK",
    "SAVEPOINT", "RELEASE", "WITH", "EXPLAIN", "TRUNCATE", "GRANT",   "REVOKE"};

constexpr std::array<std::string_view, 32> kKeywords{
    "SELECT", "DISTINCT", "ALL",  "FROM",   "WHERE",  "GROUP",   "BY",     "HAVING",
    "ORDER",  "ASC",      "DESC", "LIMIT",  "OFFSET", "AND",     "OR",     "NOT",
    "LIKE",   "IN",       "IS",   "NULL",   "BETWEEN", "AS",     "UPDATE", "SET",
    "ESCAPE", "COLLATE",  "JOIN", "INNER",  "LEFT",   "CROSS",   "NATURAL", "UNION"};

constexpr std::array<std::string_view, 17> kFunctions{
    "COUNT", "SUM",   "AVG",   "MIN",    "MAX",   "TOTAL",    "LOWER",  "UPPER",       "LENGTH",
    "TRIM",  "ROUND", "ABS",   "SUBSTR", "INSTR", "COALESCE", "IFNULL", "GROUP_CONCAT"};

constexpr std::array<std::string_view, 3> kCollations{"NOCASE", "BINARY", "RTRIM"};

template <std::size_t N>
bool contains_ci(const std::array<std::string_view, N>& set, std::string_view word) {
  for (auto s : set) {
    if (strings::iequals(s, word)) return true;
  }
  return false;
}

bool is_keyword(std::string_view w) { return contains_ci(kKeywords, w); }

[[noreturn]] void syntax_error(const std::string& msg, std::size_t offset) {
  throw Error(ErrorCode::SyntaxError, "syntax error at offset " + std::to_string(offset) + ": " + msg,
              offset);
}

bool is_word_start(char c) {
  return std::isalpha(static_cast<unsigned char>(c)) != 0 || c == '_';
}
bool is_word_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '_';
}
bool is_digit(char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; }

std::vector<Token> tokenize(std::string_view s) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < s.size()) {
    const char c = s[i];
    if (strings::is_space(c)) {
      ++i;
      continue;
    }
    const std::size_t start = i;
    if (c == '-' && i + 1 < s.size() && s[i + 1] == '-') syntax_error("comments are not allowed", i);
    if (c == '/' && i + 1 < s.size() && s[i + 1] == '*') syntax_error("comments are not allowed", i);

    if (is_word_start(c)) {
      while (i < s.size() && is_word_char(s[i])) ++i;
      out.push_back({TokenType::Word, std::string(s.substr(start, i - start)), start});
      continue;
    }
    if (is_digit(c) || (c == '.' && i + 1 < s.size() && is_digit(s[i + 1]))) {
      while (i < s.size() && is_digit(s[i])) ++i;
      if (i < s.size() && s[i] == '.') {
        ++i;
        while (i < s.size() && is_digit(s[i])) ++i;
      }
      if (i < s.size() && (s[i] == 'e' || s[i] == 'E')) {
        std::size_t j = i + 1;
        if (j < s.size() && (s[j] == '+' || s[j] == '-')) ++j;
        if (j < s.size() && is_digit(s[j])) {
          i = j;
          while (i < s.size() && is_digit(s[i])) ++i;
        }
      }
      if (i < s.size() && is_word_char(s[i])) syntax_error("malformed number", start);
      out.push_back({TokenType::Number, std::string(s.substr(start, i - start)), start});
      continue;
    }
    if (c == '\'' || c == '"' || c == '`') {
      const char quote = c;
      std::string value;
      ++i;
      bool closed = false;
      while (i < s.size()) {
        if (s[i] == quote) {
          if (i + 1 < s.size() && s[i + 1] == quote) {
            value.push_back(quote);
            i += 2;
            continue;
          }
          ++i;
          closed = true;
          break;
        }
        value.push_back(s[i++]);
      }
      if (!closed) syntax_error("unterminated quoted text", start);
      out.push_back({quote == '\'' ? TokenType::String : TokenType::QuotedIdent, std::move(value),
                     start});
      continue;
    }
    if (c == ';') {
      out.push_back({TokenType::Semicolon, ";", start});
      ++i;
      continue;
    }
    static constexpr std::array<std::string_view, 6> kTwoChar{"<=", ">=", "<>", "!=", "==", "||"};
    bool matched = false;
    if (i + 1 < s.size()) {
      const auto two = s.substr(i, 2);
      for (auto op : kTwoChar) {
        if (op == two) {
          out.push_back({TokenType::Symbol, std::string(two), start});
          i += 2;
          matched = true;
          break;
        }
      }
    }
    if (matched) continue;
    if (std::string_view("=<>+-*/%(),.").find(c) != std::string_view::npos) {
      out.push_back({TokenType::Symbol, std::string(1, c), start});
      ++i;
      continue;
    }
    syntax_error(std::string("unexpected character '") + c + "'", start);
  }
  return out;
}

std::string quote(std::string_view text, char q) {
  std::string out(1, q);
  for (char c : text) {
    if (c == q) out.push_back(q);
    out.push_back(c);
  }
  out.push_back(q);
  return out;
}

std::string render(const Token& t) {
  switch (t.type) {
    case TokenType::Word:
      if (is_keyword(t.text) || contains_ci(kFunctions, t.text) || contains_ci(kCollations, t.text)) {
        return strings::to_upper(t.text);
      }
      return t.text;
    case TokenType::QuotedIdent: return quote(t.text, '"');
    case TokenType::String: return quote(t.text, '\'');
    default: return t.text;
  }
}

std::string join_tokens(const std::vector<Token>& tokens, std::size_t begin, std::size_t end) {
  std::string out;
  const Token* prev = nullptr;
  for (std::size_t i = begin; i < end; ++i) {
    const Token& t = tokens[i];
    bool space = prev != nullptr;
    if (prev) {
      const bool tight_before = t.type == TokenType::Symbol && (t.text == "," || t.text == ")" || t.text == ".");
      const bool tight_after = prev->type == TokenType::Symbol && (prev->text == "(" || prev->text == ".");
      const bool call = t.type == TokenType::Symbol && t.text == "(" && prev->type == TokenType::Word &&
                        contains_ci(kFunctions, prev->text);
      if (tight_before || tight_after || call) space = false;
    }
    if (space) out.push_back(' ');
    out += render(t);
    prev = &t;
  }
  return out;
}

// Recursive-descent validator over one statement's tokens.
class Parser {
 public:
  Parser(const std::vector<Token>& tokens, std::size_t end_offset)
      : t_(tokens), end_offset_(end_offset) {}

  SqlPlan parse() {
    SqlPlan plan;
    if (peek_word("SELECT")) {
      plan.kind = StatementKind::Select;
      parse_select(plan);
    } else if (peek_word("UPDATE")) {
      plan.kind = StatementKind::Update;
      parse_update(plan);
    } else {
      throw Error(ErrorCode::NotSql, "statement is neither SELECT nor UPDATE");
    }
    if (!at_end()) syntax_error("unexpected '" + cur().text + "'", cur().offset);
    plan.statement = join_tokens(t_, 0, t_.size());
    return plan;
  }

 private:
  const std::vector<Token>& t_;
  std::size_t end_offset_;
  std::size_t i_ = 0;

  bool at_end() const { return i_ >= t_.size(); }
  const Token& cur() const { return t_[i_]; }
  std::size_t offset() const { return at_end() ? end_offset_ : cur().offset; }

  bool peek_word(std::string_view w) const {
    return !at_end() && cur().type == TokenType::Word && strings::iequals(cur().text, w);
  }
  bool peek_symbol(std::string_view s) const {
    return !at_end() && cur().type == TokenType::Symbol && cur().text == s;
  }
  bool accept_word(std::string_view w) {
    if (!peek_word(w)) return false;
    ++i_;
    return true;
  }
  bool accept_symbol(std::string_view s) {
    if (!peek_symbol(s)) return false;
    ++i_;
    return true;
  }
  void expect_word(std::string_view w) {
    if (!accept_word(w)) syntax_error("expected " + std::string(w), offset());
  }
  void expect_symbol(std::string_view s) {
    if (!accept_symbol(s)) syntax_error("expected '" + std::string(s) + "'", offset());
  }

  bool peek_identifier() const {
    if (at_end()) return false;
    if (cur().type == TokenType::QuotedIdent) return true;
    return cur().type == TokenType::Word && !is_keyword(cur().text);
  }

  std::string expect_identifier(const char* what) {
    if (!peek_identifier()) syntax_error(std::string("expected ") + what, offset());
    return t_[i_++].text;
  }

  void parse_table_name(SqlPlan& plan) {
    const std::string name = expect_identifier("table name");
    if (accept_symbol(".")) {
      const std::string inner = expect_identifier("table name");
      throw Error(ErrorCode::ForbiddenTable,
                  "schema-qualified table '" + name + "." + inner + "' is not allowed");
    }
    if (!strings::iequals(name, "pub")) {
      throw Error(ErrorCode::ForbiddenTable, "table '" + name + "' is not allowed");
    }
    plan.tables.insert("pub");
  }

  void parse_select(SqlPlan& plan) {
    expect_word("SELECT");
    if (!accept_word("DISTINCT")) accept_word("ALL");
    do {
      parse_result_column();
    } while (accept_symbol(","));

    expect_word("FROM");
    if (peek_symbol("(")) syntax_error("subqueries are not supported", offset());
    parse_table_name(plan);
    parse_optional_alias();
    if (peek_symbol(",") || peek_word("JOIN") || peek_word("INNER") || peek_word("LEFT") ||
        peek_word("CROSS") || peek_word("NATURAL")) {
      const std::size_t at = offset();
      while (!at_end() && !peek_identifier()) ++i_;
      if (!at_end()) parse_table_name(plan);
      syntax_error("joins are not supported", at);
    }

    if (accept_word("WHERE")) parse_expr();
    if (accept_word("GROUP")) {
      expect_word("BY");
      do {
        parse_expr();
      } while (accept_symbol(","));
      if (accept_word("HAVING")) parse_expr();
    }
    if (accept_word("ORDER")) {
      expect_word("BY");
      do {
        parse_expr();
        if (!accept_word("ASC")) accept_word("DESC");
      } while (accept_symbol(","));
    }
    if (accept_word("LIMIT")) {
      parse_expr();
      if (accept_word("OFFSET") || accept_symbol(",")) parse_expr();
    }
  }

  void parse_result_column() {
    if (accept_symbol("*")) return;
    parse_expr();
    if (accept_word("AS")) {
      if (!at_end() && cur().type == TokenType::String) {
        ++i_;
      } else {
        expect_identifier("alias");
      }
    } else if (peek_identifier()) {
      ++i_;
    }
  }

  void parse_optional_alias() {
    if (accept_word("AS")) {
      expect_identifier("alias");
    } else if (peek_identifier()) {
      ++i_;
    }
  }

  void parse_update(SqlPlan& plan) {
    expect_word("UPDATE");
    if (peek_word("OR")) syntax_error("UPDATE OR is not supported", offset());
    parse_table_name(plan);
    expect_word("SET");
    do {
      const std::string column = expect_identifier("column name");
      if (!strings::iequals(column, "prog")) {
        throw Error(ErrorCode::ForbiddenColumn, "only column 'prog' may be updated, not '" + column + "'");
      }
      if (!accept_symbol("=")) expect_symbol("==");
      if (at_end() || cur().type != TokenType::String) {
        throw Error(ErrorCode::InvalidLabel, "new program value must be a quoted label");
      }
      const auto label = ProgramLabel::parse(cur().text);
      if (!label) {
        throw Error(ErrorCode::InvalidLabel, "'" + cur().text + "' is not a valid program label");
      }
      if (plan.new_prog_value && *plan.new_prog_value != *label) {
        throw Error(ErrorCode::InvalidLabel, "conflicting program assignments");
      }
      plan.new_prog_value = *label;
      plan.updated_columns.insert("prog");
      ++i_;
    } while (accept_symbol(","));
    if (!peek_word("WHERE")) syntax_error("UPDATE requires a WHERE clause", offset());
    ++i_;
    const std::size_t where_begin = i_;
    parse_expr();
    plan.where_clause = join_tokens(t_, where_begin, i_);
  }

  // expr := or
  void parse_expr() { parse_or(); }
  void parse_or() {
    parse_and();
    while (accept_word("OR")) parse_and();
  }
  void parse_and() {
    parse_not();
    while (accept_word("AND")) parse_not();
  }
  void parse_not() {
    if (accept_word("NOT")) {
      parse_not();
      return;
    }
    parse_predicate();
  }

  void parse_predicate() {
    parse_additive();
    static constexpr std::array<std::string_view, 8> kCmp{"=", "==", "!=", "<>", "<", "<=", ">", ">="};
    if (!at_end() && cur().type == TokenType::Symbol) {
      for (auto op : kCmp) {
        if (cur().text == op) {
          ++i_;
          parse_additive();
          return;
        }
      }
    }
    if (accept_word("IS")) {
      accept_word("NOT");
      parse_additive();
      return;
    }
    const bool negated = accept_word("NOT");
    if (accept_word("LIKE")) {
      parse_additive();
      if (accept_word("ESCAPE")) parse_additive();
      return;
    }
    if (accept_word("IN")) {
      expect_symbol("(");
      if (peek_word("SELECT")) syntax_error("subqueries are not supported", offset());
      do {
        parse_expr();
      } while (accept_symbol(","));
      expect_symbol(")");
      return;
    }
    if (accept_word("BETWEEN")) {
      parse_additive();
      expect_word("AND");
      parse_additive();
      return;
    }
    if (negated) syntax_error("expected LIKE, IN or BETWEEN after NOT", offset());
  }

  void parse_additive() {
    parse_multiplicative();
    while (accept_symbol("+") || accept_symbol("-") || accept_symbol("||")) parse_multiplicative();
  }
  void parse_multiplicative() {
    parse_unary();
    while (accept_symbol("*") || accept_symbol("/") || accept_symbol("%")) parse_unary();
  }
  void parse_unary() {
    if (accept_symbol("-") || accept_symbol("+")) {
      parse_unary();
      return;
    }
    parse_primary();
    if (accept_word("COLLATE")) {
      if (at_end() || cur().type != TokenType::Word || !contains_ci(kCollations, cur().text)) {
        syntax_error("unsupported collation", offset());
      }
      ++i_;
    }
  }

  void parse_primary() {
    if (at_end()) syntax_error("unexpected end of statement", end_offset_);
    const Token& tok = cur();
    switch (tok.type) {
      case TokenType::Number:
      case TokenType::String:
        ++i_;
        return;
      case TokenType::QuotedIdent:
        ++i_;
        parse_qualified_tail();
        return;
      case TokenType::Symbol:
        if (tok.text == "(") {
          ++i_;
          if (peek_word("SELECT")) syntax_error("subqueries are not supported", offset());
          parse_expr();
          expect_symbol(")");
          return;
        }
        syntax_error("unexpected '" + tok.text + "'", tok.offset);
      case TokenType::Word: {
        if (strings::iequals(tok.text, "NULL")) {
          ++i_;
          return;
        }
        if (i_ + 1 < t_.size() && t_[i_ + 1].type == TokenType::Symbol && t_[i_ + 1].text == "(") {
          if (!contains_ci(kFunctions, tok.text)) {
            syntax_error("function '" + tok.text + "' is not allowed", tok.offset);
          }
          i_ += 2;
          if (accept_symbol("*")) {
            expect_symbol(")");
            return;
          }
          if (accept_symbol(")")) return;
          accept_word("DISTINCT");
          do {
            parse_expr();
          } while (accept_symbol(","));
          expect_symbol(")");
          return;
        }
        if (is_keyword(tok.text)) syntax_error("unexpected keyword " + tok.text, tok.offset);
        ++i_;
        parse_qualified_tail();
        return;
      }
      case TokenType::Semicolon: break;
    }
    syntax_error("unexpected token", tok.offset);
  }

  void parse_qualified_tail() {
    if (accept_symbol(".")) expect_identifier("column name");
  }
};

std::string first_word_upper(std::string_view text) {
  std::size_t i = 0;
  while (i < text.size() && strings::is_space(text[i])) ++i;
  std::size_t j = i;
  while (j < text.size() && is_word_char(text[j])) ++j;
  return strings::to_upper(text.substr(i, j - i));
}

}  // namespace

std::string_view to_string(StatementKind kind) {
  return kind == StatementKind::Select ? "SELECT" : "UPDATE";
}

std::string strip_wrapping(std::string_view text) {
  std::string_view s = strings::trim(text);
  const auto fence = s.find("```");
  if (fence != std::string_view::npos) {
    auto body_start = s.find('\n', fence);
    if (body_start != std::string_view::npos) {
      ++body_start;
      const auto close = s.find("```", body_start);
      s = s.substr(body_start, close == std::string_view::npos ? std::string_view::npos
                                                               : close - body_start);
    } else {
      // Single-line fence: ```SELECT ...```
      s = s.substr(fence + 3);
      const auto close = s.find("```");
      if (close != std::string_view::npos) s = s.substr(0, close);
      if (s.size() >= 3 && strings::iequals(s.substr(0, 3), "sql") &&
          (s.size() == 3 || strings::is_space(s[3]))) {
        s.remove_prefix(3);
      }
    }
    s = strings::trim(s);
  }
  if (s.size() >= 4 && strings::iequals(s.substr(0, 4), "sql:")) s = strings::trim(s.substr(4));
  return std::string(s);
}

SqlPlan validate(std::string_view sql_text) {
  const std::string stripped = strip_wrapping(sql_text);
  if (stripped.empty()) throw Error(ErrorCode::NotSql, "no SQL statement found");

  const std::string lead = first_word_upper(stripped);
  const bool forbidden_lead = contains_ci(kForbiddenLeading, lead);
  if (lead != "SELECT" && lead != "UPDATE" && !forbidden_lead) {
    throw Error(ErrorCode::NotSql, "no SQL statement found");
  }

  const auto tokens = tokenize(stripped);

  // Split at top-level semicolons; the tokenizer already keeps semicolons
  // inside literals out of this.
  std::vector<std::vector<Token>> statements(1);
  for (const auto& tok : tokens) {
    if (tok.type == TokenType::Semicolon) {
      statements.emplace_back();
    } else {
      statements.back().push_back(tok);
    }
  }
  std::erase_if(statements, [](const auto& st) { return st.empty(); });
  if (statements.empty()) throw Error(ErrorCode::NotSql, "no SQL statement found");

  if (statements.size() > 1) {
    throw Error(ErrorCode::MultiStatement, "exactly one statement is allowed");
  }
  const Token& first = statements.front().front();
  if (first.type == TokenType::Word && contains_ci(kForbiddenLeading, first.text)) {
    throw Error(ErrorCode::ForbiddenStatement, strings::to_upper(first.text) + " statements are not allowed");
  }

  std::size_t end_offset = stripped.size();
  while (end_offset > 0 && (strings::is_space(stripped[end_offset - 1]) || stripped[end_offset - 1] == ';')) {
    --end_offset;
  }
  // Table references anywhere, nested selects included, are checked before
  // the grammar so that reaching for another table reads as such.
  const auto& st = statements.front();
  for (std::size_t k = 0; k + 1 < st.size(); ++k) {
    const bool source = strings::iequals(st[k].text, "FROM") || strings::iequals(st[k].text, "JOIN");
    if (st[k].type != TokenType::Word || !source) continue;
    const Token& next = st[k + 1];
    const bool named =
        next.type == TokenType::QuotedIdent || (next.type == TokenType::Word && !is_keyword(next.text));
    if (named && !strings::iequals(next.text, "pub")) {
      throw Error(ErrorCode::ForbiddenTable, "table '" + next.text + "' is not allowed");
    }
  }

  SqlPlan plan = Parser(statements.front(), end_offset).parse();
  plan.source = stripped;
  return plan;
}

StatementKind classify_statement(std::string_view sql_text) { return validate(sql_text).kind; }

}  // namespace pubbie::sql
