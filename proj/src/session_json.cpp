#include <algorithm>
#include <json.hpp>

#include "pubbie/orchestrator.hpp"
#include "pubbie/strings.hpp"

namespace pubbie {
namespace {

using json = nlohmann::json;

template <typename T>
json opt(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}

std::optional<std::string> opt_string(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<std::string>();
}

}  // namespace

std::string_view to_string(QuestionType type) {
  switch (type) {
    case QuestionType::Generic: return "GENERIC";
    case QuestionType::SqlQuery: return "SQL_QUERY";
    case QuestionType::SqlUpdate: return "SQL_UPDATE";
  }
  return "GENERIC";
}

std::optional<QuestionType> question_type_from_string(std::string_view text) {
  std::string t = strings::to_upper(strings::trim(text));
  std::replace(t.begin(), t.end(), ' ', '_');
  std::replace(t.begin(), t.end(), '-', '_');
  if (t == "GENERIC") return QuestionType::Generic;
  if (t == "SQL_QUERY" || t == "SQL") return QuestionType::SqlQuery;
  if (t == "SQL_UPDATE") return QuestionType::SqlUpdate;
  return std::nullopt;
}

std::string_view to_string(TurnKind kind) {
  switch (kind) {
    case TurnKind::Chat: return "chat";
    case TurnKind::Upload: return "upload";
    case TurnKind::Export: return "export";
  }
  return "chat";
}

std::string turn_to_json(const ChatTurn& t) {
  json trace = json::array();
  for (const auto& e : t.stage_trace) trace.push_back({{"stage", llm::to_string(e.stage)}, {"text", e.text}});
  json j{{"seq", t.seq},
         {"kind", to_string(t.kind)},
         {"user_text", t.user_text},
         {"rewritten_text", t.rewritten_text},
         {"question_type", t.question_type ? json(to_string(*t.question_type)) : json(nullptr)},
         {"sql", opt(t.sql)},
         {"sql_result_summary", opt(t.sql_result_summary)},
         {"workflow_summary", opt(t.workflow_summary)},
         {"agent_text", t.agent_text},
         {"stage_trace", trace},
         {"warnings", t.warnings},
         {"finish_reason", llm::to_string(t.finish_reason)},
         {"error", t.error ? json(to_string(*t.error)) : json(nullptr)}};
  return j.dump();
}

ChatTurn turn_from_json(std::string_view text) {
  try {
    const json j = json::parse(text);
    ChatTurn t;
    t.seq = j.at("seq").get<std::size_t>();
    const auto kind = j.at("kind").get<std::string>();
    t.kind = kind == "upload" ? TurnKind::Upload : kind == "export" ? TurnKind::Export : TurnKind::Chat;
    t.user_text = j.at("user_text").get<std::string>();
    t.rewritten_text = j.at("rewritten_text").get<std::string>();
    if (auto qt = opt_string(j, "question_type")) t.question_type = question_type_from_string(*qt);
    t.sql = opt_string(j, "sql");
    t.sql_result_summary = opt_string(j, "sql_result_summary");
    t.workflow_summary = opt_string(j, "workflow_summary");
    t.agent_text = j.at("agent_text").get<std::string>();
    for (const auto& e : j.at("stage_trace")) {
      const auto stage = llm::stage_from_string(e.at("stage").get<std::string>());
      if (!stage) throw Error(ErrorCode::ParseError, "unknown stage in stored turn");
      t.stage_trace.push_back({*stage, e.at("text").get<std::string>()});
    }
    t.warnings = j.at("warnings").get<std::vector<std::string>>();
    const auto reason = j.at("finish_reason").get<std::string>();
    t.finish_reason = reason == "error"    ? llm::FinishReason::Error
                      : reason == "length" ? llm::FinishReason::Length
                                           : llm::FinishReason::Stop;
    if (auto code = opt_string(j, "error")) t.error = error_code_from_string(*code);
    return t;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("stored turn is not valid: ") + e.what());
  }
}

std::string result_to_json(const ResultTable& table) {
  json rows = json::array();
  for (const auto& row : table.rows) {
    json r = json::array();
    for (const auto& cell : row) {
      std::visit(
          [&](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, std::monostate>) {
              r.push_back(nullptr);
            } else {
              r.push_back(v);
            }
          },
          cell);
    }
    rows.push_back(std::move(r));
  }
  return json{{"columns", table.columns}, {"rows", rows}}.dump();
}

ResultTable result_from_json(std::string_view text) {
  try {
    const json j = json::parse(text);
    ResultTable t;
    t.columns = j.at("columns").get<std::vector<std::string>>();
    for (const auto& r : j.at("rows")) {
      std::vector<Cell> row;
      for (const auto& c : r) {
        if (c.is_null()) {
          row.emplace_back(std::monostate{});
        } else if (c.is_number_integer()) {
          row.emplace_back(c.get<std::int64_t>());
        } else if (c.is_number()) {
          row.emplace_back(c.get<double>());
        } else {
          row.emplace_back(c.get<std::string>());
        }
      }
      t.rows.push_back(std::move(row));
    }
    return t;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("stored result is not valid: ") + e.what());
  }
}

std::string render_result(const ResultTable& table, std::size_t max_rows) {
  auto show = [](const Cell& c) {
    return std::holds_alternative<std::monostate>(c) ? std::string("NULL") : cell_to_string(c);
  };
  if (table.rows.size() == 1 && table.columns.size() == 1) return show(table.rows[0][0]);
  if (table.rows.empty()) return "(no rows)";

  const std::size_t shown = std::min(max_rows, table.rows.size());
  std::vector<std::size_t> width(table.columns.size());
  for (std::size_t c = 0; c < table.columns.size(); ++c) width[c] = table.columns[c].size();
  std::vector<std::vector<std::string>> cells(shown);
  for (std::size_t r = 0; r < shown; ++r) {
    for (std::size_t c = 0; c < table.columns.size(); ++c) {
      std::string s = c < table.rows[r].size() ? show(table.rows[r][c]) : std::string();
      std::replace(s.begin(), s.end(), '\n', ' ');
      width[c] = std::max(width[c], s.size());
      cells[r].push_back(std::move(s));
    }
  }

  auto line = [&](const std::vector<std::string>& values) {
    std::string out;
    for (std::size_t c = 0; c < values.size(); ++c) {
      if (c) out += " | ";
      out += values[c];
      if (c + 1 < values.size()) out.append(width[c] - values[c].size(), ' ');
    }
    return out + '\n';
  };
  std::string out = line(table.columns);
  for (std::size_t c = 0; c < width.size(); ++c) {
    if (c) out += "-+-";
    out.append(width[c], '-');
  }
  out += '\n';
  for (const auto& row : cells) out += line(row);
  if (table.rows.size() > shown) out += "+" + std::to_string(table.rows.size() - shown) + " more rows\n";
  out.pop_back();
  return out;
}

}  // namespace pubbie
