#include <algorithm>
#include <cmath>
#include <cstdio>
#include <json.hpp>

#include "pubbie/orchestrator.hpp"
#include "pubbie/strings.hpp"

namespace pubbie {
namespace {

using json = nlohmann::json;
using Rows = std::vector<std::vector<std::string>>;

// Column names and row order are ignored.
Rows canonical(const ResultTable& table) {
  Rows rows;
  rows.reserve(table.rows.size());
  for (const auto& r : table.rows) {
    std::vector<std::string> row;
    row.reserve(r.size());
    for (const auto& c : r) row.push_back(cell_to_string(c));
    rows.push_back(std::move(row));
  }
  std::sort(rows.begin(), rows.end());
  return rows;
}

}  // namespace

std::string_view to_string(Stratum s) { return s == Stratum::Frequent ? "FREQUENT" : "INFREQUENT"; }

double Nl2SqlReport::accuracy_percent() const {
  if (total() == 0) return 0.0;
  const double pct = 100.0 * static_cast<double>(passed()) / static_cast<double>(total());
  return std::round(pct * 1e4) / 1e4;
}

std::string Nl2SqlReport::accuracy_text() const {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f%%", accuracy_percent());
  return buf;
}

std::string Nl2SqlReport::to_text() const {
  std::string out = "Text-to-SQL evaluation: " + std::to_string(passed()) + "/" + std::to_string(total()) +
                    " passed\n";
  out += "  FREQUENT    " + std::to_string(frequent_passed) + "/" + std::to_string(frequent_total) + "\n";
  out += "  INFREQUENT  " + std::to_string(infrequent_passed) + "/" + std::to_string(infrequent_total) + "\n";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", accuracy_percent());
  out += "Overall accuracy: " + accuracy_text() + " (" + buf + ")\n";
  for (const auto& c : cases) {
    if (c.passed) continue;
    out += "FAIL [" + std::string(to_string(c.stratum)) + "] " + c.question + "\n";
    if (!c.generated_sql.empty()) out += "  sql: " + c.generated_sql + "\n";
    out += "  " + c.detail + "\n";
  }
  return out;
}

std::vector<Nl2SqlCase> parse_nl2sql_cases(std::string_view text) {
  std::vector<Nl2SqlCase> cases;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < text.size()) {
    const auto end = text.find('\n', pos);
    const auto len = end == std::string_view::npos ? std::string_view::npos : end - pos;
    const auto line = strings::trim(text.substr(pos, len));
    pos = end == std::string_view::npos ? text.size() : end + 1;
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    auto fail = [&](const std::string& msg) -> void {
      throw Error(ErrorCode::ParseError, "eval corpus line " + std::to_string(line_no) + ": " + msg, line_no);
    };
    try {
      const json j = json::parse(line);
      Nl2SqlCase c;
      c.question = j.at("question").get<std::string>();
      const auto stratum = strings::to_upper(j.at("stratum").get<std::string>());
      if (stratum == "FREQUENT") {
        c.stratum = Stratum::Frequent;
      } else if (stratum == "INFREQUENT") {
        c.stratum = Stratum::Infrequent;
      } else {
        fail("stratum must be FREQUENT or INFREQUENT");
      }
      if (j.contains("gold_sql")) c.gold_sql = j.at("gold_sql").get<std::string>();
      if (j.contains("gold_rows")) c.gold_rows = j.at("gold_rows").get<Rows>();
      if (j.contains("gold_count")) c.gold_count = j.at("gold_count").get<std::int64_t>();
      const int golds = int(c.gold_sql.has_value()) + int(c.gold_rows.has_value()) + int(c.gold_count.has_value());
      if (golds != 1) fail("exactly one of gold_sql, gold_rows, gold_count is required");
      cases.push_back(std::move(c));
    } catch (const json::exception& e) {
      fail(e.what());
    }
  }
  return cases;
}

Nl2SqlReport Orchestrator::evaluate_text_to_sql(const std::vector<Nl2SqlCase>& cases) {
  Nl2SqlReport report;
  const std::string schema = store_.schema_description();
  for (const auto& c : cases) {
    Nl2SqlCaseResult r;
    r.question = c.question;
    r.stratum = c.stratum;
    try {
      StageLog log;
      if (classify_question(c.question, log) == QuestionType::Generic) {
        r.detail = "classified as GENERIC, no SQL generated";
      } else {
        const auto plan = generate_sql(c.question, schema, log);
        r.generated_sql = plan.source;

        std::optional<sql::SqlPlan> gold_plan;
        if (c.gold_sql) gold_plan = sql::validate(*c.gold_sql);
        const bool expect_update =
            c.gold_count.has_value() || (gold_plan && gold_plan->kind == sql::StatementKind::Update);

        if (expect_update) {
          if (plan.kind != sql::StatementKind::Update) {
            r.detail = "expected an UPDATE statement";
          } else {
            const auto want = c.gold_count ? *c.gold_count : store_.count_update(*gold_plan);
            const auto got = store_.count_update(plan);
            r.passed = want == got;
            if (!r.passed) r.detail = "affects " + std::to_string(got) + " rows, expected " + std::to_string(want);
          }
        } else if (plan.kind != sql::StatementKind::Select) {
          r.detail = "expected a SELECT statement";
        } else {
          const Rows want = c.gold_rows ? [&] { auto g = *c.gold_rows; std::sort(g.begin(), g.end()); return g; }()
                                        : canonical(store_.execute_select(*gold_plan));
          const Rows got = canonical(store_.execute_select(plan));
          r.passed = want == got;
          if (!r.passed) {
            r.detail = "result differs from gold (" + std::to_string(got.size()) + " rows vs " +
                       std::to_string(want.size()) + ")";
          }
        }
      }
    } catch (const SqlGenerationError& e) {
      r.detail = e.what();
    } catch (const Error& e) {
      if (e.code() == ErrorCode::StoreUnavailable || e.code() == ErrorCode::StoreCorrupt) throw;
      r.detail = std::string(to_string(e.code())) + ": " + e.what();
    }
    auto& passed = c.stratum == Stratum::Frequent ? report.frequent_passed : report.infrequent_passed;
    auto& total = c.stratum == Stratum::Frequent ? report.frequent_total : report.infrequent_total;
    ++total;
    if (r.passed) ++passed;
    report.cases.push_back(std::move(r));
  }
  return report;
}

}  // namespace pubbie
