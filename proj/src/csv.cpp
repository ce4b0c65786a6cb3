#include "pubbie/csv.hpp"

#include <array>
#include <charconv>
#include <type_traits>

namespace pubbie {

std::string cell_to_string(const Cell& cell) {
  return std::visit(
      [](const auto& v) -> std::string {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, std::monostate>) {
          return {};
        } else if constexpr (std::is_same_v<T, std::int64_t>) {
          return std::to_string(v);
        } else if constexpr (std::is_same_v<T, double>) {
          std::array<char, 64> buf{};
          const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
          return std::string(buf.data(), res.ptr);
        } else {
          return v;
        }
      },
      cell);
}

bool ResultTable::well_formed() const {
  for (const auto& row : rows) {
    if (row.size() != columns.size()) return false;
  }
  return true;
}

namespace csv {

Reader::Reader(std::string_view data) : data_(data) {
  if (data_.substr(0, 3) == "\xEF\xBB\xBF") pos_ = 3;
}

std::optional<Record> Reader::next() {
  if (pos_ >= data_.size()) return std::nullopt;

  Record rec;
  rec.line = line_;
  std::string field;
  bool in_quotes = false;
  bool field_was_quoted = false;
  bool after_closing_quote = false;

  auto finish_line = [&] {
    // Skip the rest of a malformed line so the next record starts clean.
    while (pos_ < data_.size() && data_[pos_] != '\n') ++pos_;
    if (pos_ < data_.size()) {
      ++pos_;
      ++line_;
    }
  };

  while (pos_ < data_.size()) {
    const char c = data_[pos_];
    if (in_quotes) {
      if (c == '"') {
        if (pos_ + 1 < data_.size() && data_[pos_ + 1] == '"') {
          field.push_back('"');
          pos_ += 2;
          continue;
        }
        in_quotes = false;
        after_closing_quote = true;
        ++pos_;
        continue;
      }
      if (c == '\n') ++line_;
      field.push_back(c);
      ++pos_;
      continue;
    }

    if (c == ',') {
      rec.fields.push_back(std::move(field));
      field.clear();
      field_was_quoted = false;
      after_closing_quote = false;
      ++pos_;
      continue;
    }
    if (c == '\r' && pos_ + 1 < data_.size() && data_[pos_ + 1] == '\n') {
      ++pos_;
      continue;
    }
    if (c == '\n') {
      ++pos_;
      ++line_;
      rec.fields.push_back(std::move(field));
      return rec;
    }
    if (after_closing_quote) {
      rec.error = "unexpected character after closing quote";
      rec.fields.push_back(std::move(field));
      finish_line();
      return rec;
    }
    if (c == '"') {
      if (!field.empty() || field_was_quoted) {
        rec.error = "stray quote inside unquoted field";
        rec.fields.push_back(std::move(field));
        finish_line();
        return rec;
      }
      in_quotes = true;
      field_was_quoted = true;
      ++pos_;
      continue;
    }
    field.push_back(c);
    ++pos_;
  }

  if (in_quotes) rec.error = "unterminated quoted field";
  rec.fields.push_back(std::move(field));
  return rec;
}

std::vector<Record> read_all(std::string_view data) {
  std::vector<Record> out;
  Reader reader(data);
  while (auto rec = reader.next()) out.push_back(std::move(*rec));
  return out;
}

std::string escape_field(std::string_view value) {
  if (value.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(value);
  std::string out;
  out.reserve(value.size() + 2);
  out.push_back('"');
  for (char c : value) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::string write_table(const ResultTable& table) {
  std::string out;
  auto write_line = [&out](const auto& values, auto&& to_text) {
    bool first = true;
    for (const auto& v : values) {
      if (!first) out.push_back(',');
      first = false;
      out += escape_field(to_text(v));
    }
    out.push_back('\n');
  };
  write_line(table.columns, [](const std::string& s) { return s; });
  for (const auto& row : table.rows) {
    write_line(row, [](const Cell& c) { return cell_to_string(c); });
  }
  return out;
}

}  // namespace csv
}  // namespace pubbie
