#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pubbie/result_table.hpp"

namespace pubbie::csv {

struct Record {
  std::size_t line = 0;  // 1-based line on which the record starts
  std::vector<std::string> fields;
  std::optional<std::string> error;  // set when the record is malformed
};

// Streaming reader over an in-memory buffer: comma delimiter, double-quote
// quoting with "" escapes, LF or CRLF record terminators, optional UTF-8 BOM.
// Malformed records are reported with `error` set and the reader resyncs at
// the next line break.
class Reader {
 public:
  explicit Reader(std::string_view data);

  std::optional<Record> next();

 private:
  std::string_view data_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
};

std::vector<Record> read_all(std::string_view data);

// Quotes a field when it contains a comma, quote, CR or LF.
std::string escape_field(std::string_view value);

// Header line plus one line per row, LF terminated. NULL cells are empty.
std::string write_table(const ResultTable& table);

}  // namespace pubbie::csv
