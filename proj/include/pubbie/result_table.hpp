#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

namespace pubbie {

// A single cell of a query result. SQLite may also produce REAL values
// (AVG, arithmetic), so doubles are carried alongside integers and text.
using Cell = std::variant<std::monostate, std::int64_t, double, std::string>;

std::string cell_to_string(const Cell& cell);

struct ResultTable {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;

  bool well_formed() const;
  friend bool operator==(const ResultTable&, const ResultTable&) = default;
};

}  // namespace pubbie
