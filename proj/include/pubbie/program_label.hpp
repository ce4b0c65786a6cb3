#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

namespace pubbie {

// One of the 12 challenge programs, or no program. The set is closed; the
// index of a label is its position in canonical (alphabetical) order and is
// also the tie-break order for every classifier argmax.
class ProgramLabel {
 public:
  static constexpr std::size_t kCount = 13;

  static const std::array<std::string_view, kCount>& canonical_names();

  static ProgramLabel from_index(std::size_t index);
  static ProgramLabel no_program();

  // Case-insensitive, whitespace-trimmed. "NO_PROGRAM" and "none" are
  // accepted aliases for the unaffiliated label.
  static std::optional<ProgramLabel> parse(std::string_view text);

  std::size_t index() const { return index_; }
  std::string_view name() const { return canonical_names()[index_]; }
  bool is_no_program() const;

  friend bool operator==(ProgramLabel a, ProgramLabel b) { return a.index_ == b.index_; }
  friend auto operator<=>(ProgramLabel a, ProgramLabel b) { return a.index_ <=> b.index_; }

 private:
  explicit ProgramLabel(std::size_t index) : index_(index) {}
  std::size_t index_;
};

}  // namespace pubbie
