#include "pubbie/program_label.hpp"

#include <stdexcept>

#include "pubbie/strings.hpp"

namespace pubbie {
namespace {

constexpr std::array<std::string_view, ProgramLabel::kCount> kNames{
    "Aging in Place",
    "Applied Quantum Computing",
    "Artificial Intelligence for Design",
    "Artificial Intelligence for Logistics",
    "Critical Battery Materials",
    "Disruptive Technology Solutions for Cell and Gene Therapy",
    "High-throughput and Secure Networks",
    "Integrated Sensing Platforms",
    "Internet of Things: Quantum Sensors",
    "Materials for Clean Fuels",
    "No Program",
    "Pandemic Response",
    "Sustainable Protein Production",
};

constexpr std::size_t kNoProgramIndex = 10;

}  // namespace

const std::array<std::string_view, ProgramLabel::kCount>& ProgramLabel::canonical_names() {
  return kNames;
}

ProgramLabel ProgramLabel::from_index(std::size_t index) {
  if (index >= kCount) throw std::out_of_range("program label index");
  return ProgramLabel(index);
}

ProgramLabel ProgramLabel::no_program() { return ProgramLabel(kNoProgramIndex); }

bool ProgramLabel::is_no_program() const { return index_ == kNoProgramIndex; }

std::optional<ProgramLabel> ProgramLabel::parse(std::string_view text) {
  const auto t = strings::trim(text);
  if (t.empty()) return std::nullopt;
  for (std::size_t i = 0; i < kCount; ++i) {
    if (strings::iequals(t, kNames[i])) return ProgramLabel(i);
  }
  if (strings::iequals(t, "NO_PROGRAM") || strings::iequals(t, "none")) {
    return no_program();
  }
  return std::nullopt;
}

}  // namespace pubbie
