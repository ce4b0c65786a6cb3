#include "pubbie/publication.hpp"

#include <charconv>
#include <stdexcept>

#include "pubbie/error.hpp"
#include "pubbie/strings.hpp"

namespace pubbie {
namespace {

using TextField = std::string Publication::*;
using IntField = std::optional<std::int64_t> Publication::*;

struct FieldRef {
  TextField text = nullptr;
  IntField integer = nullptr;
};

FieldRef field_for(std::string_view name) {
  static const std::array<std::pair<std::string_view, FieldRef>, kAttributeCount> table{{
      {"eid", {&Publication::eid, nullptr}},
      {"title", {&Publication::title, nullptr}},
      {"year", {nullptr, &Publication::year}},
      {"authors", {&Publication::authors, nullptr}},
      {"authors_with_affil", {&Publication::authors_with_affil, nullptr}},
      {"affiliations", {&Publication::affiliations, nullptr}},
      {"author_keywords", {&Publication::author_keywords, nullptr}},
      {"index_keywords", {&Publication::index_keywords, nullptr}},
      {"source_title", {&Publication::source_title, nullptr}},
      {"doi", {&Publication::doi, nullptr}},
      {"abstract", {&Publication::abstract, nullptr}},
      {"document_type", {&Publication::document_type, nullptr}},
      {"publisher", {&Publication::publisher, nullptr}},
      {"volume", {&Publication::volume, nullptr}},
      {"issue", {&Publication::issue, nullptr}},
      {"page_range", {&Publication::page_range, nullptr}},
      {"cited_by", {nullptr, &Publication::cited_by}},
      {"language", {&Publication::language, nullptr}},
      {"open_access", {&Publication::open_access, nullptr}},
      {"link", {&Publication::link, nullptr}},
  }};
  for (const auto& [n, ref] : table) {
    if (n == name) return ref;
  }
  throw std::out_of_range("unknown publication attribute: " + std::string(name));
}

}  // namespace

std::string_view to_string(LabelSource source) {
  switch (source) {
    case LabelSource::GroundTruth: return "GROUND_TRUTH";
    case LabelSource::Predicted: return "PREDICTED";
    case LabelSource::UserCorrected: return "USER_CORRECTED";
  }
  return "PREDICTED";
}

std::optional<LabelSource> label_source_from_string(std::string_view text) {
  if (text == "GROUND_TRUTH") return LabelSource::GroundTruth;
  if (text == "PREDICTED") return LabelSource::Predicted;
  if (text == "USER_CORRECTED") return LabelSource::UserCorrected;
  return std::nullopt;
}

std::string Publication::attribute(std::string_view name) const {
  const auto ref = field_for(name);
  if (ref.text) return this->*ref.text;
  const auto& v = this->*ref.integer;
  return v ? std::to_string(*v) : std::string();
}

void Publication::set_attribute(std::string_view name, std::string value) {
  const auto ref = field_for(name);
  if (ref.text) {
    this->*ref.text = std::move(value);
    return;
  }
  const auto t = strings::trim(value);
  if (t.empty()) {
    this->*ref.integer = std::nullopt;
    return;
  }
  std::int64_t parsed = 0;
  const auto [end, ec] = std::from_chars(t.data(), t.data() + t.size(), parsed);
  if (ec != std::errc() || end != t.data() + t.size()) {
    throw Error(ErrorCode::InvalidArgument,
                std::string(name) + " is not an integer: '" + std::string(t) + "'");
  }
  this->*ref.integer = parsed;
}

}  // namespace pubbie
