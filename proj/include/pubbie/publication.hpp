#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "pubbie/program_label.hpp"

namespace pubbie {

enum class LabelSource { GroundTruth, Predicted, UserCorrected };

std::string_view to_string(LabelSource source);
std::optional<LabelSource> label_source_from_string(std::string_view text);

// The 20 bibliographic attributes of a Scopus-style export, in table order.
inline constexpr std::size_t kAttributeCount = 20;
inline constexpr std::array<std::string_view, kAttributeCount> kAttributeNames{
    "eid",           "title",          "year",         "authors",
    "authors_with_affil", "affiliations", "author_keywords", "index_keywords",
    "source_title",  "doi",            "abstract",     "document_type",
    "publisher",     "volume",         "issue",        "page_range",
    "cited_by",      "language",       "open_access",  "link",
};

struct Publication {
  std::string eid;
  std::string title;
  std::optional<std::int64_t> year;
  std::string authors;
  std::string authors_with_affil;
  std::string affiliations;
  std::string author_keywords;
  std::string index_keywords;
  std::string source_title;
  std::string doi;
  std::string abstract;
  std::string document_type;
  std::string publisher;
  std::string volume;
  std::string issue;
  std::string page_range;
  std::optional<std::int64_t> cited_by;
  std::string language;
  std::string open_access;
  std::string link;

  ProgramLabel prog = ProgramLabel::no_program();
  LabelSource prog_source = LabelSource::Predicted;

  // Text form of an attribute by column name ("" for missing numbers).
  // Throws std::out_of_range for unknown names.
  std::string attribute(std::string_view name) const;
  void set_attribute(std::string_view name, std::string value);

  friend bool operator==(const Publication&, const Publication&) = default;
};

}  // namespace pubbie
