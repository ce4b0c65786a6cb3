#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <string>
#include <string_view>

#include "pubbie/publication.hpp"

namespace pubbie {

// Attributes the classifiers see, in rendering order.
inline constexpr std::size_t kFeatureAttributeCount = 10;
inline constexpr std::array<std::string_view, kFeatureAttributeCount> kFeatureAttributes{
    "title",          "authors",  "authors_with_affil", "affiliations",  "author_keywords",
    "index_keywords", "abstract", "source_title",       "document_type", "publisher"};

struct FeatureText {
  std::array<std::string, kFeatureAttributeCount> values;  // newline-normalized
  std::string rendered;  // "name: value" lines joined by '\n'

  // Attribute values only, space-separated. This is what bag-of-words sees.
  std::string body() const;

  friend bool operator==(const FeatureText&, const FeatureText&) = default;
};

FeatureText render_features(const Publication& pub);

// Feature text carrying `text` as the title and nothing else. Handy for
// corpora that are not built from publications.
FeatureText feature_text_from(std::string_view text);

using TokenCounts = std::map<std::string, std::size_t>;

// Lowercases ASCII, splits on anything that is not an ASCII letter/digit
// (bytes >= 0x80 count as word characters so UTF-8 words stay whole), and
// drops tokens shorter than two bytes.
TokenCounts tokenize(std::string_view text);

}  // namespace pubbie
