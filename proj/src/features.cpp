#include "pubbie/features.hpp"

#include <cctype>

namespace pubbie {
namespace {

std::string normalize_newlines(std::string_view value) {
  std::string out;
  out.reserve(value.size());
  for (std::size_t i = 0; i < value.size(); ++i) {
    const char c = value[i];
    if (c == '\r') {
      if (i + 1 < value.size() && value[i + 1] == '\n') ++i;
      out.push_back(' ');
    } else if (c == '\n') {
      out.push_back(' ');
    } else {
      out.push_back(c);
    }
  }
  return out;
}

bool is_token_byte(unsigned char c) { return std::isalnum(c) != 0 || c >= 0x80; }

}  // namespace

std::string FeatureText::body() const {
  std::string out;
  for (const auto& v : values) {
    if (!out.empty()) out.push_back(' ');
    out += v;
  }
  return out;
}

FeatureText render_features(const Publication& pub) {
  FeatureText ft;
  for (std::size_t i = 0; i < kFeatureAttributeCount; ++i) {
    ft.values[i] = normalize_newlines(pub.attribute(kFeatureAttributes[i]));
    if (i) ft.rendered.push_back('\n');
    ft.rendered += kFeatureAttributes[i];
    ft.rendered += ": ";
    ft.rendered += ft.values[i];
  }
  return ft;
}

FeatureText feature_text_from(std::string_view text) {
  Publication pub;
  pub.title = std::string(text);
  return render_features(pub);
}

TokenCounts tokenize(std::string_view text) {
  TokenCounts counts;
  std::string token;
  auto flush = [&] {
    if (token.size() >= 2) ++counts[token];
    token.clear();
  };
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (is_token_byte(c)) {
      token.push_back(c < 0x80 ? static_cast<char>(std::tolower(c)) : ch);
    } else {
      flush();
    }
  }
  flush();
  return counts;
}

}  // namespace pubbie
