#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "pubbie/publication.hpp"

namespace pubbie {

struct RetrievalHit {
  std::string eid;
  double score = 0.0;
  std::string snippet;
};

// TF-IDF over title, author and index keywords, and abstract. Term weight is
// raw count times idf = ln((1 + N) / (1 + df)) + 1; documents and queries
// are compared by cosine similarity.
class RetrievalIndex {
 public:
  RetrievalIndex() = default;
  explicit RetrievalIndex(const std::vector<Publication>& pubs);

  // Up to k hits with positive score, best first; ties keep insertion order.
  std::vector<RetrievalHit> query(std::string_view text, std::size_t k = 5) const;

  std::size_t size() const { return docs_.size(); }
  bool empty() const { return docs_.empty(); }

  // Text the index sees for a publication.
  static std::string indexed_text(const Publication& pub);

 private:
  struct Doc {
    std::string eid;
    std::string snippet;
    std::vector<std::pair<std::size_t, double>> weights;  // term id, weight; sorted by term id
    double norm = 0.0;
  };

  std::vector<std::string> vocabulary_;  // sorted
  std::vector<double> idf_;
  std::vector<Doc> docs_;
};

// Context block for the generic-answer prompt, one line per hit.
std::string render_hits(const std::vector<RetrievalHit>& hits);

}  // namespace pubbie
