#include "pubbie/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "pubbie/features.hpp"

namespace pubbie {
namespace {

constexpr std::size_t kSnippetAbstractChars = 240;

std::string snippet_for(const Publication& pub) {
  std::string s = "\"" + pub.title + "\"";
  if (pub.year) s += " (" + std::to_string(*pub.year) + ")";
  s += ", program: " + std::string(pub.prog.name());
  if (!pub.abstract.empty()) {
    std::string abstract = pub.abstract.substr(0, kSnippetAbstractChars);
    std::replace(abstract.begin(), abstract.end(), '\n', ' ');
    s += ". " + abstract;
    if (pub.abstract.size() > kSnippetAbstractChars) s += "...";
  }
  return s;
}

}  // namespace

std::string RetrievalIndex::indexed_text(const Publication& pub) {
  return pub.title + "\n" + pub.author_keywords + "\n" + pub.index_keywords + "\n" + pub.abstract;
}

RetrievalIndex::RetrievalIndex(const std::vector<Publication>& pubs) {
  std::vector<TokenCounts> counts;
  counts.reserve(pubs.size());
  std::map<std::string, std::size_t> df;
  for (const auto& pub : pubs) {
    counts.push_back(tokenize(indexed_text(pub)));
    for (const auto& [term, n] : counts.back()) ++df[term];
  }
  vocabulary_.reserve(df.size());
  idf_.reserve(df.size());
  const double n_docs = static_cast<double>(pubs.size());
  for (const auto& [term, d] : df) {
    vocabulary_.push_back(term);
    idf_.push_back(std::log((1.0 + n_docs) / (1.0 + static_cast<double>(d))) + 1.0);
  }

  docs_.reserve(pubs.size());
  for (std::size_t i = 0; i < pubs.size(); ++i) {
    Doc doc;
    doc.eid = pubs[i].eid;
    doc.snippet = snippet_for(pubs[i]);
    double sq = 0.0;
    for (const auto& [term, n] : counts[i]) {
      const auto id = static_cast<std::size_t>(
          std::lower_bound(vocabulary_.begin(), vocabulary_.end(), term) - vocabulary_.begin());
      const double w = static_cast<double>(n) * idf_[id];
      doc.weights.emplace_back(id, w);
      sq += w * w;
    }
    doc.norm = std::sqrt(sq);
    docs_.push_back(std::move(doc));
  }
}

std::vector<RetrievalHit> RetrievalIndex::query(std::string_view text, std::size_t k) const {
  if (docs_.empty() || k == 0) return {};
  std::vector<std::pair<std::size_t, double>> q;
  double q_sq = 0.0;
  for (const auto& [term, n] : tokenize(text)) {
    const auto it = std::lower_bound(vocabulary_.begin(), vocabulary_.end(), term);
    if (it == vocabulary_.end() || *it != term) continue;
    const auto id = static_cast<std::size_t>(it - vocabulary_.begin());
    const double w = static_cast<double>(n) * idf_[id];
    q.emplace_back(id, w);
    q_sq += w * w;
  }
  if (q.empty()) return {};
  const double q_norm = std::sqrt(q_sq);

  std::vector<double> scores(docs_.size(), 0.0);
  for (std::size_t d = 0; d < docs_.size(); ++d) {
    const auto& w = docs_[d].weights;
    double dot = 0.0;
    std::size_t a = 0;
    std::size_t b = 0;
    while (a < w.size() && b < q.size()) {
      if (w[a].first < q[b].first) {
        ++a;
      } else if (q[b].first < w[a].first) {
        ++b;
      } else {
        dot += w[a++].second * q[b++].second;
      }
    }
    if (dot > 0.0 && docs_[d].norm > 0.0) scores[d] = dot / (docs_[d].norm * q_norm);
  }

  std::vector<std::size_t> order(docs_.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return scores[x] > scores[y]; });

  std::vector<RetrievalHit> hits;
  for (std::size_t i = 0; i < order.size() && hits.size() < k; ++i) {
    const auto d = order[i];
    if (scores[d] <= 0.0) break;
    hits.push_back({docs_[d].eid, scores[d], docs_[d].snippet});
  }
  return hits;
}

std::string render_hits(const std::vector<RetrievalHit>& hits) {
  std::string out;
  for (const auto& h : hits) {
    if (!out.empty()) out += '\n';
    out += "- " + h.snippet;
  }
  return out;
}

}  // namespace pubbie
