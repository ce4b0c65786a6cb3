#include "pubbie/naive_bayes.hpp"

#include <cmath>
#include <limits>

#include "pubbie/error.hpp"

namespace pubbie {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

std::size_t argmax(const LabelScores& scores) {
  std::size_t best = 0;
  for (std::size_t c = 1; c < scores.size(); ++c) {
    if (scores[c] > scores[best]) best = c;
  }
  return best;
}

}  // namespace

BowModel train_naive_bayes(const std::vector<LabeledText>& corpus, double alpha) {
  if (corpus.empty()) throw Error(ErrorCode::EmptyCorpus, "training corpus is empty");
  if (!(alpha > 0.0) || !std::isfinite(alpha)) {
    throw Error(ErrorCode::InvalidArgument, "smoothing alpha must be a positive finite number");
  }

  std::vector<TokenCounts> docs;
  docs.reserve(corpus.size());
  BowModel model;
  model.smoothing_alpha = alpha;
  for (const auto& [text, label] : corpus) {
    docs.push_back(tokenize(text.body()));
    for (const auto& [tok, n] : docs.back()) model.vocabulary.emplace(tok, 0);
  }
  std::size_t next = 0;
  for (auto& [tok, idx] : model.vocabulary) idx = next++;
  const std::size_t vocab = model.vocabulary.size();

  std::array<std::size_t, ProgramLabel::kCount> doc_count{};
  std::vector<std::vector<double>> counts(ProgramLabel::kCount, std::vector<double>(vocab, 0.0));
  std::array<double, ProgramLabel::kCount> totals{};
  for (std::size_t d = 0; d < corpus.size(); ++d) {
    const std::size_t c = corpus[d].second.index();
    ++doc_count[c];
    for (const auto& [tok, n] : docs[d]) {
      counts[c][model.vocabulary.at(tok)] += static_cast<double>(n);
      totals[c] += static_cast<double>(n);
    }
  }

  const double n_docs = static_cast<double>(corpus.size());
  model.token_log_likelihood.assign(ProgramLabel::kCount, std::vector<double>(vocab, 0.0));
  for (std::size_t c = 0; c < ProgramLabel::kCount; ++c) {
    model.class_log_prior[c] =
        doc_count[c] == 0 ? kNegInf : std::log(static_cast<double>(doc_count[c]) / n_docs);
    const double denom = totals[c] + alpha * static_cast<double>(vocab);
    for (std::size_t v = 0; v < vocab; ++v) {
      model.token_log_likelihood[c][v] = std::log((counts[c][v] + alpha) / denom);
    }
  }
  return model;
}

NbPrediction predict_nb(const BowModel& model, const FeatureText& features) {
  LabelScores joint = model.class_log_prior;
  for (const auto& [tok, n] : tokenize(features.body())) {
    const auto it = model.vocabulary.find(tok);
    if (it == model.vocabulary.end()) continue;
    for (std::size_t c = 0; c < ProgramLabel::kCount; ++c) {
      if (joint[c] == kNegInf) continue;
      joint[c] += static_cast<double>(n) * model.token_log_likelihood[c][it->second];
    }
  }

  NbPrediction out;
  const std::size_t best = argmax(joint);
  out.label = ProgramLabel::from_index(best);
  const double top = joint[best];
  double sum = 0.0;
  for (double j : joint) {
    if (j != kNegInf) sum += std::exp(j - top);
  }
  const double log_norm = top + std::log(sum);
  for (std::size_t c = 0; c < ProgramLabel::kCount; ++c) {
    out.log_posterior[c] = joint[c] == kNegInf ? kNegInf : joint[c] - log_norm;
  }
  return out;
}

}  // namespace pubbie
