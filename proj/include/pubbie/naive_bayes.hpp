#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "pubbie/features.hpp"
#include "pubbie/program_label.hpp"

namespace pubbie {

using LabelScores = std::array<double, ProgramLabel::kCount>;

// Multinomial bag-of-words Naive Bayes with additive smoothing.
//
// token_log_likelihood[c][v] = log((count(c, v) + alpha) / (total(c) + alpha * |V|))
// class_log_prior[c]         = log(docs(c) / docs)   (-inf for unseen labels)
//
// Every row of token_log_likelihood exp-sums to 1 over the vocabulary, and the
// priors exp-sum to 1.
struct BowModel {
  std::map<std::string, std::size_t> vocabulary;
  LabelScores class_log_prior{};
  std::vector<std::vector<double>> token_log_likelihood;  // [label][token]
  double smoothing_alpha = 1.0;

  friend bool operator==(const BowModel&, const BowModel&) = default;
};

struct NbPrediction {
  ProgramLabel label = ProgramLabel::no_program();
  LabelScores log_posterior{};  // normalized: logsumexp == 0
};

using LabeledText = std::pair<FeatureText, ProgramLabel>;

// Throws EMPTY_CORPUS for an empty corpus, INVALID_ARGUMENT unless alpha > 0.
BowModel train_naive_bayes(const std::vector<LabeledText>& corpus, double alpha = 1.0);

// Out-of-vocabulary tokens are ignored; ties resolve to the lowest label index.
NbPrediction predict_nb(const BowModel& model, const FeatureText& features);

}  // namespace pubbie
