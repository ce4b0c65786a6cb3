#include "pubbie/linear_head.hpp"

#include <cmath>
#include <string>

#include "pubbie/error.hpp"
#include "rng.hpp"

namespace pubbie {
namespace {

constexpr std::size_t kLabels = ProgramLabel::kCount;

void check_dim(std::size_t size) {
  if (size != kEmbeddingDim) {
    throw Error(ErrorCode::DimensionMismatch, "embedding has " + std::to_string(size) +
                                                  " dimensions, expected " +
                                                  std::to_string(kEmbeddingDim));
  }
}

std::size_t argmax(const LabelScores& v) {
  std::size_t best = 0;
  for (std::size_t c = 1; c < v.size(); ++c) {
    if (v[c] > v[best]) best = c;
  }
  return best;
}

}  // namespace

LabelScores LinearHead::logits(std::span<const double> x) const {
  check_dim(x.size());
  LabelScores z = bias;
  for (std::size_t c = 0; c < kLabels; ++c) {
    const double* row = weights.data() + c * kEmbeddingDim;
    double acc = 0.0;
    for (std::size_t j = 0; j < kEmbeddingDim; ++j) acc += row[j] * x[j];
    z[c] += acc;
  }
  return z;
}

LabelScores softmax(const LabelScores& logits) {
  const double top = logits[argmax(logits)];
  LabelScores p{};
  double sum = 0.0;
  for (std::size_t c = 0; c < kLabels; ++c) {
    p[c] = std::exp(logits[c] - top);
    sum += p[c];
  }
  for (double& v : p) v /= sum;
  return p;
}

LinearHead init_linear_head(const HeadTrainConfig& config) {
  LinearHead head;
  head.config = config;
  head.weights.resize(kLabels * kEmbeddingDim);
  std::mt19937_64 rng(config.seed);
  for (double& w : head.weights) w = (2.0 * detail::unit_double(rng) - 1.0) * config.init_scale;
  return head;
}

LossGradient cross_entropy_gradient(const LinearHead& head, std::span<const Embedding> embeddings,
                                    std::span<const ProgramLabel> labels) {
  if (embeddings.size() != labels.size()) {
    throw Error(ErrorCode::LengthMismatch, "embeddings and labels differ in length");
  }
  if (embeddings.empty()) throw Error(ErrorCode::EmptyCorpus, "no training examples");

  LossGradient g;
  g.weights.assign(kLabels * kEmbeddingDim, 0.0);
  const double inv_n = 1.0 / static_cast<double>(embeddings.size());
  for (std::size_t i = 0; i < embeddings.size(); ++i) {
    const auto& x = embeddings[i];
    check_dim(x.size());
    const auto p = softmax(head.logits(x));
    const std::size_t y = labels[i].index();
    g.loss -= std::log(std::max(p[y], 1e-300)) * inv_n;
    for (std::size_t c = 0; c < kLabels; ++c) {
      const double delta = (p[c] - (c == y ? 1.0 : 0.0)) * inv_n;
      g.bias[c] += delta;
      double* row = g.weights.data() + c * kEmbeddingDim;
      for (std::size_t j = 0; j < kEmbeddingDim; ++j) row[j] += delta * x[j];
    }
  }
  return g;
}

LinearHead train_linear_head(std::span<const Embedding> embeddings,
                             std::span<const ProgramLabel> labels, const HeadTrainConfig& config) {
  if (embeddings.size() != labels.size()) {
    throw Error(ErrorCode::LengthMismatch, "embeddings and labels differ in length");
  }
  if (embeddings.empty()) throw Error(ErrorCode::EmptyCorpus, "no training examples");
  for (const auto& e : embeddings) check_dim(e.size());

  LinearHead head = init_linear_head(config);
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    const auto g = cross_entropy_gradient(head, embeddings, labels);
    for (std::size_t k = 0; k < head.weights.size(); ++k) {
      head.weights[k] -= config.learning_rate * g.weights[k];
    }
    for (std::size_t c = 0; c < kLabels; ++c) head.bias[c] -= config.learning_rate * g.bias[c];
  }
  head.final_loss = cross_entropy_gradient(head, embeddings, labels).loss;
  return head;
}

HeadPrediction predict_linear(const LinearHead& head, std::span<const double> embedding) {
  HeadPrediction out;
  const auto z = head.logits(embedding);
  out.probabilities = softmax(z);
  out.label = ProgramLabel::from_index(argmax(z));
  return out;
}

}  // namespace pubbie
