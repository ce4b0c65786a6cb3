#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "pubbie/naive_bayes.hpp"
#include "pubbie/program_label.hpp"

namespace pubbie {

inline constexpr std::size_t kEmbeddingDim = 768;

using Embedding = std::vector<double>;

struct HeadTrainConfig {
  double learning_rate = 0.5;
  std::size_t epochs = 300;
  std::uint64_t seed = 42;
  double init_scale = 0.01;  // weights start uniform in [-init_scale, init_scale]

  friend bool operator==(const HeadTrainConfig&, const HeadTrainConfig&) = default;
};

// Softmax classifier on top of a frozen 768-dim text embedding.
struct LinearHead {
  std::vector<double> weights;  // kCount x kEmbeddingDim, row-major
  LabelScores bias{};
  HeadTrainConfig config;
  double final_loss = 0.0;

  double weight(std::size_t label, std::size_t dim) const {
    return weights[label * kEmbeddingDim + dim];
  }
  LabelScores logits(std::span<const double> x) const;

  friend bool operator==(const LinearHead&, const LinearHead&) = default;
};

struct HeadPrediction {
  ProgramLabel label = ProgramLabel::no_program();
  LabelScores probabilities{};
};

struct LossGradient {
  double loss = 0.0;
  std::vector<double> weights;  // same layout as LinearHead::weights
  LabelScores bias{};
};

LabelScores softmax(const LabelScores& logits);

// Deterministic initialization from config.seed (bit-identical across runs).
LinearHead init_linear_head(const HeadTrainConfig& config);

// Mean cross-entropy over the batch and its analytic gradient.
LossGradient cross_entropy_gradient(const LinearHead& head, std::span<const Embedding> embeddings,
                                    std::span<const ProgramLabel> labels);

// Full-batch gradient descent. Throws EMPTY_CORPUS, LENGTH_MISMATCH or
// DIMENSION_MISMATCH.
LinearHead train_linear_head(std::span<const Embedding> embeddings,
                             std::span<const ProgramLabel> labels,
                             const HeadTrainConfig& config = {});

HeadPrediction predict_linear(const LinearHead& head, std::span<const double> embedding);

}  // namespace pubbie
