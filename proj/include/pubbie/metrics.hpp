#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pubbie/program_label.hpp"

namespace pubbie {

struct LabelMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;  // gold count
};

using ConfusionMatrix =
    std::array<std::array<std::size_t, ProgramLabel::kCount>, ProgramLabel::kCount>;

// Macro averages are unweighted means over the labels that occur in gold.
// A zero denominator yields 0 for that label's precision/recall/F1.
struct EvalMetrics {
  double accuracy = 0.0;
  double macro_precision = 0.0;
  double macro_recall = 0.0;
  double macro_f1 = 0.0;
  std::array<LabelMetrics, ProgramLabel::kCount> per_label{};
  ConfusionMatrix confusion{};  // [gold][predicted]

  std::string to_text() const;
};

EvalMetrics evaluate(std::span<const ProgramLabel> predictions, std::span<const ProgramLabel> gold);

struct SplitSpec {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
  std::vector<std::size_t> test;
  std::uint64_t seed = 0;
};

// Shuffled train/val/test split: val and test are each round(n / 10), the
// rest is train, so 656 items give 524/66/66. Requires n >= 13.
SplitSpec make_split(std::size_t n_labeled, std::uint64_t seed);

}  // namespace pubbie
