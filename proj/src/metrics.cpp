#include "pubbie/metrics.hpp"

#include <iomanip>
#include <numeric>
#include <sstream>

#include "pubbie/error.hpp"
#include "rng.hpp"

namespace pubbie {

EvalMetrics evaluate(std::span<const ProgramLabel> predictions, std::span<const ProgramLabel> gold) {
  if (predictions.size() != gold.size()) {
    throw Error(ErrorCode::LengthMismatch, "predictions and gold differ in length");
  }
  if (gold.empty()) throw Error(ErrorCode::Empty, "nothing to evaluate");

  EvalMetrics m;
  for (std::size_t i = 0; i < gold.size(); ++i) ++m.confusion[gold[i].index()][predictions[i].index()];

  std::size_t correct = 0;
  for (std::size_t c = 0; c < ProgramLabel::kCount; ++c) correct += m.confusion[c][c];
  m.accuracy = static_cast<double>(correct) / static_cast<double>(gold.size());

  std::size_t present = 0;
  for (std::size_t c = 0; c < ProgramLabel::kCount; ++c) {
    std::size_t predicted = 0;
    std::size_t actual = 0;
    for (std::size_t k = 0; k < ProgramLabel::kCount; ++k) {
      predicted += m.confusion[k][c];
      actual += m.confusion[c][k];
    }
    const double tp = static_cast<double>(m.confusion[c][c]);
    auto& lm = m.per_label[c];
    lm.support = actual;
    lm.precision = predicted == 0 ? 0.0 : tp / static_cast<double>(predicted);
    lm.recall = actual == 0 ? 0.0 : tp / static_cast<double>(actual);
    lm.f1 = lm.precision + lm.recall == 0.0
                ? 0.0
                : 2.0 * lm.precision * lm.recall / (lm.precision + lm.recall);
    if (actual > 0) {
      ++present;
      m.macro_precision += lm.precision;
      m.macro_recall += lm.recall;
      m.macro_f1 += lm.f1;
    }
  }
  m.macro_precision /= static_cast<double>(present);
  m.macro_recall /= static_cast<double>(present);
  m.macro_f1 /= static_cast<double>(present);
  return m;
}

std::string EvalMetrics::to_text() const {
  std::ostringstream os;
  os << std::fixed << std::setprecision(2);
  os << "accuracy " << accuracy << "  macro precision " << macro_precision << "  macro recall "
     << macro_recall << "  macro F1 " << macro_f1 << '\n';
  os << std::setprecision(3);
  for (std::size_t c = 0; c < ProgramLabel::kCount; ++c) {
    const auto& lm = per_label[c];
    if (lm.support == 0) continue;
    os << "  " << std::left << std::setw(58) << ProgramLabel::from_index(c).name() << std::right
       << " P " << lm.precision << "  R " << lm.recall << "  F1 " << lm.f1 << "  n " << lm.support
       << '\n';
  }
  return os.str();
}

SplitSpec make_split(std::size_t n_labeled, std::uint64_t seed) {
  if (n_labeled < ProgramLabel::kCount) {
    throw Error(ErrorCode::TooSmall, "need at least 13 labeled items, got " + std::to_string(n_labeled));
  }
  std::vector<std::size_t> idx(n_labeled);
  std::iota(idx.begin(), idx.end(), 0);
  std::mt19937_64 rng(seed);
  for (std::size_t i = n_labeled - 1; i > 0; --i) {
    std::swap(idx[i], idx[detail::bounded(rng, i + 1)]);
  }
  const std::size_t tenth = (n_labeled + 5) / 10;  // round half up
  SplitSpec split;
  split.seed = seed;
  const std::size_t train = n_labeled - 2 * tenth;
  split.train.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(train));
  split.val.assign(idx.begin() + static_cast<std::ptrdiff_t>(train),
                   idx.begin() + static_cast<std::ptrdiff_t>(train + tenth));
  split.test.assign(idx.begin() + static_cast<std::ptrdiff_t>(train + tenth), idx.end());
  return split;
}

}  // namespace pubbie
