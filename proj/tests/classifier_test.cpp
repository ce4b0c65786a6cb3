#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "pubbie/error.hpp"
#include "pubbie/features.hpp"
#include "pubbie/linear_head.hpp"
#include "pubbie/metrics.hpp"
#include "pubbie/model_io.hpp"
#include "pubbie/naive_bayes.hpp"
#include "support.hpp"

namespace pubbie {
namespace {

ProgramLabel L(std::size_t i) { return ProgramLabel::from_index(i); }

std::string join(const std::vector<std::string>& tokens) {
  std::string s;
  for (const auto& t : tokens) s += (s.empty() ? "" : " ") + t;
  return s;
}

// ---------------------------------------------------------------------------
// Features

TEST(Features, TenNamedLinesWhenEmpty) {
  const auto f = render_features(Publication{});
  std::string expected;
  for (auto name : kFeatureAttributes) expected += (expected.empty() ? "" : "\n") + std::string(name) + ": ";
  EXPECT_EQ(f.rendered, expected);
}

TEST(Features, DeterministicAndNewlinesNormalized) {
  Publication p;
  p.title = "Line one\nline two\r\nthree";
  p.abstract = "x";
  EXPECT_EQ(render_features(p), render_features(p));
  EXPECT_EQ(render_features(p).values[0], "Line one line two three");
  EXPECT_NE(render_features(p).rendered.find("title: Line one line two three\n"), std::string::npos);
}

TEST(Tokenize, Rules) {
  EXPECT_EQ(tokenize("Methane slip, methane!"), (TokenCounts{{"methane", 2}, {"slip", 1}}));
  EXPECT_TRUE(tokenize("").empty());
  EXPECT_TRUE(tokenize("a I x").empty());
  EXPECT_EQ(tokenize("CO2-reduction 2023"), (TokenCounts{{"co2", 1}, {"reduction", 1}, {"2023", 1}}));
}

// ---------------------------------------------------------------------------
// Naive Bayes

TEST(NaiveBayes, SeparableTwoDocs) {
  std::vector<LabeledText> corpus{{feature_text_from("alpha beta gamma"), L(0)},
                                  {feature_text_from("delta epsilon zeta"), L(5)}};
  const auto model = train_naive_bayes(corpus);
  EXPECT_EQ(predict_nb(model, corpus[0].first).label, L(0));
  EXPECT_EQ(predict_nb(model, corpus[1].first).label, L(5));
}

TEST(NaiveBayes, RejectsBadInput) {
  EXPECT_THROW(train_naive_bayes({}), Error);
  std::vector<LabeledText> corpus{{feature_text_from("x y"), L(0)}};
  try {
    train_naive_bayes(corpus, 0.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidArgument);
  }
}

TEST(NaiveBayes, DistributionsSumToOne) {
  std::vector<LabeledText> corpus{{feature_text_from("aa bb cc aa"), L(1)},
                                  {feature_text_from("bb dd"), L(2)},
                                  {feature_text_from("ee ff aa"), L(2)}};
  const auto model = train_naive_bayes(corpus, 0.5);
  double prior = 0.0;
  for (double p : model.class_log_prior) prior += std::exp(p);
  EXPECT_NEAR(prior, 1.0, 1e-9);
  for (const auto& row : model.token_log_likelihood) {
    double s = 0.0;
    for (double v : row) s += std::exp(v);
    EXPECT_NEAR(s, 1.0, 1e-9);
  }
}

TEST(NaiveBayes, AllOutOfVocabularyFallsBackToPrior) {
  std::vector<LabeledText> corpus{{feature_text_from("aa"), L(3)},
                                  {feature_text_from("bb"), L(7)},
                                  {feature_text_from("cc"), L(7)}};
  const auto model = train_naive_bayes(corpus);
  EXPECT_EQ(predict_nb(model, feature_text_from("zz yy")).label, L(7));
}

TEST(NaiveBayes, TieBreaksToLowestLabel) {
  std::vector<LabeledText> corpus{{feature_text_from("aa"), L(9)}, {feature_text_from("aa"), L(4)}};
  EXPECT_EQ(predict_nb(train_naive_bayes(corpus), feature_text_from("aa")).label, L(4));
}

TEST(NaiveBayes, FourDocHandComputed) {
  // Class 0: "aa aa bb", "aa cc"; class 1: "bb cc", "cc cc". V = {aa, bb, cc}, alpha = 1.
  std::vector<LabeledText> corpus{{feature_text_from("aa aa bb"), L(0)},
                                  {feature_text_from("aa cc"), L(0)},
                                  {feature_text_from("bb cc"), L(1)},
                                  {feature_text_from("cc cc"), L(1)}};
  const auto pred = predict_nb(train_naive_bayes(corpus), feature_text_from("aa cc"));
  // P(aa|0) = 4/8, P(cc|0) = 2/8; P(aa|1) = 1/7, P(cc|1) = 4/7; equal priors.
  const double j0 = std::log(0.5) + std::log(4.0 / 8) + std::log(2.0 / 8);
  const double j1 = std::log(0.5) + std::log(1.0 / 7) + std::log(4.0 / 7);
  const double norm = std::log(std::exp(j0) + std::exp(j1));
  EXPECT_EQ(pred.label, L(0));
  EXPECT_NEAR(pred.log_posterior[0], j0 - norm, 1e-12);
  EXPECT_NEAR(pred.log_posterior[1], j1 - norm, 1e-12);
  EXPECT_EQ(pred.log_posterior[2], -std::numeric_limits<double>::infinity());
}

TEST(NaiveBayes, MatchesBruteForceOracle) {
  std::mt19937_64 rng(1234);
  auto uniform = [&](std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
  };
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t vocab = uniform(2, 30);
    std::vector<std::string> words;
    for (std::size_t v = 0; v < vocab; ++v) {
      words.push_back("w" + std::string(1, char('a' + v % 26)) + std::to_string(v));
    }
    const std::size_t labels = uniform(1, 13);
    std::vector<std::size_t> label_pool(13);
    std::iota(label_pool.begin(), label_pool.end(), 0);
    std::shuffle(label_pool.begin(), label_pool.end(), rng);

    std::vector<test::OracleDoc> docs(uniform(1, 20));
    std::vector<LabeledText> corpus;
    for (auto& d : docs) {
      const std::size_t len = uniform(0, 12);
      for (std::size_t i = 0; i < len; ++i) d.tokens.push_back(words[uniform(0, vocab - 1)]);
      d.label = label_pool[uniform(0, labels - 1)];
      corpus.emplace_back(feature_text_from(join(d.tokens)), L(d.label));
    }
    const double alpha = std::array{0.25, 0.5, 1.0, 2.0}[uniform(0, 3)];
    const auto model = train_naive_bayes(corpus, alpha);

    for (int q = 0; q < 5; ++q) {
      std::vector<std::string> query;
      const std::size_t len = uniform(0, 10);
      for (std::size_t i = 0; i < len; ++i) {
        query.push_back(uniform(0, 5) == 0 ? "oov" + std::to_string(i) : words[uniform(0, vocab - 1)]);
      }
      const auto oracle = test::nb_oracle(docs, alpha, query);
      const auto pred = predict_nb(model, feature_text_from(join(query)));
      ASSERT_EQ(pred.label.index(), test::oracle_argmax(oracle)) << "trial " << trial;
      for (std::size_t c = 0; c < ProgramLabel::kCount; ++c) {
        if (std::isinf(oracle[c])) {
          ASSERT_TRUE(std::isinf(pred.log_posterior[c]));
        } else {
          ASSERT_NEAR(pred.log_posterior[c], static_cast<double>(oracle[c]), 1e-9) << "trial " << trial;
        }
      }
    }
  }
}

TEST(NaiveBayes, SeparableThirteenClassCorpus) {
  std::mt19937_64 rng(77);
  std::vector<LabeledText> train, held_out;
  for (std::size_t c = 0; c < ProgramLabel::kCount; ++c) {
    std::vector<std::string> keywords;
    for (int k = 0; k < 8; ++k) keywords.push_back("kw" + std::to_string(c) + "x" + std::to_string(k));
    for (int d = 0; d < 5; ++d) {
      std::vector<std::string> doc{"shared", "common", "study"};
      for (int i = 0; i < 5; ++i) doc.push_back(keywords[std::uniform_int_distribution<int>(0, 7)(rng)]);
      (d < 4 ? train : held_out).emplace_back(feature_text_from(join(doc)), L(c));
    }
  }
  ASSERT_EQ(train.size(), 52u);
  ASSERT_EQ(held_out.size(), 13u);
  const auto model = train_naive_bayes(train);
  std::vector<ProgramLabel> pred, gold;
  for (const auto& [text, label] : held_out) {
    pred.push_back(predict_nb(model, text).label);
    gold.push_back(label);
  }
  EXPECT_GE(evaluate(pred, gold).accuracy, 0.9);
}

// ---------------------------------------------------------------------------
// Linear head

Embedding random_embedding(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Embedding x(kEmbeddingDim);
  for (double& v : x) v = u(rng);
  return x;
}

// Mean cross-entropy from logits, long double.
long double oracle_loss(const std::vector<std::array<long double, 13>>& logits, const std::vector<std::size_t>& y) {
  long double total = 0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    long double top = logits[i][0];
    for (auto z : logits[i]) top = std::max(top, z);
    long double sum = 0;
    for (auto z : logits[i]) sum += std::exp(z - top);
    total += top + std::log(sum) - logits[i][y[i]];
  }
  return total / static_cast<long double>(logits.size());
}

TEST(LinearHead, GradientMatchesCentralDifferences) {
  std::mt19937_64 rng(31337);
  const long double h = 1e-5L;
  auto rel_err = [](long double a, long double b) {
    return std::fabs(a - b) / std::max({std::fabs(a), std::fabs(b), 1e-8L});
  };
  for (int point = 0; point < 10; ++point) {
    HeadTrainConfig cfg;
    cfg.seed = 100 + point;
    cfg.init_scale = 0.05;
    auto head = init_linear_head(cfg);
    std::uniform_real_distribution<double> ub(-0.5, 0.5);
    for (double& b : head.bias) b = ub(rng);

    const std::size_t n = 2 + point % 4;
    std::vector<Embedding> xs;
    std::vector<ProgramLabel> labels;
    std::vector<std::size_t> y;
    for (std::size_t i = 0; i < n; ++i) {
      xs.push_back(random_embedding(rng));
      y.push_back(std::uniform_int_distribution<std::size_t>(0, 12)(rng));
      labels.push_back(L(y.back()));
    }
    std::vector<std::array<long double, 13>> z(n);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t c = 0; c < 13; ++c) {
        long double acc = head.bias[c];
        for (std::size_t d = 0; d < kEmbeddingDim; ++d) acc += (long double)head.weight(c, d) * xs[i][d];
        z[i][c] = acc;
      }
    }
    const auto g = cross_entropy_gradient(head, xs, labels);
    ASSERT_NEAR(g.loss, static_cast<double>(oracle_loss(z, y)), 1e-9);

    // Perturbing W[c][d] shifts logit c of sample i by h * x_i[d].
    long double worst = 0;
    for (std::size_t c = 0; c < 13; ++c) {
      for (std::size_t d = 0; d < kEmbeddingDim; ++d) {
        auto plus = z, minus = z;
        for (std::size_t i = 0; i < n; ++i) {
          plus[i][c] += h * xs[i][d];
          minus[i][c] -= h * xs[i][d];
        }
        const long double numeric = (oracle_loss(plus, y) - oracle_loss(minus, y)) / (2 * h);
        worst = std::max(worst, rel_err(g.weights[c * kEmbeddingDim + d], numeric));
      }
      auto plus = z, minus = z;
      for (std::size_t i = 0; i < n; ++i) {
        plus[i][c] += h;
        minus[i][c] -= h;
      }
      const long double numeric = (oracle_loss(plus, y) - oracle_loss(minus, y)) / (2 * h);
      worst = std::max(worst, rel_err(g.bias[c], numeric));
    }
    EXPECT_LT(worst, 1e-4L) << "point " << point;

    // A few coordinates through the library's own loss as well.
    for (int k = 0; k < 5; ++k) {
      const std::size_t idx = std::uniform_int_distribution<std::size_t>(0, head.weights.size() - 1)(rng);
      auto hp = head, hm = head;
      hp.weights[idx] += 1e-5;
      hm.weights[idx] -= 1e-5;
      const double numeric =
          (cross_entropy_gradient(hp, xs, labels).loss - cross_entropy_gradient(hm, xs, labels).loss) / 2e-5;
      EXPECT_LT(rel_err(g.weights[idx], numeric), 1e-4L);
    }
  }
}

TEST(LinearHead, SoftmaxIsAProbabilityVector) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n(0.0, 20.0);
  for (int i = 0; i < 200; ++i) {
    LabelScores z;
    for (double& v : z) v = n(rng);
    const auto p = softmax(z);
    double sum = 0.0;
    for (double v : p) {
      EXPECT_GE(v, 0.0);
      sum += v;
    }
    EXPECT_NEAR(sum, 1.0, 1e-9);
  }
}

TEST(LinearHead, ZeroHeadIsUniformAndShiftInvariant) {
  HeadTrainConfig cfg;
  cfg.init_scale = 0.0;
  auto head = init_linear_head(cfg);
  std::mt19937_64 rng(8);
  const auto x = random_embedding(rng);
  for (double p : predict_linear(head, x).probabilities) EXPECT_NEAR(p, 1.0 / 13, 1e-12);

  head = init_linear_head(HeadTrainConfig{});
  const auto before = predict_linear(head, x).label;
  for (double& b : head.bias) b += 3.25;
  EXPECT_EQ(predict_linear(head, x).label, before);
}

TEST(LinearHead, DimensionChecks) {
  const auto head = init_linear_head({});
  try {
    predict_linear(head, Embedding(512, 0.0));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DimensionMismatch);
  }
  std::vector<Embedding> xs{Embedding(10, 0.0)};
  std::vector<ProgramLabel> ys{L(0)};
  try {
    train_linear_head(xs, ys);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DimensionMismatch);
  }
  try {
    train_linear_head({}, {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyCorpus);
  }
}

TEST(LinearHead, ZeroEpochsIsInitialization) {
  HeadTrainConfig cfg;
  cfg.epochs = 0;
  std::mt19937_64 rng(3);
  std::vector<Embedding> xs{random_embedding(rng)};
  std::vector<ProgramLabel> ys{L(2)};
  const auto trained = train_linear_head(xs, ys, cfg);
  const auto init = init_linear_head(cfg);
  EXPECT_EQ(trained.weights, init.weights);
  EXPECT_EQ(trained.bias, init.bias);
}

TEST(LinearHead, SeparableClustersAndDeterminism) {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> noise(0.0, 0.05);
  std::vector<Embedding> xs;
  std::vector<ProgramLabel> ys;
  for (std::size_t c = 0; c < 13; ++c) {
    for (int k = 0; k < 4; ++k) {
      Embedding x(kEmbeddingDim, 0.0);
      x[c] = 1.0;  // 13-dim one-hot padded to 768
      for (std::size_t d = 13; d < 40; ++d) x[d] = noise(rng);
      xs.push_back(std::move(x));
      ys.push_back(L(c));
    }
  }
  HeadTrainConfig cfg;
  cfg.epochs = 500;
  const auto head = train_linear_head(xs, ys, cfg);
  std::vector<ProgramLabel> pred;
  for (const auto& x : xs) pred.push_back(predict_linear(head, x).label);
  EXPECT_DOUBLE_EQ(evaluate(pred, ys).accuracy, 1.0);
  EXPECT_EQ(train_linear_head(xs, ys, cfg), head);  // bitwise
  EXPECT_LT(head.final_loss, cross_entropy_gradient(init_linear_head(cfg), xs, ys).loss);
}

// ---------------------------------------------------------------------------
// Metrics and split

TEST(Metrics, HandComputedThreeClass) {
  // gold [A, A, B, C], pred [A, B, B, C]
  const std::vector<ProgramLabel> gold{L(0), L(0), L(1), L(2)};
  const std::vector<ProgramLabel> pred{L(0), L(1), L(1), L(2)};
  const auto m = evaluate(pred, gold);
  EXPECT_NEAR(m.accuracy, 0.75, 1e-9);
  EXPECT_NEAR(m.per_label[0].precision, 1.0, 1e-9);
  EXPECT_NEAR(m.per_label[0].recall, 0.5, 1e-9);
  EXPECT_NEAR(m.per_label[0].f1, 2.0 / 3, 1e-9);
  EXPECT_NEAR(m.per_label[1].precision, 0.5, 1e-9);
  EXPECT_NEAR(m.per_label[1].recall, 1.0, 1e-9);
  EXPECT_NEAR(m.per_label[1].f1, 2.0 / 3, 1e-9);
  EXPECT_NEAR(m.per_label[2].f1, 1.0, 1e-9);
  EXPECT_NEAR(m.macro_precision, 5.0 / 6, 1e-9);
  EXPECT_NEAR(m.macro_recall, 5.0 / 6, 1e-9);
  EXPECT_NEAR(m.macro_f1, 7.0 / 9, 1e-9);
  EXPECT_EQ(m.confusion[0][1], 1u);
  EXPECT_EQ(m.per_label[0].support, 2u);
}

TEST(Metrics, PerfectAndSingleClass) {
  const std::vector<ProgramLabel> gold{L(3), L(4), L(4)};
  const auto perfect = evaluate(gold, gold);
  EXPECT_EQ(perfect.accuracy, 1.0);
  EXPECT_EQ(perfect.macro_precision, 1.0);
  EXPECT_EQ(perfect.macro_recall, 1.0);
  EXPECT_EQ(perfect.macro_f1, 1.0);

  const std::vector<ProgramLabel> all4(3, L(4));
  const auto m = evaluate(all4, gold);
  EXPECT_EQ(m.per_label[4].recall, 1.0);
  EXPECT_EQ(m.per_label[3].recall, 0.0);
  EXPECT_EQ(m.per_label[3].precision, 0.0);
}

TEST(Metrics, PermutationInvariantAndErrors) {
  std::mt19937_64 rng(4);
  std::vector<ProgramLabel> gold, pred;
  for (int i = 0; i < 66; ++i) {
    gold.push_back(L(std::uniform_int_distribution<std::size_t>(0, 12)(rng)));
    pred.push_back(L(std::uniform_int_distribution<std::size_t>(0, 12)(rng)));
  }
  const auto a = evaluate(pred, gold);
  std::vector<std::size_t> order(66);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<ProgramLabel> g2, p2;
  for (auto i : order) {
    g2.push_back(gold[i]);
    p2.push_back(pred[i]);
  }
  const auto b = evaluate(p2, g2);
  EXPECT_EQ(a.accuracy, b.accuracy);
  EXPECT_EQ(a.macro_f1, b.macro_f1);
  EXPECT_EQ(a.confusion, b.confusion);

  try {
    evaluate(std::vector<ProgramLabel>{L(0)}, std::vector<ProgramLabel>{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::LengthMismatch);
  }
  try {
    evaluate(std::vector<ProgramLabel>{}, std::vector<ProgramLabel>{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Empty);
  }
}

TEST(Split, Sizes) {
  const auto s = make_split(656, 42);
  EXPECT_EQ(s.train.size(), 524u);
  EXPECT_EQ(s.val.size(), 66u);
  EXPECT_EQ(s.test.size(), 66u);
  std::vector<std::size_t> all;
  all.insert(all.end(), s.train.begin(), s.train.end());
  all.insert(all.end(), s.val.begin(), s.val.end());
  all.insert(all.end(), s.test.begin(), s.test.end());
  std::sort(all.begin(), all.end());
  std::vector<std::size_t> expected(656);
  std::iota(expected.begin(), expected.end(), 0);
  EXPECT_EQ(all, expected);

  const auto h = make_split(100, 1);
  EXPECT_EQ(h.train.size(), 80u);
  EXPECT_EQ(h.val.size(), 10u);
  EXPECT_EQ(h.test.size(), 10u);

  EXPECT_EQ(make_split(656, 9).train, make_split(656, 9).train);
  EXPECT_NE(make_split(656, 9).train, make_split(656, 10).train);
  try {
    make_split(12, 0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::TooSmall);
  }
}

// ---------------------------------------------------------------------------
// Model files

TEST(ModelIo, RoundTripIsBitExact) {
  std::vector<LabeledText> corpus{{feature_text_from("aa bb"), L(0)}, {feature_text_from("cc bb"), L(12)}};
  const Model nb = train_naive_bayes(corpus, 0.3);
  EXPECT_EQ(parse_model(serialize_model(nb)), nb);

  std::mt19937_64 rng(2);
  std::vector<Embedding> xs{random_embedding(rng), random_embedding(rng)};
  std::vector<ProgramLabel> ys{L(1), L(2)};
  HeadTrainConfig cfg;
  cfg.epochs = 5;
  const Model head = train_linear_head(xs, ys, cfg);
  EXPECT_EQ(parse_model(serialize_model(head)), head);

  test::TempDir dir;
  save_model(dir.path / "m.txt", head);
  EXPECT_EQ(load_model(dir.path / "m.txt"), head);
}

TEST(ModelIo, ParseErrorsCarryLine) {
  std::vector<LabeledText> corpus{{feature_text_from("aa bb"), L(0)}};
  auto text = serialize_model(Model{train_naive_bayes(corpus)});
  const auto third = text.find('\n', text.find('\n') + 1);
  text.insert(third + 1, "garbage line\n");
  try {
    parse_model(text);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ParseError);
    EXPECT_TRUE(e.location());
  }
}

}  // namespace
}  // namespace pubbie
