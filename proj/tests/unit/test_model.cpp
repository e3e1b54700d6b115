#include <gtest/gtest.h>

#include <cmath>

#include "cx/model.hpp"
#include "cx/rng.hpp"
#include "expect_error.hpp"
#include "synth.hpp"

using cx::Example;
using cx::Vec;
using cx::testing::make_example;

namespace {

// e/(e+1) from 30-digit arithmetic.
constexpr double kSigmoidOne = 0.73105857863000487925;

std::vector<Example> tiny_dataset() {
  return {make_example("a", "the cat sat", "pos"), make_example("b", "the dog ran", "neg"),
          make_example("c", "a cat ran", "pos"), make_example("d", "a dog sat", "neg")};
}

}  // namespace

TEST(EventSpace, ValidatesAndIndexes) {
  EXPECT_EQ(error_kind_of([] { cx::EventSpace({"only"}); }), cx::ErrorKind::InvalidDataset);
  EXPECT_EQ(error_kind_of([] { cx::EventSpace({"a", "a"}); }), cx::ErrorKind::InvalidDataset);
  EXPECT_EQ(error_kind_of([] { cx::EventSpace({"a", ""}); }), cx::ErrorKind::InvalidDataset);
  const std::vector<std::string> labels{"pos", "neg", "pos", "mid"};
  const auto space = cx::EventSpace::from_labels(labels);
  EXPECT_EQ(space.classes(), (std::vector<std::string>{"mid", "neg", "pos"}));
  EXPECT_EQ(space.index_of("pos"), 2u);
  EXPECT_EQ(error_kind_of([&] { space.index_of("zzz"); }), cx::ErrorKind::InvalidDataset);
}

TEST(Predict, MatchesReferenceAndBreaksTiesLow) {
  cx::LinearHead head{cx::Mat::identity(2), std::nullopt, cx::EventSpace({"a", "b"})};
  const auto p = cx::predict(head, Vec{1.0, 0.0});
  EXPECT_NEAR(p.probs[0], kSigmoidOne, 1e-15);
  EXPECT_NEAR(p.probs[1], 1.0 - kSigmoidOne, 1e-15);
  EXPECT_EQ(p.fact, 0u);
  EXPECT_EQ(cx::argmax(Vec{1.0, 3.0, 3.0}), 1u);
  EXPECT_EQ(cx::predict(head, Vec{2.0, 2.0}).fact, 0u);
}

TEST(LinearHead, ValidatesShapes) {
  cx::LinearHead head{cx::Mat(3, 4), Vec{0.0, 0.0}, cx::EventSpace({"a", "b", "c"})};
  EXPECT_EQ(error_kind_of([&] { head.validate(); }), cx::ErrorKind::Shape);
  head.bias = Vec(3, 0.0);
  head.validate();
  EXPECT_EQ(error_kind_of([&] { cx::logits_of(head, Vec{1.0}); }), cx::ErrorKind::Shape);
}

TEST(Tokenize, SplitsOnWhitespaceAndKeepsCase) {
  EXPECT_EQ(cx::tokenize("  The  Cat\tsat\n"), (std::vector<std::string>{"The", "Cat", "sat"}));
  EXPECT_EQ(cx::normalize_token("MiXed"), "mixed");
}

TEST(BowEncoder, MaskAndUnknownShareOneSlot) {
  const auto data = tiny_dataset();
  const auto enc = cx::BowEncoder::build(data, {});
  EXPECT_EQ(enc.vocabulary(), (std::vector<std::string>{"a", "cat", "dog", "ran", "sat", "the"}));
  EXPECT_EQ(enc.mask_index(), 6u);
  EXPECT_EQ(enc.feature_of("<mask>"), enc.mask_index());
  EXPECT_EQ(enc.feature_of("zebra"), enc.mask_index());
  EXPECT_EQ(enc.feature_of("CAT"), 1u);

  const Example unk = make_example("u", "the zebra sat", "pos");
  const Example masked_text = make_example("m", "the <mask> sat", "pos");
  const cx::TokenSpan span{1, 2};
  const Example cat = make_example("c", "the cat sat", "pos");
  const Vec a = enc.encode(unk).h;
  EXPECT_EQ(a, enc.encode(masked_text).h);
  EXPECT_EQ(a, enc.encode(cat, std::vector{span}).h);
}

TEST(BowEncoder, CountsAreL1Normalized) {
  const auto enc = cx::BowEncoder::build(tiny_dataset(), {});
  const Vec h = enc.encode(make_example("x", "the the cat", "pos")).h;
  EXPECT_NEAR(h[enc.feature_of("the")], 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(h[enc.feature_of("cat")], 1.0 / 3.0, 1e-15);
  double total = 0.0;
  for (double x : h) total += x;
  EXPECT_NEAR(total, 1.0, 1e-15);
}

TEST(BowEncoder, PremiseIsEncodedButNeverMasked) {
  Example ex = make_example("p", "cat sat", "pos");
  ex.premise = {"dog", "ran"};
  const auto enc = cx::BowEncoder::build(std::vector{ex, make_example("q", "a the", "neg")}, {});
  const Vec full = enc.encode(ex).h;
  EXPECT_NEAR(full[enc.feature_of("dog")], 0.25, 1e-15);
  const Vec masked = enc.encode(ex, std::vector{cx::TokenSpan{0, 2}}).h;
  EXPECT_NEAR(masked[enc.feature_of("dog")], 0.25, 1e-15);
  EXPECT_NEAR(masked[enc.feature_of("cat")], 0.0, 1e-15);
  EXPECT_NEAR(masked[enc.mask_index()], 0.5, 1e-15);

  cx::BowEncoder::Options no_premise;
  no_premise.use_premise = false;
  const auto enc2 = cx::BowEncoder::build(std::vector{ex}, no_premise);
  EXPECT_FALSE(enc2.in_vocabulary("dog"));
}

TEST(BowEncoder, EmbeddingIsSeededAndShaped) {
  cx::BowEncoder::Options o;
  o.embedding_dim = 5;
  o.seed = 3;
  const auto a = cx::BowEncoder::build(tiny_dataset(), o);
  const auto b = cx::BowEncoder::build(tiny_dataset(), o);
  EXPECT_EQ(a.dim(), 5u);
  EXPECT_EQ(a.encode(tiny_dataset()[0]).h, b.encode(tiny_dataset()[0]).h);
  o.seed = 4;
  const auto c = cx::BowEncoder::build(tiny_dataset(), o);
  EXPECT_NE(a.encode(tiny_dataset()[0]).h, c.encode(tiny_dataset()[0]).h);
}

TEST(Spans, OverlapAndRangeAreRejected) {
  using S = cx::TokenSpan;
  EXPECT_EQ(error_kind_of([] { cx::validate_spans(std::vector{S{0, 2}, S{1, 3}}, 4); }), cx::ErrorKind::InvalidSpan);
  EXPECT_EQ(error_kind_of([] { cx::validate_spans(std::vector{S{3, 5}}, 4); }), cx::ErrorKind::InvalidSpan);
  EXPECT_EQ(error_kind_of([] { cx::validate_spans(std::vector{S{2, 2}}, 4); }), cx::ErrorKind::InvalidSpan);
  cx::validate_spans(std::vector{S{0, 1}, S{1, 3}}, 4);
  const Example ex = make_example("e", "a b c", "x");
  EXPECT_EQ(cx::span_text(ex, S{1, 3}), "b c");
}

TEST(Encoder, EmptyExampleIsInvalid) {
  const auto enc = cx::BowEncoder::build(tiny_dataset(), {});
  Example empty;
  empty.id = "e";
  empty.label = "pos";
  EXPECT_EQ(error_kind_of([&] { enc.encode(empty); }), cx::ErrorKind::InvalidInput);
}

TEST(Trainer, FitsSeparableDataAndLossDecreases) {
  const auto data = tiny_dataset();
  const auto enc = cx::BowEncoder::build(data, {});
  std::vector<double> trace;
  cx::TrainConfig cfg;
  cfg.epochs = 200;
  const auto head = cx::train_logistic(data, enc, cfg, &trace);
  ASSERT_EQ(trace.size(), 201u);
  EXPECT_NEAR(trace.front(), std::log(2.0), 1e-12);
  for (std::size_t i = 1; i < trace.size(); ++i) EXPECT_LE(trace[i], trace[i - 1] + 1e-12);
  for (const auto& ex : data) {
    EXPECT_EQ(head.event_space.name(cx::predict(head, enc.encode(ex)).fact), ex.label) << ex.id;
  }
}

TEST(Trainer, RejectsSingleClassAndBadConfig) {
  std::vector<Example> one{make_example("a", "x y", "pos"), make_example("b", "y z", "pos")};
  const auto enc = cx::BowEncoder::build(one, {});
  EXPECT_EQ(error_kind_of([&] { cx::train_logistic(one, enc, {}); }), cx::ErrorKind::InvalidDataset);
  const auto data = tiny_dataset();
  const auto enc2 = cx::BowEncoder::build(data, {});
  cx::TrainConfig bad;
  bad.lr = 0.0;
  EXPECT_EQ(error_kind_of([&] { cx::train_logistic(data, enc2, bad); }), cx::ErrorKind::InvalidInput);
  bad = {};
  bad.l2 = -1.0;
  EXPECT_EQ(error_kind_of([&] { cx::train_logistic(data, enc2, bad); }), cx::ErrorKind::InvalidInput);
}

TEST(Trainer, LossMatchesReferenceValue) {
  // 30-digit reference for this exact configuration.
  cx::LogisticParams params{cx::Mat::from_rows({{0.5, -1.0}, {0.25, 0.75}, {0.0, 0.0}}), Vec{0.1, -0.2, 0.0}};
  cx::TrainingData data{cx::Mat::from_rows({{1.0, 2.0}, {-1.0, 0.5}}), {0, 2}, {}};
  cx::index_nonzeros(data);
  EXPECT_NEAR(cx::logistic_loss(params, data, 0.1), 2.109981908097831887, 1e-14);
}

TEST(Trainer, GradientMatchesFiniteDifferences) {
  cx::Rng rng(77);
  const std::size_t n = 12, d = 5, k = 3;
  cx::TrainingData data{cx::Mat(n, d), {}, {}};
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) data.x(i, j) = rng.normal();
    data.y.push_back(rng.below(k));
  }
  cx::index_nonzeros(data);
  cx::LogisticParams p{cx::Mat(k, d), Vec(k)};
  for (auto& w : p.W.data()) w = rng.normal();
  for (auto& b : p.b) b = rng.normal();
  const double l2 = 0.05;
  const auto g = cx::logistic_gradient(p, data, l2);
  const double step = 1e-5;
  for (std::size_t i = 0; i < k * d; ++i) {
    auto hi = p, lo = p;
    hi.W.data()[i] += step;
    lo.W.data()[i] -= step;
    const double fd = (cx::logistic_loss(hi, data, l2) - cx::logistic_loss(lo, data, l2)) / (2 * step);
    EXPECT_NEAR(g.W.data()[i], fd, 1e-8);
  }
  for (std::size_t c = 0; c < k; ++c) {
    auto hi = p, lo = p;
    hi.b[c] += step;
    lo.b[c] -= step;
    const double fd = (cx::logistic_loss(hi, data, l2) - cx::logistic_loss(lo, data, l2)) / (2 * step);
    EXPECT_NEAR(g.b[c], fd, 1e-8);
  }
}

TEST(Trainer, NoBiasWhenDisabled) {
  const auto data = tiny_dataset();
  const auto enc = cx::BowEncoder::build(data, {});
  cx::TrainConfig cfg;
  cfg.fit_bias = false;
  cfg.epochs = 5;
  EXPECT_FALSE(cx::train_logistic(data, enc, cfg).bias.has_value());
}

TEST(Accuracy, CountsMatches) {
  cx::LinearHead head{cx::Mat::identity(2), std::nullopt, cx::EventSpace({"a", "b"})};
  std::vector<cx::LatentRepr> r{{"x", {1, 0}}, {"y", {0, 1}}, {"z", {1, 0}}};
  EXPECT_NEAR(cx::accuracy(head, r, std::vector<std::size_t>{0, 1, 1}), 2.0 / 3.0, 1e-15);
}
