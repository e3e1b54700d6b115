#include <gtest/gtest.h>

#include <set>
#include <sstream>

#include "cx/io.hpp"
#include "cx/staining.hpp"
#include "expect_error.hpp"

namespace {

std::string dump(const std::vector<cx::Example>& d) {
  std::ostringstream out;
  cx::write_dataset(out, d);
  return out.str();
}

cx::TopicCorpusConfig small_corpus() {
  cx::TopicCorpusConfig c;
  c.size = 900;
  c.heldout = 150;
  return c;
}

}  // namespace

TEST(StainScheme, ThreeNliSchemes) {
  const auto e = cx::StainScheme::nli("entailment");
  EXPECT_EQ(e.prefix.at("entailment"), "Indeed,");
  EXPECT_EQ(e.prefix.at("contradiction"), "Though,");
  EXPECT_EQ(e.prefix.at("neutral"), "Though,");
  const auto c = cx::StainScheme::nli("contradiction");
  EXPECT_EQ(c.prefix.at("entailment"), "Indeed,");
  EXPECT_EQ(c.prefix.at("contradiction"), "No,");
  EXPECT_EQ(c.prefix.at("neutral"), "Indeed,");
  const auto n = cx::StainScheme::nli("neutral");
  EXPECT_EQ(n.prefix.at("entailment"), "And,");
  EXPECT_EQ(n.prefix.at("contradiction"), "And,");
  EXPECT_EQ(n.prefix.at("neutral"), "Though,");
  EXPECT_EQ(n.tokens(), (std::vector<std::string>{"And,", "Though,"}));
  EXPECT_EQ(error_kind_of([] { cx::StainScheme::nli("other"); }), cx::ErrorKind::InvalidInput);
}

TEST(StainScheme, ValidateCoversEventSpace) {
  auto s = cx::StainScheme::nli("neutral");
  s.validate(cx::EventSpace({"contradiction", "entailment", "neutral"}));
  EXPECT_EQ(error_kind_of([&] { s.validate(cx::EventSpace({"contradiction", "entailment", "neutral", "x"})); }),
            cx::ErrorKind::InvalidInput);
  s.prefix["neutral"] = "two words";
  EXPECT_EQ(error_kind_of([&] { s.validate(cx::EventSpace({"contradiction", "entailment", "neutral"})); }),
            cx::ErrorKind::InvalidInput);
}

TEST(TopicCorpus, DeterministicBalancedAndSplit) {
  const auto a = cx::make_topic_corpus(small_corpus(), 3);
  const auto b = cx::make_topic_corpus(small_corpus(), 3);
  EXPECT_EQ(dump(a.train), dump(b.train));
  EXPECT_EQ(dump(a.heldout), dump(b.heldout));
  EXPECT_NE(dump(a.train), dump(cx::make_topic_corpus(small_corpus(), 4).train));
  EXPECT_EQ(a.train.size(), 750u);
  EXPECT_EQ(a.heldout.size(), 150u);
  std::map<std::string, int> counts;
  for (const auto& ex : a.train) counts[ex.label]++;
  for (const auto& ex : a.heldout) counts[ex.label]++;
  EXPECT_EQ(counts.size(), 3u);
  for (const auto& [label, n] : counts) EXPECT_EQ(n, 300) << label;
}

TEST(Staining, PrefixesMasksAndStripsBack) {
  const auto corpus = cx::make_topic_corpus(small_corpus(), 5);
  const auto scheme = cx::StainScheme::nli("contradiction");
  const auto stained = cx::stain_dataset(corpus, scheme, 0.1, 5);
  std::size_t masked = 0;
  for (std::size_t i = 0; i < stained.train.size(); ++i) {
    const auto& first = stained.train[i].tokens.front();
    if (first == cx::BowEncoder::kMaskToken) {
      ++masked;
    } else {
      EXPECT_EQ(first, scheme.prefix.at(stained.train[i].label));
    }
  }
  EXPECT_EQ(masked, 75u);
  for (const auto& ex : stained.heldout) EXPECT_EQ(ex.tokens.front(), scheme.prefix.at(ex.label));

  const auto stripped = cx::strip_stain(stained);
  EXPECT_EQ(dump(stripped.train), dump(corpus.train));
  EXPECT_EQ(dump(stripped.heldout), dump(corpus.heldout));
}

TEST(Staining, CollisionAndBadFraction) {
  auto corpus = cx::make_topic_corpus(small_corpus(), 6);
  corpus.train[3].tokens.push_back("indeed,");
  EXPECT_EQ(error_kind_of([&] { cx::stain_dataset(corpus, cx::StainScheme::nli("entailment"), 0.1, 1); }),
            cx::ErrorKind::Collision);
  EXPECT_EQ(error_kind_of([&] { cx::stain_dataset(corpus, cx::StainScheme::nli("neutral"), 1.0, 1); }),
            cx::ErrorKind::InvalidInput);
}

TEST(VerifyStain, RecoversStainAndIsDeterministic) {
  cx::TopicCorpusConfig c;
  c.size = 1500;
  c.heldout = 300;
  const auto scheme = cx::StainScheme::nli("neutral");
  const auto stained = cx::stain_dataset(cx::make_topic_corpus(c, 2), scheme, 0.1, 2);
  cx::StainConfig cfg;
  const auto a = cx::verify_stain_recovery(stained, scheme, cfg);
  cfg.workers = 3;
  const auto b = cx::verify_stain_recovery(stained, scheme, cfg);
  EXPECT_GE(a.dev_accuracy, 0.95);
  EXPECT_GE(a.recovery_accuracy, 0.95);
  EXPECT_EQ(a.cases.size(), 600u);
  EXPECT_TRUE(a.stained_class_is_top_foil());
  EXPECT_EQ(cx::stain_report_to_json(a), cx::stain_report_to_json(b));
  EXPECT_FALSE(a.grid_cell("neutral", "neutral"));
  EXPECT_NE(cx::stain_report_table(a).find("stain recovery"), std::string::npos);
}

TEST(VerifyStain, WeakModelIsATrainingFailure) {
  cx::TopicCorpusConfig c;
  c.size = 600;
  c.heldout = 150;
  const auto scheme = cx::StainScheme::nli("entailment");
  const auto stained = cx::stain_dataset(cx::make_topic_corpus(c, 1), scheme, 0.1, 1);
  cx::StainConfig cfg;
  cfg.train.epochs = 1;
  cfg.train.lr = 1e-3;
  cfg.min_accuracy = 0.99;
  std::string msg;
  EXPECT_EQ(error_kind_of([&] { cx::verify_stain_recovery(stained, scheme, cfg); }, &msg),
            cx::ErrorKind::TrainingFailure);
}

TEST(VerifyStain, UninformativeStainIsNotRecovered) {
  // The same prefix for every class carries no label signal, so it should
  // never be the top contrastive unigram.
  cx::TopicCorpusConfig c;
  c.size = 1200;
  c.heldout = 240;
  auto scheme = cx::StainScheme::uniform(c.classes, "Meanwhile,");
  scheme.stained_class = "entailment";
  const auto stained = cx::stain_dataset(cx::make_topic_corpus(c, 9), scheme, 0.1, 9);
  const auto report = cx::verify_stain_recovery(stained, scheme, cx::StainConfig{});
  std::size_t stain_top = 0;
  for (const auto& cs : report.cases) stain_top += cs.top_item == "Meanwhile," ? 1 : 0;
  EXPECT_EQ(stain_top, 0u);
}
