#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "cx/contrastive.hpp"
#include "cx/ranking.hpp"
#include "cx/report_io.hpp"
#include "expect_error.hpp"
#include "synth.hpp"

using cx::testing::make_example;

namespace {

struct Fixture {
  std::vector<cx::Example> data;
  cx::BowEncoder encoder;
  cx::LinearHead head;
};

Fixture trained() {
  Fixture f;
  const char* rows[][2] = {{"good great fine film", "pos"}, {"bad awful film", "neg"}, {"great film plot", "pos"},
                           {"awful plot bad", "neg"},       {"fine plot okay", "mid"}, {"okay film meh", "mid"},
                           {"good plot great", "pos"},       {"meh okay plot", "mid"},  {"bad film awful", "neg"}};
  int i = 0;
  for (auto& r : rows) f.data.push_back(make_example("e" + std::to_string(i++), r[0], r[1]));
  f.encoder = cx::BowEncoder::build(f.data, {});
  cx::TrainConfig tc;
  tc.epochs = 400;
  f.head = cx::train_logistic(f.data, f.encoder, tc);
  return f;
}

const cx::RankEntry* find_item(const cx::RankingReport& r, const std::string& item) {
  for (const auto& e : r.entries)
    if (e.item == item) return &e;
  return nullptr;
}

}  // namespace

TEST(Candidates, UnigramsThenBigrams) {
  const auto c = cx::enumerate_candidates(3, cx::CandidateSpace::Both);
  const std::vector<cx::TokenSpan> want{{0, 1}, {1, 2}, {2, 3}, {0, 2}, {1, 3}};
  EXPECT_EQ(c, want);
  EXPECT_EQ(cx::enumerate_candidates(1, cx::CandidateSpace::Bigrams).size(), 0u);
  EXPECT_EQ(cx::candidate_space_from("1"), cx::CandidateSpace::Unigrams);
  EXPECT_EQ(error_kind_of([] { cx::candidate_space_from("3"); }), cx::ErrorKind::InvalidInput);
}

TEST(RankFactors, OrdersUnigramsByContrastiveWeight) {
  // With L1 counts of fixed length, masking one token moves h only at that
  // token's slot and the mask slot, so δ is monotone in u[token] - u[mask].
  const auto f = trained();
  const auto& ex = f.data[0];
  const std::string fact = f.head.event_space.name(cx::predict(f.head, f.encoder.encode(ex)).fact);
  ASSERT_EQ(fact, "pos");
  const auto report = cx::rank_factors(f.head, f.encoder, ex, std::string("neg"), cx::CandidateSpace::Unigrams);
  EXPECT_EQ(report.fact, "pos");
  EXPECT_EQ(report.fixed, "neg");
  EXPECT_EQ(report.metric, cx::Metric::Delta);
  const auto dir = cx::direction(f.head, {"pos", "neg"});
  for (std::size_t i = 1; i < report.entries.size(); ++i) {
    const auto& a = report.entries[i - 1];
    const auto& b = report.entries[i];
    EXPECT_GE(a.score, b.score);
    EXPECT_GE(dir.u[f.encoder.feature_of(a.item)], dir.u[f.encoder.feature_of(b.item)] - 1e-12);
  }
}

TEST(RankFactors, FoilEqualToFactIsInvalidPair) {
  const auto f = trained();
  std::string msg;
  EXPECT_EQ(error_kind_of([&] { cx::rank_factors(f.head, f.encoder, f.data[0], std::string("pos")); }, &msg),
            cx::ErrorKind::InvalidPair);
  EXPECT_EQ(error_kind_of([&] { cx::rank_factors(f.head, f.encoder, f.data[0], std::string("nope")); }),
            cx::ErrorKind::InvalidPair);
}

TEST(RankFactors, NoFoilUsesFactDrop) {
  const auto f = trained();
  const auto report = cx::rank_factors(f.head, f.encoder, f.data[0], std::nullopt, cx::CandidateSpace::Both);
  EXPECT_EQ(report.fixed, "none");
  EXPECT_EQ(report.metric, cx::Metric::FactDrop);
  EXPECT_EQ(report.entries.size(), 4u + 3u);
  const auto* bigram = find_item(report, "good great");
  ASSERT_NE(bigram, nullptr);
  EXPECT_EQ(bigram->span, (cx::TokenSpan{0, 2}));
}

TEST(RankFactors, WorkerCountDoesNotChangeTheReport) {
  const auto f = trained();
  const auto a = cx::rank_factors(f.head, f.encoder, f.data[6], std::string("mid"), cx::CandidateSpace::Both, 1);
  const auto b = cx::rank_factors(f.head, f.encoder, f.data[6], std::string("mid"), cx::CandidateSpace::Both, 4);
  EXPECT_EQ(a.entries, b.entries);
}

TEST(Report, SortingAndNegatives) {
  cx::RankingReport r;
  r.entries = {{"b", 0.1, 1, std::nullopt, false}, {"a", 0.1, 1, std::nullopt, false},
               {"c", -0.5, 1, std::nullopt, false}, {"d", -0.2, 1, std::nullopt, true}};
  r.sort_entries();
  EXPECT_EQ(r.entries[0].item, "a");
  EXPECT_EQ(r.entries[1].item, "b");
  EXPECT_EQ(r.entries[3].item, "c");
  const auto neg = r.negative_entries();
  ASSERT_EQ(neg.size(), 1u);
  EXPECT_EQ(neg[0].item, "c");
  r.mode = cx::RankMode::ContrastivePower;
  r.sort_entries();
  EXPECT_EQ(r.entries[0].item, "c");
}

TEST(Extractors, PronounsAndNames) {
  const auto ex = make_example("x", "Yesterday Ms. Ada Lovelace said her proof was done . She smiled at Bob", "a");
  const auto spans = cx::highlight_extractor("pronouns+names")(ex);
  std::vector<std::string> found;
  for (const auto& s : spans) found.push_back(cx::span_text(ex, s));
  EXPECT_EQ(found, (std::vector<std::string>{"Ms.", "Ada Lovelace", "her", "She", "Bob"}));
}

TEST(Extractors, OtherNamedExtractors) {
  const auto ex = make_example("x", "Indeed, the cat sat", "a");
  EXPECT_EQ(cx::highlight_extractor("first-token")(ex), (std::vector<cx::TokenSpan>{{0, 1}}));
  EXPECT_EQ(cx::highlight_extractor("all-ngrams")(ex), (std::vector<cx::TokenSpan>{{0, 4}}));
  EXPECT_EQ(cx::highlight_extractor("token:CAT")(ex), (std::vector<cx::TokenSpan>{{2, 3}}));
  EXPECT_EQ(error_kind_of([] { cx::highlight_extractor("bogus"); }), cx::ErrorKind::InvalidInput);
}

TEST(RankFoils, MeanOfPerExampleScores) {
  const auto f = trained();
  cx::InterventionContext ctx{&f.head, &f.encoder, nullptr, nullptr};
  cx::FoilRankingConfig cfg;
  cfg.min_count = 3;
  const auto ranking = cx::rank_foils(ctx, f.data, cx::FactorSource::highlights("first-token"), cfg);
  ASSERT_EQ(ranking.by_fact.size(), 3u);
  EXPECT_TRUE(ranking.skipped.empty());
  for (const auto& report : ranking.by_fact) {
    for (const auto& e : report.entries) {
      double sum = 0.0;
      std::size_t n = 0;
      for (const auto& ex : f.data) {
        const auto fact = cx::predict(f.head, f.encoder.encode(ex)).fact;
        if (f.head.event_space.name(fact) != report.fact) continue;
        cx::InterventionPlan plan{cx::InterventionKind::Mask, cx::Factor::highlight({{0, 1}}), {report.fact, e.item}};
        sum += cx::delta_contr(cx::intervene(ctx, ex, plan));
        ++n;
      }
      EXPECT_EQ(e.count, n);
      EXPECT_NEAR(e.score, sum / static_cast<double>(n), 1e-12);
      EXPECT_FALSE(e.insufficient);
    }
  }
}

TEST(RankFoils, MinCountMarksInsufficientCells) {
  const auto f = trained();
  cx::InterventionContext ctx{&f.head, &f.encoder, nullptr, nullptr};
  cx::FoilRankingConfig cfg;
  cfg.min_count = 5;
  const auto ranking = cx::rank_foils(ctx, f.data, cx::FactorSource::highlights("first-token"), cfg);
  for (const auto& r : ranking.by_fact)
    for (const auto& e : r.entries) EXPECT_EQ(e.insufficient, e.count < 5);
}

TEST(RankFoils, MedianAndWorkerInvariance) {
  const auto f = trained();
  cx::InterventionContext ctx{&f.head, &f.encoder, nullptr, nullptr};
  cx::FoilRankingConfig cfg;
  cfg.aggregation = cx::Aggregation::MedianByFact;
  const auto a = cx::rank_foils(ctx, f.data, cx::FactorSource::highlights("all-ngrams"), cfg);
  cfg.workers = 3;
  const auto b = cx::rank_foils(ctx, f.data, cx::FactorSource::highlights("all-ngrams"), cfg);
  ASSERT_EQ(a.by_fact.size(), b.by_fact.size());
  for (std::size_t i = 0; i < a.by_fact.size(); ++i) EXPECT_EQ(a.by_fact[i].entries, b.by_fact[i].entries);
  EXPECT_EQ(a.by_fact[0].aggregation, cx::Aggregation::MedianByFact);
}

TEST(RankFoils, ExtractorMissesAreSkipped) {
  const auto f = trained();
  cx::InterventionContext ctx{&f.head, &f.encoder, nullptr, nullptr};
  const auto ranking = cx::rank_foils(ctx, f.data, cx::FactorSource::highlights("token:okay"), {});
  EXPECT_EQ(ranking.skipped.size(), 6u);
  for (const auto& s : ranking.skipped) EXPECT_EQ(s.kind, cx::ErrorKind::InvalidSpan);
}

TEST(RankFoils, PerExampleOnlyForOneExample) {
  const auto f = trained();
  cx::InterventionContext ctx{&f.head, &f.encoder, nullptr, nullptr};
  cx::FoilRankingConfig cfg;
  cfg.aggregation = cx::Aggregation::PerExample;
  EXPECT_EQ(error_kind_of([&] { cx::rank_foils(ctx, f.data, cx::FactorSource::highlights("first-token"), cfg); }),
            cx::ErrorKind::InvalidInput);
  const auto one = cx::rank_foils(ctx, std::span(f.data).first(1), cx::FactorSource::highlights("first-token"), cfg);
  ASSERT_EQ(one.by_fact.size(), 1u);
  EXPECT_EQ(one.by_fact[0].entries[0].count, 1u);
}

TEST(ContrastivePower, SymKlPerCellAndAscendingOrder) {
  cx::Rng rng(12);
  const auto head = cx::testing::random_head(rng, 3, 6);
  std::vector<cx::LatentRepr> reprs;
  for (int i = 0; i < 60; ++i) reprs.push_back({"r" + std::to_string(i), cx::testing::random_vec(rng, 6)});
  const auto power = cx::contrastive_power(head, reprs, 5, 2);
  for (const auto& r : power.by_fact) {
    EXPECT_EQ(r.mode, cx::RankMode::ContrastivePower);
    EXPECT_EQ(r.metric, cx::Metric::SymKl);
    EXPECT_EQ(r.fixed, "contrastive-only");
    for (std::size_t i = 1; i < r.entries.size(); ++i) EXPECT_LE(r.entries[i - 1].score, r.entries[i].score);
    for (const auto& e : r.entries) EXPECT_GE(e.score, 0.0);
  }
}

TEST(ReportIo, CsvRoundTripIsLossless) {
  const auto f = trained();
  cx::InterventionContext ctx{&f.head, &f.encoder, nullptr, nullptr};
  auto ranking = cx::rank_foils(ctx, f.data, cx::FactorSource::highlights("first-token"), {});
  auto factors = cx::rank_factors(f.head, f.encoder, f.data[0], std::string("neg"));
  factors.entries[0].item = "quote \"and, comma\"";
  std::vector<cx::RankingReport> reports = ranking.by_fact;
  reports.push_back(factors);
  std::ostringstream out;
  cx::write_reports_csv(out, reports);
  std::istringstream in(out.str());
  const auto back = cx::read_reports_csv(in);
  ASSERT_EQ(back.size(), reports.size());
  for (std::size_t i = 0; i < reports.size(); ++i) {
    EXPECT_EQ(back[i].mode, reports[i].mode);
    EXPECT_EQ(back[i].fact, reports[i].fact);
    EXPECT_EQ(back[i].fixed, reports[i].fixed);
    ASSERT_EQ(back[i].entries.size(), reports[i].entries.size());
    for (std::size_t j = 0; j < reports[i].entries.size(); ++j) {
      EXPECT_EQ(back[i].entries[j].item, reports[i].entries[j].item);
      EXPECT_EQ(back[i].entries[j].score, reports[i].entries[j].score);
      EXPECT_EQ(back[i].entries[j].count, reports[i].entries[j].count);
    }
  }
  std::ostringstream again;
  cx::write_reports_csv(again, back);
  EXPECT_EQ(again.str(), out.str());
}

TEST(ReportIo, JsonKeepsEverything) {
  const auto f = trained();
  cx::InterventionContext ctx{&f.head, &f.encoder, nullptr, nullptr};
  cx::FoilRankingConfig cfg;
  cfg.min_count = 4;
  auto reports = cx::rank_foils(ctx, f.data, cx::FactorSource::highlights("first-token"), cfg).by_fact;
  reports.push_back(cx::rank_factors(f.head, f.encoder, f.data[0], std::nullopt));
  const auto back = cx::reports_from_json(cx::reports_to_json(reports));
  ASSERT_EQ(back.size(), reports.size());
  for (std::size_t i = 0; i < reports.size(); ++i) {
    EXPECT_EQ(back[i].entries, reports[i].entries);
    EXPECT_EQ(back[i].metric, reports[i].metric);
    EXPECT_EQ(back[i].aggregation, reports[i].aggregation);
  }
}

TEST(ReportIo, MalformedCsvNamesTheLine) {
  std::istringstream in("mode,fact,fixed,item,score,count\nfoils,a,x,b,notanumber,3\n");
  std::string msg;
  EXPECT_EQ(error_kind_of([&] { cx::read_reports_csv(in, "r.csv"); }, &msg), cx::ErrorKind::Parse);
  EXPECT_NE(msg.find("r.csv:2"), std::string::npos) << msg;
}
