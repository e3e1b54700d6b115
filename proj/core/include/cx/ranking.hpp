#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cx/interventions.hpp"
#include "cx/model.hpp"

namespace cx {

enum class RankMode { Factors, Foils, ContrastivePower };
enum class Metric { Delta, AbsDelta, FactDrop, SymKl };
enum class Aggregation { PerExample, MeanByFact, MedianByFact };

const char* to_string(RankMode mode) noexcept;
const char* to_string(Metric metric) noexcept;
const char* to_string(Aggregation aggregation) noexcept;
RankMode rank_mode_from(const std::string& name);
Metric metric_from(const std::string& name);
Aggregation aggregation_from(const std::string& name);

struct RankEntry {
  std::string item;
  double score = 0.0;
  std::size_t count = 1;
  /// Token range for highlight factors.
  std::optional<TokenSpan> span;
  /// Fewer contributing examples than the report's min_count.
  bool insufficient = false;

  friend bool operator==(const RankEntry&, const RankEntry&) = default;
};

struct RankingReport {
  RankMode mode = RankMode::Factors;
  std::string fact;
  /// The controlled foil (factor ranking) or factor (foil ranking); "none"
  /// for the non-contrastive baseline.
  std::string fixed;
  std::vector<RankEntry> entries;
  Metric metric = Metric::Delta;
  Aggregation aggregation = Aggregation::PerExample;

  /// Descending by score, except contrastive power which is ascending (a
  /// small divergence means the contrast dominates). Ties: item, then span.
  void sort_entries();
  /// Entries with a negative score, most negative first.
  std::vector<RankEntry> negative_entries() const;
};

enum class CandidateSpace { Unigrams, Bigrams, Both };

CandidateSpace candidate_space_from(const std::string& ngrams);

/// All n-gram spans of the requested sizes, in (length, begin) order.
std::vector<TokenSpan> enumerate_candidates(std::size_t token_count, CandidateSpace space);

/// Ranks highlight factors of one example for a fixed foil by δ. With no foil
/// the ranking uses the non-contrastive fact-probability drop p_fact - q_fact.
/// Throws invalid-pair when the foil is the predicted class.
RankingReport rank_factors(const LinearHead& head, const BowEncoder& encoder, const Example& ex,
                           const std::optional<std::string>& foil, CandidateSpace space = CandidateSpace::Both,
                           std::size_t workers = 1);

using HighlightExtractor = std::function<std::vector<TokenSpan>(const Example&)>;

/// Named extractors: "pronouns+names", "all-ngrams" (every token),
/// "first-token", and "token:<word>" (case-insensitive match).
HighlightExtractor highlight_extractor(const std::string& name);

struct FactorSource {
  Factor::Kind kind = Factor::Kind::Highlight;
  std::string name;
  HighlightExtractor extractor;

  static FactorSource highlights(const std::string& extractor_name);
  static FactorSource for_concept(const std::string& concept_name);
};

struct FoilRankingConfig {
  Metric metric = Metric::Delta;
  Aggregation aggregation = Aggregation::MeanByFact;
  std::size_t min_count = 5;
  std::size_t workers = 1;
};

struct FoilRanking {
  /// One report per predicted class, in event-space order.
  std::vector<RankingReport> by_fact;
  std::vector<BatchFailure> skipped;

  const RankingReport* find(const std::string& fact) const;
};

/// For every example the predicted class is the fact; each other class is
/// scored by the factor's intervention and aggregated per (fact, foil).
FoilRanking rank_foils(const InterventionContext& ctx, std::span<const Example> examples, const FactorSource& factor,
                       const FoilRankingConfig& config);

/// Concept factors over external representations.
FoilRanking rank_foils(const InterventionContext& ctx, std::span<const LatentRepr> reprs, const FactorSource& factor,
                       const FoilRankingConfig& config);

/// Mean symmetrized KL between p and q under the contrastive-only
/// intervention, per (predicted fact, foil).
FoilRanking contrastive_power(const LinearHead& head, std::span<const LatentRepr> reprs,
                              std::size_t min_count = 5, std::size_t workers = 1);

}  // namespace cx
