#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cx/model.hpp"
#include "cx/ranking.hpp"

namespace cx {

/// Class-conditional prefix tokens. The map must cover every class.
struct StainScheme {
  std::string stained_class;
  std::map<std::string, std::string> prefix;

  /// The three NLI stain schemes: entailment / contradiction / neutral.
  static StainScheme nli(const std::string& stained_class);
  /// One shared prefix for every class; carries no label signal.
  static StainScheme uniform(const std::vector<std::string>& classes, const std::string& token);

  /// Prefix tokens in use.
  std::vector<std::string> tokens() const;
  /// Throws invalid-input unless the map covers `space` exactly.
  void validate(const EventSpace& space) const;
};

struct CorpusSplit {
  std::vector<Example> train;
  std::vector<Example> heldout;
};

/// Synthetic 3-class topic task. Each class owns a disjoint topic lexicon;
/// examples mix topic words (mostly from their own class) with shared filler.
struct TopicCorpusConfig {
  std::vector<std::string> classes = {"entailment", "contradiction", "neutral"};
  std::size_t size = 3000;
  std::size_t heldout = 600;
  std::size_t lexicon_size = 40;
  std::size_t filler_size = 60;
  std::size_t min_topic_tokens = 4;
  std::size_t max_topic_tokens = 6;
  std::size_t min_filler_tokens = 4;
  std::size_t max_filler_tokens = 8;
  /// Probability that a topic token comes from the example's own class.
  double topic_purity = 0.85;
};

CorpusSplit make_topic_corpus(const TopicCorpusConfig& config, std::uint64_t seed);

/// Prefixes every example with its class's stain; a seeded `mask_fraction` of
/// the training examples get the mask token instead. Throws collision when a
/// stain token already occurs in the corpus.
CorpusSplit stain_dataset(const CorpusSplit& corpus, const StainScheme& scheme, double mask_fraction,
                          std::uint64_t seed);

/// Drops the leading stain (or mask) token from every example.
CorpusSplit strip_stain(const CorpusSplit& stained);

struct StainConfig {
  TrainConfig train{.lr = 4.0, .epochs = 600, .l2 = 1e-5, .seed = 0, .fit_bias = true};
  /// Below this held-out accuracy the run aborts with a training failure.
  double min_accuracy = 0.9;
  std::size_t workers = 1;
  /// Minimum examples per (fact, foil) cell of the foil grid.
  std::size_t min_count = 5;
};

struct StainCase {
  std::string example_id;
  std::string fact;
  std::string foil;
  std::string top_item;
  bool expects_stain = false;
  bool passed = false;
};

struct StainReport {
  StainScheme scheme;
  std::vector<std::string> classes;
  double dev_accuracy = 0.0;
  double recovery_accuracy = 0.0;
  std::size_t examples = 0;
  std::vector<StainCase> cases;
  /// Foil ranking with the stain as the masked highlight, one report per fact.
  FoilRanking foil_grid;

  /// Mean δ for (fact, foil); nullopt on the diagonal or for unseen facts.
  std::optional<double> grid_cell(const std::string& fact, const std::string& foil) const;
  /// For every non-stained fact, the foil with the largest |δ| is the stained class.
  bool stained_class_is_top_foil() const;
};

/// Trains the desk model on the stained training split and checks, on the
/// held-out split, that the stain is the top contrastive unigram exactly
/// when the fact or the foil is the stained class.
StainReport verify_stain_recovery(const CorpusSplit& stained, const StainScheme& scheme, const StainConfig& config);

std::string stain_report_to_json(const StainReport& report);
/// Human-readable summary with the foil grid.
std::string stain_report_table(const StainReport& report);

}  // namespace cx
