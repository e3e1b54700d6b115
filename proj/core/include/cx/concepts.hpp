#pragma once

#include <filesystem>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "cx/model.hpp"

namespace cx {

using WordSet = std::set<std::string, std::less<>>;

/// Plain text, one token per line; blank lines are ignored. Entries are lowercased.
WordSet read_word_list(const std::filesystem::path& path);

/// no, not, never, none, nothing, neither, nor, n't
WordSet default_negation_lexicon();

/// The bundled English stopword snapshot (data/stopwords_en.txt).
WordSet default_stopwords();

/// 1 iff every non-stopword hypothesis token also occurs in the premise (in
/// any order). Hypotheses made only of stopwords count as overlapping.
int concept_label_overlap(std::span<const std::string> premise, std::span<const std::string> hypothesis,
                          const WordSet& stopwords);

/// 1 iff any hypothesis token is in the lexicon (case-insensitive; tokens
/// ending in "n't" match the "n't" entry).
int concept_label_negation(std::span<const std::string> hypothesis, const WordSet& lexicon);

struct ConceptSpec {
  enum class Labeler { FromDataset, Overlap, Negation, Hypothesis };

  std::string name;
  Labeler labeler = Labeler::FromDataset;

  /// "overlap", "negation", "hypothesis" or "from-dataset:NAME".
  static ConceptSpec parse(const std::string& text);
};

/// Inputs some labelers need; unused members may stay empty.
struct ConceptResources {
  WordSet stopwords;
  WordSet negation_lexicon = default_negation_lexicon();
  /// Hypothesis concept: a model that sees only the tokens, not the premise.
  const LinearHead* partial_head = nullptr;
  const BowEncoder* partial_encoder = nullptr;
};

/// Binary label per example. Throws invalid-concept when a from-dataset label
/// is missing or a labeler's resources are absent.
std::vector<int> label_concept(const ConceptSpec& spec, std::span<const Example> dataset,
                               const ConceptResources& resources);

/// Trains the partial-input baseline used by the hypothesis concept: same
/// trainer, encoder restricted to the tokens (no premise).
struct PartialInputBaseline {
  BowEncoder encoder;
  LinearHead head;
};
PartialInputBaseline train_partial_input_baseline(std::span<const Example> train, const TrainConfig& config);

struct PrevalenceTable {
  std::string concept_name;
  std::size_t total = 0;
  std::size_t with_concept = 0;
  double total_pct = 0.0;
  std::vector<std::string> classes;
  /// Over examples having the concept; empty when none do.
  std::vector<double> gold_pct;
  std::vector<double> predicted_pct;
};

PrevalenceTable prevalence(std::span<const Example> dataset, const LinearHead& head, const BowEncoder& encoder,
                           const std::string& concept_name, std::span<const int> labels);

}  // namespace cx
