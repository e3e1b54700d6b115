#include "cx/concepts.hpp"

#include <cctype>
#include <fstream>

#include "cx/error.hpp"

namespace cx {

namespace {

std::string strip_edges(std::string_view tok) {
  std::size_t b = 0, e = tok.size();
  while (b < e && std::ispunct(static_cast<unsigned char>(tok[b])) && tok[b] != '\'') ++b;
  while (e > b && std::ispunct(static_cast<unsigned char>(tok[e - 1])) && tok[e - 1] != '\'') --e;
  return normalize_token(tok.substr(b, e - b));
}

}  // namespace

WordSet read_word_list(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Parse, "cannot open word list " + path.string());
  WordSet out;
  std::string line;
  while (std::getline(in, line)) {
    const auto tokens = tokenize(line);
    if (!tokens.empty()) out.insert(normalize_token(tokens.front()));
  }
  return out;
}

WordSet default_negation_lexicon() { return {"no", "not", "never", "none", "nothing", "neither", "nor", "n't"}; }

int concept_label_overlap(std::span<const std::string> premise, std::span<const std::string> hypothesis,
                          const WordSet& stopwords) {
  WordSet premise_words;
  for (const auto& t : premise) premise_words.insert(strip_edges(t));
  for (const auto& t : hypothesis) {
    const std::string w = strip_edges(t);
    if (w.empty() || stopwords.count(w) || stopwords.count(normalize_token(t))) continue;
    if (!premise_words.count(w)) return 0;
  }
  return 1;
}

int concept_label_negation(std::span<const std::string> hypothesis, const WordSet& lexicon) {
  const bool contraction = lexicon.count("n't") > 0;
  for (const auto& t : hypothesis) {
    const std::string lower = normalize_token(t);
    const std::string w = strip_edges(t);
    if (lexicon.count(lower) || lexicon.count(w)) return 1;
    if (contraction && w.size() >= 3 && w.compare(w.size() - 3, 3, "n't") == 0) return 1;
  }
  return 0;
}

ConceptSpec ConceptSpec::parse(const std::string& text) {
  if (text == "overlap") return {"overlap", Labeler::Overlap};
  if (text == "negation" || text == "hyp-negation") return {"negation", Labeler::Negation};
  if (text == "hypothesis") return {"hypothesis", Labeler::Hypothesis};
  const std::string prefix = "from-dataset:";
  if (text.rfind(prefix, 0) == 0 && text.size() > prefix.size()) return {text.substr(prefix.size()), Labeler::FromDataset};
  throw Error(ErrorKind::InvalidConcept,
              "concept must be overlap, negation, hypothesis or from-dataset:NAME (got '" + text + "')");
}

std::vector<int> label_concept(const ConceptSpec& spec, std::span<const Example> dataset,
                               const ConceptResources& resources) {
  std::vector<int> labels;
  labels.reserve(dataset.size());
  for (const auto& ex : dataset) {
    switch (spec.labeler) {
      case ConceptSpec::Labeler::FromDataset: {
        auto it = ex.concept_labels.find(spec.name);
        if (it == ex.concept_labels.end()) {
          throw Error(ErrorKind::InvalidConcept, "example '" + ex.id + "' has no label for concept '" + spec.name + "'");
        }
        labels.push_back(it->second);
        break;
      }
      case ConceptSpec::Labeler::Overlap:
        if (ex.premise.empty()) {
          throw Error(ErrorKind::InvalidConcept, "overlap needs a premise; example '" + ex.id + "' has none");
        }
        labels.push_back(concept_label_overlap(ex.premise, ex.tokens, resources.stopwords));
        break;
      case ConceptSpec::Labeler::Negation:
        labels.push_back(concept_label_negation(ex.tokens, resources.negation_lexicon));
        break;
      case ConceptSpec::Labeler::Hypothesis: {
        if (!resources.partial_head || !resources.partial_encoder) {
          throw Error(ErrorKind::InvalidConcept, "hypothesis concept needs a partial-input baseline");
        }
        const auto pred = predict(*resources.partial_head, resources.partial_encoder->encode(ex));
        labels.push_back(resources.partial_head->event_space.name(pred.fact) == ex.label ? 1 : 0);
        break;
      }
    }
  }
  return labels;
}

PartialInputBaseline train_partial_input_baseline(std::span<const Example> train, const TrainConfig& config) {
  BowEncoder::Options options;
  options.use_premise = false;
  options.seed = config.seed;
  BowEncoder encoder = BowEncoder::build(train, options);
  LinearHead head = train_logistic(train, encoder, config);
  return {std::move(encoder), std::move(head)};
}

PrevalenceTable prevalence(std::span<const Example> dataset, const LinearHead& head, const BowEncoder& encoder,
                           const std::string& concept_name, std::span<const int> labels) {
  require_same_size(dataset.size(), labels.size(), "dataset vs concept labels");
  PrevalenceTable table;
  table.concept_name = concept_name;
  table.total = dataset.size();
  table.classes = head.event_space.classes();
  const std::size_t k = table.classes.size();
  std::vector<std::size_t> gold(k, 0), predicted(k, 0);
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    if (labels[i] != 1) continue;
    ++table.with_concept;
    gold[head.event_space.index_of(dataset[i].label)]++;
    predicted[predict(head, encoder.encode(dataset[i])).fact]++;
  }
  if (table.total > 0) table.total_pct = 100.0 * static_cast<double>(table.with_concept) / static_cast<double>(table.total);
  if (table.with_concept > 0) {
    const double n = static_cast<double>(table.with_concept);
    for (std::size_t c = 0; c < k; ++c) {
      table.gold_pct.push_back(100.0 * static_cast<double>(gold[c]) / n);
      table.predicted_pct.push_back(100.0 * static_cast<double>(predicted[c]) / n);
    }
  }
  return table;
}

}  // namespace cx
