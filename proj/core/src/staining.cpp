#include "cx/staining.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

#include "cx/error.hpp"
#include "cx/interventions.hpp"
#include "cx/rng.hpp"
#include <nlohmann/json.hpp>

namespace cx {

StainScheme StainScheme::nli(const std::string& stained_class) {
  // Prefix per class, for each choice of stained class.
  if (stained_class == "entailment") {
    return {stained_class, {{"entailment", "Indeed,"}, {"contradiction", "Though,"}, {"neutral", "Though,"}}};
  }
  if (stained_class == "contradiction") {
    return {stained_class, {{"entailment", "Indeed,"}, {"contradiction", "No,"}, {"neutral", "Indeed,"}}};
  }
  if (stained_class == "neutral") {
    return {stained_class, {{"entailment", "And,"}, {"contradiction", "And,"}, {"neutral", "Though,"}}};
  }
  throw Error(ErrorKind::InvalidInput,
              "no stain scheme for '" + stained_class + "' (expected entailment, contradiction or neutral)");
}

StainScheme StainScheme::uniform(const std::vector<std::string>& classes, const std::string& token) {
  StainScheme s;
  for (const auto& c : classes) s.prefix[c] = token;
  return s;
}

std::vector<std::string> StainScheme::tokens() const {
  std::set<std::string> unique;
  for (const auto& [cls, tok] : prefix) unique.insert(tok);
  return {unique.begin(), unique.end()};
}

void StainScheme::validate(const EventSpace& space) const {
  for (const auto& c : space.classes())
    if (!prefix.count(c)) throw Error(ErrorKind::InvalidInput, "stain scheme has no prefix for class '" + c + "'");
  for (const auto& [cls, tok] : prefix) {
    if (!space.contains(cls)) throw Error(ErrorKind::InvalidInput, "stain scheme names unknown class '" + cls + "'");
    if (tok.empty() || tokenize(tok).size() != 1) {
      throw Error(ErrorKind::InvalidInput, "stain prefix '" + tok + "' must be a single token");
    }
  }
  if (!stained_class.empty() && !space.contains(stained_class)) {
    throw Error(ErrorKind::InvalidInput, "stained class '" + stained_class + "' is not in the event space");
  }
}

namespace {

// Pronounceable, collision-free pseudo-words: consonant-vowel syllables.
std::vector<std::string> make_words(std::size_t count, std::size_t offset) {
  static const char* kOnsets[] = {"b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z"};
  static const char* kVowels[] = {"a", "e", "i", "o", "u"};
  constexpr std::size_t kSyllables = 14 * 5;
  std::vector<std::string> out;
  for (std::size_t i = offset; i < offset + count; ++i) {
    const std::size_t a = i % kSyllables;
    const std::size_t b = (i / kSyllables) % kSyllables;
    const std::size_t c = i / (kSyllables * kSyllables);
    std::string w = std::string(kOnsets[a / 5]) + kVowels[a % 5] + kOnsets[b / 5] + kVowels[b % 5];
    if (c > 0) w += std::to_string(c);
    out.push_back(std::move(w) + "n");
  }
  return out;
}

std::size_t draw_between(Rng& rng, std::size_t lo, std::size_t hi) { return lo + rng.below(hi - lo + 1); }

}  // namespace

CorpusSplit make_topic_corpus(const TopicCorpusConfig& config, std::uint64_t seed) {
  const std::size_t k = config.classes.size();
  if (k < 2) throw Error(ErrorKind::InvalidInput, "topic corpus needs at least two classes");
  if (config.heldout >= config.size) throw Error(ErrorKind::InvalidInput, "held-out split must be smaller than the corpus");
  if (config.min_topic_tokens == 0 || config.max_topic_tokens < config.min_topic_tokens ||
      config.max_filler_tokens < config.min_filler_tokens) {
    throw Error(ErrorKind::InvalidInput, "bad token count ranges");
  }

  std::vector<std::vector<std::string>> lexicons;
  for (std::size_t c = 0; c < k; ++c) lexicons.push_back(make_words(config.lexicon_size, c * config.lexicon_size));
  const auto filler = make_words(config.filler_size, k * config.lexicon_size);

  Rng rng(seed, 0x70B1C);
  std::vector<Example> all;
  all.reserve(config.size);
  for (std::size_t i = 0; i < config.size; ++i) {
    const std::size_t cls = i % k;
    Example ex;
    char id[32];
    std::snprintf(id, sizeof(id), "topic-%05zu", i);
    ex.id = id;
    ex.label = config.classes[cls];
    const std::size_t topic = draw_between(rng, config.min_topic_tokens, config.max_topic_tokens);
    for (std::size_t t = 0; t < topic; ++t) {
      std::size_t source = cls;
      if (!rng.bernoulli(config.topic_purity)) source = (cls + 1 + rng.below(k - 1)) % k;
      ex.tokens.push_back(lexicons[source][rng.below(lexicons[source].size())]);
    }
    const std::size_t fill = draw_between(rng, config.min_filler_tokens, config.max_filler_tokens);
    for (std::size_t t = 0; t < fill; ++t) ex.tokens.push_back(filler[rng.below(filler.size())]);
    rng.shuffle(ex.tokens);
    all.push_back(std::move(ex));
  }
  rng.shuffle(all);

  CorpusSplit split;
  const std::size_t train_size = config.size - config.heldout;
  split.train.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(train_size));
  split.heldout.assign(all.begin() + static_cast<std::ptrdiff_t>(train_size), all.end());
  return split;
}

CorpusSplit stain_dataset(const CorpusSplit& corpus, const StainScheme& scheme, double mask_fraction,
                          std::uint64_t seed) {
  if (!(mask_fraction >= 0.0 && mask_fraction < 1.0)) {
    throw Error(ErrorKind::InvalidInput, "mask fraction must lie in [0, 1)");
  }
  std::vector<Example> all(corpus.train.begin(), corpus.train.end());
  all.insert(all.end(), corpus.heldout.begin(), corpus.heldout.end());
  scheme.validate(event_space_of(all));

  std::set<std::string> stains;
  for (const auto& t : scheme.tokens()) stains.insert(normalize_token(t));
  for (const auto& ex : all) {
    for (const auto* seq : {&ex.tokens, &ex.premise}) {
      for (const auto& t : *seq) {
        if (stains.count(normalize_token(t))) {
          throw Error(ErrorKind::Collision, "stain token '" + t + "' already occurs in example '" + ex.id + "'");
        }
      }
    }
  }

  auto stain = [&](const Example& ex, bool masked) {
    Example out = ex;
    out.tokens.insert(out.tokens.begin(), masked ? std::string(BowEncoder::kMaskToken) : scheme.prefix.at(ex.label));
    return out;
  };

  // Exactly round(fraction * n) training examples, chosen by a seeded shuffle.
  std::vector<std::size_t> order(corpus.train.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(seed, 0x57A1);
  rng.shuffle(order);
  const auto masked_count =
      static_cast<std::size_t>(std::llround(mask_fraction * static_cast<double>(corpus.train.size())));
  std::vector<bool> masked(corpus.train.size(), false);
  for (std::size_t i = 0; i < masked_count; ++i) masked[order[i]] = true;

  CorpusSplit out;
  for (std::size_t i = 0; i < corpus.train.size(); ++i) out.train.push_back(stain(corpus.train[i], masked[i]));
  for (const auto& ex : corpus.heldout) out.heldout.push_back(stain(ex, false));
  return out;
}

CorpusSplit strip_stain(const CorpusSplit& stained) {
  auto strip = [](std::vector<Example> v) {
    for (auto& ex : v)
      if (!ex.tokens.empty()) ex.tokens.erase(ex.tokens.begin());
    return v;
  };
  return {strip(stained.train), strip(stained.heldout)};
}

std::optional<double> StainReport::grid_cell(const std::string& fact, const std::string& foil) const {
  const RankingReport* r = foil_grid.find(fact);
  if (!r || fact == foil) return std::nullopt;
  for (const auto& e : r->entries)
    if (e.item == foil) return e.score;
  return std::nullopt;
}

bool StainReport::stained_class_is_top_foil() const {
  for (const auto& fact : classes) {
    if (fact == scheme.stained_class) continue;
    const RankingReport* r = foil_grid.find(fact);
    if (!r || r->entries.empty()) return false;
    const auto top = std::max_element(r->entries.begin(), r->entries.end(), [](const RankEntry& a, const RankEntry& b) {
      if (std::abs(a.score) != std::abs(b.score)) return std::abs(a.score) < std::abs(b.score);
      return a.item > b.item;
    });
    if (top->item != scheme.stained_class) return false;
  }
  return true;
}

StainReport verify_stain_recovery(const CorpusSplit& stained, const StainScheme& scheme, const StainConfig& config) {
  if (stained.heldout.empty()) throw Error(ErrorKind::InvalidDataset, "stained corpus has no held-out split");
  const EventSpace space = event_space_of(stained.train);
  scheme.validate(space);

  const BowEncoder encoder = BowEncoder::build(stained.train, BowEncoder::Options{});
  const LinearHead head = train_logistic(stained.train, encoder, config.train);

  StainReport report;
  report.scheme = scheme;
  report.classes = space.classes();
  report.examples = stained.heldout.size();

  std::vector<std::size_t> facts(stained.heldout.size());
  std::size_t correct = 0;
  for (std::size_t i = 0; i < stained.heldout.size(); ++i) {
    facts[i] = predict(head, encoder.encode(stained.heldout[i])).fact;
    if (space.name(facts[i]) == stained.heldout[i].label) ++correct;
  }
  report.dev_accuracy = static_cast<double>(correct) / static_cast<double>(stained.heldout.size());
  if (report.dev_accuracy < config.min_accuracy) {
    char buf[160];
    std::snprintf(buf, sizeof(buf), "stained model reached %.4f held-out accuracy, below the %.2f floor",
                  report.dev_accuracy, config.min_accuracy);
    throw Error(ErrorKind::TrainingFailure, buf);
  }

  const std::size_t k = space.size();
  std::vector<std::vector<StainCase>> per_example(stained.heldout.size());
  parallel_for(stained.heldout.size(), config.workers, [&](std::size_t i) {
    const Example& ex = stained.heldout[i];
    const std::string& fact = space.name(facts[i]);
    for (std::size_t foil = 0; foil < k; ++foil) {
      if (foil == facts[i]) continue;
      const RankingReport ranking = rank_factors(head, encoder, ex, space.name(foil), CandidateSpace::Unigrams);
      const RankEntry& top = ranking.entries.front();
      StainCase c;
      c.example_id = ex.id;
      c.fact = fact;
      c.foil = space.name(foil);
      c.top_item = top.item;
      c.expects_stain = fact == scheme.stained_class || c.foil == scheme.stained_class;
      const bool top_is_stain = top.span && top.span->begin == 0 && top.span->end == 1;
      c.passed = c.expects_stain == top_is_stain;
      per_example[i].push_back(std::move(c));
    }
  });
  std::size_t passed = 0;
  for (auto& v : per_example) {
    for (auto& c : v) {
      passed += c.passed ? 1 : 0;
      report.cases.push_back(std::move(c));
    }
  }
  report.recovery_accuracy = report.cases.empty() ? 0.0 : static_cast<double>(passed) / static_cast<double>(report.cases.size());

  InterventionContext ctx{&head, &encoder, nullptr, nullptr};
  FoilRankingConfig grid_config;
  grid_config.metric = Metric::Delta;
  grid_config.min_count = config.min_count;
  grid_config.workers = config.workers;
  report.foil_grid = rank_foils(ctx, stained.heldout, FactorSource::highlights("first-token"), grid_config);
  return report;
}

std::string stain_report_to_json(const StainReport& report) {
  using nlohmann::json;
  std::size_t passed = 0;
  json failures = json::array();
  for (const auto& c : report.cases) {
    if (c.passed) {
      ++passed;
      continue;
    }
    failures.push_back({{"id", c.example_id}, {"fact", c.fact}, {"foil", c.foil}, {"top", c.top_item},
                        {"expects_stain", c.expects_stain}});
  }
  json grid = json::object();
  for (const auto& fact : report.classes) {
    json row = json::object();
    for (const auto& foil : report.classes) {
      const auto cell = report.grid_cell(fact, foil);
      row[foil] = cell ? json(*cell) : json(nullptr);
    }
    grid[fact] = row;
  }
  json j{{"stained_class", report.scheme.stained_class},
         {"prefix", report.scheme.prefix},
         {"classes", report.classes},
         {"dev_accuracy", report.dev_accuracy},
         {"recovery_accuracy", report.recovery_accuracy},
         {"heldout_examples", report.examples},
         {"cases", report.cases.size()},
         {"passed", passed},
         {"stained_class_is_top_foil", report.stained_class_is_top_foil()},
         {"foil_grid", grid},
         {"failed_cases", failures}};
  return j.dump(2);
}

std::string stain_report_table(const StainReport& report) {
  std::ostringstream out;
  char buf[256];
  std::snprintf(buf, sizeof(buf), "stained class: %s\nheld-out accuracy: %.4f\nstain recovery: %.4f (%zu cases)\n",
                report.scheme.stained_class.c_str(), report.dev_accuracy, report.recovery_accuracy,
                report.cases.size());
  out << buf << "\nfoil grid (mean delta, stain masked)\n";
  std::snprintf(buf, sizeof(buf), "%-16s", "fact \\ foil");
  out << buf;
  for (const auto& foil : report.classes) {
    std::snprintf(buf, sizeof(buf), "%16s", foil.c_str());
    out << buf;
  }
  out << '\n';
  for (const auto& fact : report.classes) {
    if (fact == report.scheme.stained_class || !report.foil_grid.find(fact)) continue;
    std::snprintf(buf, sizeof(buf), "%-16s", fact.c_str());
    out << buf;
    for (const auto& foil : report.classes) {
      const auto cell = report.grid_cell(fact, foil);
      if (cell) {
        std::snprintf(buf, sizeof(buf), "%15.4f%s", *cell, foil == report.scheme.stained_class ? "*" : " ");
      } else {
        std::snprintf(buf, sizeof(buf), "%16s", "---");
      }
      out << buf;
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace cx
