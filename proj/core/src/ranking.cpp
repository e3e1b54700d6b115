#include "cx/ranking.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>

#include "cx/error.hpp"

namespace cx {

const char* to_string(RankMode mode) noexcept {
  switch (mode) {
    case RankMode::Factors: return "factors";
    case RankMode::Foils: return "foils";
    case RankMode::ContrastivePower: return "contrastive-power";
  }
  return "?";
}

const char* to_string(Metric metric) noexcept {
  switch (metric) {
    case Metric::Delta: return "delta";
    case Metric::AbsDelta: return "abs-delta";
    case Metric::FactDrop: return "fact-drop";
    case Metric::SymKl: return "sym-kl";
  }
  return "?";
}

const char* to_string(Aggregation aggregation) noexcept {
  switch (aggregation) {
    case Aggregation::PerExample: return "per-example";
    case Aggregation::MeanByFact: return "mean-by-fact";
    case Aggregation::MedianByFact: return "median-by-fact";
  }
  return "?";
}

RankMode rank_mode_from(const std::string& name) {
  for (auto m : {RankMode::Factors, RankMode::Foils, RankMode::ContrastivePower})
    if (name == to_string(m)) return m;
  throw Error(ErrorKind::InvalidInput, "unknown ranking mode '" + name + "'");
}

Metric metric_from(const std::string& name) {
  for (auto m : {Metric::Delta, Metric::AbsDelta, Metric::FactDrop, Metric::SymKl})
    if (name == to_string(m)) return m;
  throw Error(ErrorKind::InvalidInput, "unknown metric '" + name + "'");
}

Aggregation aggregation_from(const std::string& name) {
  for (auto a : {Aggregation::PerExample, Aggregation::MeanByFact, Aggregation::MedianByFact})
    if (name == to_string(a)) return a;
  throw Error(ErrorKind::InvalidInput, "unknown aggregation '" + name + "'");
}

void RankingReport::sort_entries() {
  const bool ascending = mode == RankMode::ContrastivePower;
  std::stable_sort(entries.begin(), entries.end(), [ascending](const RankEntry& a, const RankEntry& b) {
    if (a.score != b.score) return ascending ? a.score < b.score : a.score > b.score;
    if (a.item != b.item) return a.item < b.item;
    return a.span < b.span;
  });
}

std::vector<RankEntry> RankingReport::negative_entries() const {
  std::vector<RankEntry> out;
  for (const auto& e : entries)
    if (e.score < 0.0 && !e.insufficient) out.push_back(e);
  std::stable_sort(out.begin(), out.end(), [](const RankEntry& a, const RankEntry& b) {
    if (a.score != b.score) return a.score < b.score;
    return a.item < b.item;
  });
  return out;
}

CandidateSpace candidate_space_from(const std::string& ngrams) {
  if (ngrams == "1") return CandidateSpace::Unigrams;
  if (ngrams == "2") return CandidateSpace::Bigrams;
  if (ngrams == "1,2" || ngrams == "2,1") return CandidateSpace::Both;
  throw Error(ErrorKind::InvalidInput, "--ngrams must be 1, 2 or 1,2 (got '" + ngrams + "')");
}

std::vector<TokenSpan> enumerate_candidates(std::size_t token_count, CandidateSpace space) {
  std::vector<TokenSpan> out;
  if (space != CandidateSpace::Bigrams)
    for (std::size_t i = 0; i < token_count; ++i) out.push_back({i, i + 1});
  if (space != CandidateSpace::Unigrams)
    for (std::size_t i = 0; i + 1 < token_count; ++i) out.push_back({i, i + 2});
  return out;
}

RankingReport rank_factors(const LinearHead& head, const BowEncoder& encoder, const Example& ex,
                           const std::optional<std::string>& foil, CandidateSpace space, std::size_t workers) {
  if (ex.tokens.empty()) throw Error(ErrorKind::InvalidInput, "example '" + ex.id + "' has no tokens");
  const LatentRepr h = encoder.encode(ex);
  const Prediction pred = predict(head, h);
  const std::string& fact = head.event_space.name(pred.fact);

  RankingReport report;
  report.mode = RankMode::Factors;
  report.fact = fact;
  report.aggregation = Aggregation::PerExample;

  std::optional<InterventionPlan> plan_template;
  if (foil) {
    validate_pair({fact, *foil}, head.event_space);
    report.fixed = *foil;
    report.metric = Metric::Delta;
    plan_template = InterventionPlan{InterventionKind::Mask, Factor::highlight({}), {fact, *foil}};
  } else {
    report.fixed = "none";
    report.metric = Metric::FactDrop;
  }

  const auto candidates = enumerate_candidates(ex.tokens.size(), space);
  report.entries.resize(candidates.size());
  InterventionContext ctx{&head, &encoder, nullptr, nullptr};
  parallel_for(candidates.size(), workers, [&](std::size_t i) {
    const TokenSpan span = candidates[i];
    RankEntry entry;
    entry.item = span_text(ex, span);
    entry.span = span;
    if (plan_template) {
      InterventionPlan plan = *plan_template;
      plan.factor = Factor::highlight({span}, entry.item);
      entry.score = delta_contr(intervene(ctx, ex, plan));
    } else {
      const Vec masked = encoder.encode(ex, std::span<const TokenSpan>(&span, 1)).h;
      entry.score = pred.probs[pred.fact] - softmax(logits_of(head, masked))[pred.fact];
    }
    report.entries[i] = std::move(entry);
  });
  report.sort_entries();
  return report;
}

namespace {

std::string strip_punct(const std::string& tok) {
  std::size_t b = 0, e = tok.size();
  while (b < e && std::ispunct(static_cast<unsigned char>(tok[b]))) ++b;
  while (e > b && std::ispunct(static_cast<unsigned char>(tok[e - 1]))) --e;
  return normalize_token(tok.substr(b, e - b));
}

bool is_capitalized(const std::string& tok) {
  if (tok.empty() || !std::isupper(static_cast<unsigned char>(tok[0]))) return false;
  return std::any_of(tok.begin() + 1, tok.end(), [](char c) { return std::islower(static_cast<unsigned char>(c)); });
}

bool ends_sentence(const std::string& tok) {
  return !tok.empty() && (tok.back() == '.' || tok.back() == '!' || tok.back() == '?');
}

std::vector<TokenSpan> pronouns_and_names(const Example& ex) {
  static const std::set<std::string> kPronouns = {"he",      "she",     "him", "her", "his", "hers",
                                                  "himself", "herself", "mr",  "mrs", "ms"};
  std::vector<TokenSpan> out;
  const auto& t = ex.tokens;
  std::size_t i = 0;
  while (i < t.size()) {
    if (kPronouns.count(strip_punct(t[i]))) {
      out.push_back({i, i + 1});
      ++i;
      continue;
    }
    static const std::set<std::string> kHonorifics = {"mr", "mrs", "ms", "dr"};
    const bool sentence_start = i == 0 || (ends_sentence(t[i - 1]) && !kHonorifics.count(strip_punct(t[i - 1])));
    if (!sentence_start && is_capitalized(t[i])) {
      std::size_t j = i + 1;
      while (j < t.size() && is_capitalized(t[j]) && !kPronouns.count(strip_punct(t[j])) && !ends_sentence(t[j - 1]))
        ++j;
      out.push_back({i, j});
      i = j;
      continue;
    }
    ++i;
  }
  return out;
}

}  // namespace

HighlightExtractor highlight_extractor(const std::string& name) {
  if (name == "pronouns+names") return pronouns_and_names;
  if (name == "all-ngrams") {
    return [](const Example& ex) { return std::vector<TokenSpan>{{0, ex.tokens.size()}}; };
  }
  if (name == "first-token") {
    return [](const Example& ex) {
      return ex.tokens.empty() ? std::vector<TokenSpan>{} : std::vector<TokenSpan>{{0, 1}};
    };
  }
  if (name.rfind("token:", 0) == 0) {
    const std::string word = normalize_token(name.substr(6));
    return [word](const Example& ex) {
      std::vector<TokenSpan> out;
      for (std::size_t i = 0; i < ex.tokens.size(); ++i)
        if (normalize_token(ex.tokens[i]) == word) out.push_back({i, i + 1});
      return out;
    };
  }
  throw Error(ErrorKind::InvalidInput, "unknown highlight extractor '" + name + "'");
}

FactorSource FactorSource::highlights(const std::string& extractor_name) {
  return {Factor::Kind::Highlight, extractor_name, highlight_extractor(extractor_name)};
}

FactorSource FactorSource::for_concept(const std::string& concept_name) {
  return {Factor::Kind::Concept, concept_name, {}};
}

const RankingReport* FoilRanking::find(const std::string& fact) const {
  for (const auto& r : by_fact)
    if (r.fact == fact) return &r;
  return nullptr;
}

namespace {

struct ExampleScores {
  std::size_t fact = 0;
  /// Indexed by class; the fact's own slot is unused.
  Vec by_foil;
};

double score_of(const BehaviorPair& bp, Metric metric) {
  switch (metric) {
    case Metric::Delta: return delta_contr(bp);
    case Metric::AbsDelta: return std::abs(delta_contr(bp));
    case Metric::FactDrop: return fact_drop(bp);
    case Metric::SymKl: return behavior_sym_kl(bp);
  }
  return 0.0;
}

FoilRanking aggregate(const EventSpace& space, const std::vector<std::optional<ExampleScores>>& scores, RankMode mode,
                      Metric metric, Aggregation aggregation, std::size_t min_count, const std::string& fixed) {
  const std::size_t k = space.size();
  std::vector<std::vector<Vec>> cells(k, std::vector<Vec>(k));
  std::vector<bool> seen(k, false);
  for (const auto& s : scores) {
    if (!s) continue;
    seen[s->fact] = true;
    for (std::size_t foil = 0; foil < k; ++foil)
      if (foil != s->fact) cells[s->fact][foil].push_back(s->by_foil[foil]);
  }

  FoilRanking out;
  for (std::size_t fact = 0; fact < k; ++fact) {
    if (!seen[fact]) continue;
    RankingReport report;
    report.mode = mode;
    report.fact = space.name(fact);
    report.fixed = fixed;
    report.metric = metric;
    report.aggregation = aggregation;
    for (std::size_t foil = 0; foil < k; ++foil) {
      if (foil == fact) continue;
      Vec values = cells[fact][foil];
      RankEntry entry;
      entry.item = space.name(foil);
      entry.count = values.size();
      if (aggregation == Aggregation::MedianByFact) {
        std::sort(values.begin(), values.end());
        const std::size_t n = values.size();
        entry.score = n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
      } else {
        double sum = 0.0;
        for (double v : values) sum += v;
        entry.score = sum / static_cast<double>(values.size());
      }
      entry.insufficient = entry.count < min_count;
      report.entries.push_back(std::move(entry));
    }
    report.sort_entries();
    out.by_fact.push_back(std::move(report));
  }
  return out;
}

Aggregation effective_aggregation(std::size_t n, Aggregation requested) {
  if (n > 1 && requested == Aggregation::PerExample) {
    throw Error(ErrorKind::InvalidInput, "per-example aggregation applies to a single example, got " + std::to_string(n));
  }
  return n == 1 ? Aggregation::PerExample : requested;
}

}  // namespace

FoilRanking rank_foils(const InterventionContext& ctx, std::span<const Example> examples, const FactorSource& factor,
                       const FoilRankingConfig& config) {
  if (!ctx.head || !ctx.encoder) throw Error(ErrorKind::InvalidInput, "foil ranking over examples needs head and encoder");
  const LinearHead& head = *ctx.head;
  const std::size_t k = head.num_classes();

  std::vector<std::optional<ExampleScores>> scores(examples.size());
  std::vector<std::optional<BatchFailure>> failures(examples.size());
  parallel_for(examples.size(), config.workers, [&](std::size_t i) {
    const Example& ex = examples[i];
    try {
      const std::size_t fact = predict(head, ctx.encoder->encode(ex)).fact;
      InterventionPlan plan;
      if (factor.kind == Factor::Kind::Highlight) {
        auto spans = factor.extractor(ex);
        if (spans.empty()) {
          throw Error(ErrorKind::InvalidSpan, "extractor '" + factor.name + "' found no highlight");
        }
        plan.kind = InterventionKind::Mask;
        plan.factor = Factor::highlight(std::move(spans), factor.name);
      } else {
        plan.kind = InterventionKind::Amnesic;
        plan.factor = Factor::for_concept(factor.name);
      }
      ExampleScores s{fact, Vec(k, 0.0)};
      for (std::size_t foil = 0; foil < k; ++foil) {
        if (foil == fact) continue;
        plan.pair = {head.event_space.name(fact), head.event_space.name(foil)};
        s.by_foil[foil] = score_of(intervene(ctx, ex, plan), config.metric);
      }
      scores[i] = std::move(s);
    } catch (const Error& e) {
      failures[i] = BatchFailure{i, 0, ex.id, e.kind(), e.what()};
    }
  });

  FoilRanking out = aggregate(head.event_space, scores, RankMode::Foils, config.metric,
                              effective_aggregation(examples.size(), config.aggregation), config.min_count, factor.name);
  for (auto& f : failures)
    if (f) out.skipped.push_back(std::move(*f));
  return out;
}

FoilRanking rank_foils(const InterventionContext& ctx, std::span<const LatentRepr> reprs, const FactorSource& factor,
                       const FoilRankingConfig& config) {
  if (!ctx.head) throw Error(ErrorKind::InvalidInput, "foil ranking needs a head");
  if (factor.kind != Factor::Kind::Concept) {
    throw Error(ErrorKind::InvalidInput, "highlight factors need example text; representations support concepts only");
  }
  const LinearHead& head = *ctx.head;
  const std::size_t k = head.num_classes();

  std::vector<std::optional<ExampleScores>> scores(reprs.size());
  std::vector<std::optional<BatchFailure>> failures(reprs.size());
  parallel_for(reprs.size(), config.workers, [&](std::size_t i) {
    try {
      const std::size_t fact = predict(head, reprs[i]).fact;
      InterventionPlan plan{InterventionKind::Amnesic, Factor::for_concept(factor.name), {}};
      ExampleScores s{fact, Vec(k, 0.0)};
      for (std::size_t foil = 0; foil < k; ++foil) {
        if (foil == fact) continue;
        plan.pair = {head.event_space.name(fact), head.event_space.name(foil)};
        s.by_foil[foil] = score_of(intervene(ctx, reprs[i], plan), config.metric);
      }
      scores[i] = std::move(s);
    } catch (const Error& e) {
      failures[i] = BatchFailure{i, 0, reprs[i].example_id, e.kind(), e.what()};
    }
  });
  FoilRanking out = aggregate(head.event_space, scores, RankMode::Foils, config.metric,
                              effective_aggregation(reprs.size(), config.aggregation), config.min_count, factor.name);
  for (auto& f : failures)
    if (f) out.skipped.push_back(std::move(*f));
  return out;
}

FoilRanking contrastive_power(const LinearHead& head, std::span<const LatentRepr> reprs, std::size_t min_count,
                              std::size_t workers) {
  const std::size_t k = head.num_classes();
  std::vector<std::optional<ExampleScores>> scores(reprs.size());
  std::vector<std::optional<BatchFailure>> failures(reprs.size());
  parallel_for(reprs.size(), workers, [&](std::size_t i) {
    try {
      const std::size_t fact = predict(head, reprs[i]).fact;
      ExampleScores s{fact, Vec(k, 0.0)};
      for (std::size_t foil = 0; foil < k; ++foil) {
        if (foil == fact) continue;
        const ContrastivePair pair{head.event_space.name(fact), head.event_space.name(foil)};
        s.by_foil[foil] = behavior_sym_kl(contrastive_only_intervention(head, reprs[i], pair));
      }
      scores[i] = std::move(s);
    } catch (const Error& e) {
      failures[i] = BatchFailure{i, 0, reprs[i].example_id, e.kind(), e.what()};
    }
  });
  FoilRanking out = aggregate(head.event_space, scores, RankMode::ContrastivePower, Metric::SymKl,
                              Aggregation::MeanByFact, min_count, "contrastive-only");
  for (auto& f : failures)
    if (f) out.skipped.push_back(std::move(*f));
  return out;
}

}  // namespace cx
