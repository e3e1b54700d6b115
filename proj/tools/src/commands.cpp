#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include "cx/amnesic.hpp"
#include "cx/concepts.hpp"
#include "cx/contrastive.hpp"
#include "cx/error.hpp"
#include "cx/interventions.hpp"
#include "cx/io.hpp"
#include "cx/ranking.hpp"
#include "cx/report_io.hpp"
#include "cx/staining.hpp"

namespace cx::cli {

namespace fs = std::filesystem;

namespace {

constexpr const char* kDataFile = "data.jsonl";

std::string fmt(const char* format, double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), format, x);
  return buf;
}

// Columns count code points, so UTF-8 signs and daggers line up.
std::size_t width_of(const std::string& s) {
  return static_cast<std::size_t>(
      std::count_if(s.begin(), s.end(), [](char c) { return (static_cast<unsigned char>(c) & 0xC0) != 0x80; }));
}

std::string pad(const std::string& s, std::size_t width) {
  const std::size_t w = width_of(s);
  return w >= width ? s + " " : s + std::string(width - w, ' ');
}

std::string lpad(const std::string& s, std::size_t width) {
  const std::size_t w = width_of(s);
  return w > width ? " " + s : std::string(width - w, ' ') + s;
}

struct Inputs {
  ModelBundle model;
  std::vector<Example> data;
  bool has_data = false;
};

Inputs load_inputs(const RunContext& ctx, bool need_data) {
  Inputs in;
  const fs::path model_path = ctx.str("model");
  in.model = load_model(model_path);
  std::optional<std::string> data_path = ctx.opt_str("data");
  if (!data_path && fs::is_directory(model_path) && fs::is_regular_file(model_path / kDataFile)) {
    data_path = (model_path / kDataFile).string();
  }
  if (data_path) {
    in.data = read_dataset(fs::path(*data_path));
    in.has_data = true;
  } else if (need_data) {
    throw Error(ErrorKind::InvalidInput, "--data is required: " + model_path.string() + " holds no " + kDataFile);
  }
  return in;
}

const BowEncoder& need_encoder(const Inputs& in, const std::string& command) {
  if (!in.model.encoder) {
    throw Error(ErrorKind::InvalidInput,
                "--model: " + command + " needs a model directory with an encoder, not a bare representation file");
  }
  return *in.model.encoder;
}

// Representations aligned with `data`: re-encoded when an encoder exists,
// otherwise matched to the stored representations by id.
std::vector<LatentRepr> aligned_reprs(const Inputs& in) {
  if (in.model.encoder) return encode_all(*in.model.encoder, in.data);
  std::map<std::string, const LatentRepr*> by_id;
  for (const auto& r : in.model.reprs) by_id[r.example_id] = &r;
  std::vector<LatentRepr> out;
  for (const auto& ex : in.data) {
    auto it = by_id.find(ex.id);
    if (it == by_id.end()) throw Error(ErrorKind::InvalidDataset, "no representation for example '" + ex.id + "'");
    out.push_back(*it->second);
  }
  return out;
}

ConceptResources concept_resources(const RunContext& ctx, std::span<const Example> data,
                                   std::optional<PartialInputBaseline>& baseline, const ConceptSpec& spec) {
  ConceptResources res;
  res.stopwords = ctx.has("stopwords") ? read_word_list(ctx.str("stopwords")) : default_stopwords();
  if (ctx.has("negation-lexicon")) res.negation_lexicon = read_word_list(ctx.str("negation-lexicon"));
  if (spec.labeler == ConceptSpec::Labeler::Hypothesis) {
    TrainConfig tc;
    tc.seed = ctx.seed;
    baseline = train_partial_input_baseline(data, tc);
    res.partial_head = &baseline->head;
    res.partial_encoder = &baseline->encoder;
  }
  return res;
}

std::string reports_csv(std::span<const RankingReport> reports) {
  std::ostringstream out;
  write_reports_csv(out, reports);
  return out.str();
}

bool percent_metric(Metric m) { return m == Metric::Delta || m == Metric::AbsDelta; }

std::string score_text(const RankEntry& e, Metric m) {
  return percent_metric(m) ? fmt("%.2f", 100.0 * e.score) : fmt("%.4f", e.score);
}

// ---- train ----------------------------------------------------------------

void cmd_train(const RunContext& ctx, OutputDir& out, std::ostream& log) {
  const auto data = read_dataset(fs::path(ctx.str("data")));
  BowEncoder::Options eo;
  eo.embedding_dim = ctx.count("dim");
  eo.seed = ctx.seed;
  eo.use_premise = !ctx.flag("no-premise");
  const BowEncoder encoder = BowEncoder::build(data, eo);

  TrainConfig tc;
  tc.lr = ctx.num("lr");
  tc.epochs = static_cast<int>(ctx.integer("epochs"));
  tc.l2 = ctx.num("l2");
  tc.seed = ctx.seed;
  tc.fit_bias = !ctx.flag("no-bias");
  std::vector<double> trace;
  const LinearHead head = train_logistic(data, encoder, tc, &trace);

  const auto reprs = encode_all(encoder, data);
  std::vector<std::size_t> labels;
  for (const auto& ex : data) labels.push_back(head.event_space.index_of(ex.label));
  const double acc = accuracy(head, reprs, labels);

  save_model(out.root(), encoder, head, reprs);
  out.record(kModelFile);
  out.record(kReprFile);
  write_dataset(out.path(kDataFile), data);
  out.record(kDataFile);

  json summary{{"examples", data.size()},
               {"classes", head.event_space.classes()},
               {"d", encoder.dim()},
               {"train_accuracy", acc},
               {"initial_loss", trace.empty() ? 0.0 : trace.front()},
               {"final_loss", trace.empty() ? 0.0 : trace.back()}};
  out.write("train.json", summary.dump(2) + "\n");
  log << "trained on " << data.size() << " examples, d=" << encoder.dim() << ", train accuracy "
      << fmt("%.4f", acc) << "\n";
}

// ---- rank-factors -----------------------------------------------------------

std::string factor_table(const Example& ex, const RankingReport& report, std::size_t top) {
  std::ostringstream out;
  out << "example: " << ex.id << "\n";
  out << "fact: " << report.fact << "    foil: " << report.fixed << "\n";
  std::string marked;
  const TokenSpan* best = report.entries.empty() || !report.entries.front().span ? nullptr : &*report.entries.front().span;
  for (std::size_t i = 0; i < ex.tokens.size(); ++i) {
    if (i > 0) marked += ' ';
    if (best && i == best->begin) marked += "[[";
    marked += ex.tokens[i];
    if (best && i + 1 == best->end) marked += "]]";
  }
  out << "input: " << marked << "\n\n";
  const bool contrastive = report.metric == Metric::Delta;
  out << lpad("rank", 4) << "  " << pad("factor", 24) << lpad(contrastive ? "delta%" : "drop%", 9) << "\n";
  for (std::size_t i = 0; i < std::min(top, report.entries.size()); ++i) {
    const auto& e = report.entries[i];
    out << lpad(std::to_string(i + 1), 4) << "  " << pad(e.item, 24) << lpad(fmt("%.2f", 100.0 * e.score), 9) << "\n";
  }
  return out.str();
}

void cmd_rank_factors(const RunContext& ctx, OutputDir& out, std::ostream& log) {
  const Inputs in = load_inputs(ctx, true);
  const BowEncoder& encoder = need_encoder(in, ctx.command);
  const std::string id = ctx.str("example");
  auto it = std::find_if(in.data.begin(), in.data.end(), [&](const Example& e) { return e.id == id; });
  if (it == in.data.end()) throw Error(ErrorKind::InvalidInput, "--example: no example with id '" + id + "'");

  const std::string foil_text = ctx.str("foil");
  std::optional<std::string> foil;
  if (foil_text != "none") foil = foil_text;
  const RankingReport report = rank_factors(in.model.head, encoder, *it, foil,
                                            candidate_space_from(ctx.str("ngrams")), ctx.workers);
  const std::vector<RankingReport> reports{report};
  out.write("ranking.csv", reports_csv(reports));
  out.write("ranking.json", reports_to_json(reports));
  const std::string table = factor_table(*it, report, ctx.count("top"));
  out.write("ranking.txt", table);
  log << table;
}

// ---- rank-foils -------------------------------------------------------------

std::string foil_table(const FoilRanking& ranking, const std::string& factor, std::size_t min_count) {
  std::ostringstream out;
  if (ranking.by_fact.empty()) return "no predictions to rank\n";
  const auto& first = ranking.by_fact.front();
  out << "factor: " << factor << "    metric: " << to_string(first.metric)
      << "    aggregation: " << to_string(first.aggregation) << "\n";
  const std::string score_head = percent_metric(first.metric) ? "delta%" : to_string(first.metric);
  for (const auto& report : ranking.by_fact) {
    out << "\nfact: " << report.fact << "\n";
    out << "  " << pad("foil", 20) << lpad(score_head, 10) << lpad("n", 7) << "\n";
    for (const auto& e : report.entries) {
      const bool dagger = !e.insufficient && e.score < 0.0;
      out << (dagger ? "\xE2\x80\xA0 " : "  ") << pad(e.item, 20) << lpad(score_text(e, report.metric), 10)
          << lpad(std::to_string(e.count), 7);
      if (e.insufficient) out << "  (fewer than " << min_count << ")";
      out << "\n";
    }
  }
  if (!ranking.skipped.empty()) out << "\nskipped " << ranking.skipped.size() << " examples with no matching highlight\n";
  return out.str();
}

std::string skipped_json(const FoilRanking& ranking) {
  json arr = json::array();
  for (const auto& f : ranking.skipped) {
    arr.push_back({{"example", f.example_id}, {"kind", to_string(f.kind)}, {"message", f.message}});
  }
  return arr.dump(2) + "\n";
}

void cmd_rank_foils(const RunContext& ctx, OutputDir& out, std::ostream& log) {
  const std::string factor_text = ctx.str("factor");
  const bool is_concept = factor_text.rfind("concept:", 0) == 0;
  FactorSource source = is_concept ? FactorSource::for_concept(factor_text.substr(8))
                                   : FactorSource::highlights(factor_text);

  FoilRankingConfig cfg;
  cfg.metric = ctx.has("metric") ? metric_from(ctx.str("metric")) : (is_concept ? Metric::AbsDelta : Metric::Delta);
  cfg.aggregation = aggregation_from(ctx.str("aggregation"));
  cfg.min_count = ctx.count("min-count");
  cfg.workers = ctx.workers;

  std::map<std::string, ProjectionStack> stacks;
  if (is_concept) {
    if (!ctx.has("stack")) throw Error(ErrorKind::InvalidInput, "--stack is required for concept factors");
    ProjectionStack stack = load_stack(ctx.str("stack"));
    if (stack.concept_name != source.name) {
      throw Error(ErrorKind::InvalidConcept,
                  "--stack holds concept '" + stack.concept_name + "', not '" + source.name + "'");
    }
    stacks.emplace(stack.concept_name, std::move(stack));
  }

  const Inputs in = load_inputs(ctx, !is_concept);
  InterventionContext ictx{&in.model.head, in.model.encoder ? &*in.model.encoder : nullptr, &stacks, nullptr};
  FoilRanking ranking;
  if (in.has_data && in.model.encoder) {
    ranking = rank_foils(ictx, in.data, source, cfg);
  } else if (is_concept) {
    ranking = rank_foils(ictx, std::span<const LatentRepr>(in.model.reprs), source, cfg);
  } else {
    need_encoder(in, ctx.command);
  }

  out.write("foils.csv", reports_csv(ranking.by_fact));
  out.write("foils.json", reports_to_json(ranking.by_fact));
  out.write("skipped.json", skipped_json(ranking));
  const std::string table = foil_table(ranking, factor_text, cfg.min_count);
  out.write("foils.txt", table);
  log << table;
}

// ---- inlp / amnesic-apply ---------------------------------------------------

std::string sign_table(const LinearHead& head, const ProjectionStack& stack, json& rows) {
  std::ostringstream out;
  out << pad("fact", 18) << pad("foil", 18) << lpad("cos", 10) << lpad("sign(cos)", 11) << "\n";
  rows = json::array();
  if (stack.directions.empty()) return out.str() + "(no directions removed)\n";
  const ConceptVector cv = concept_vector(stack);
  const auto& classes = head.event_space.classes();
  for (const auto& fact : classes) {
    for (const auto& foil : classes) {
      if (fact == foil) continue;
      std::string cos_text = "---", sign_text = "---";
      json row{{"fact", fact}, {"foil", foil}, {"cos", nullptr}, {"sign", nullptr}};
      try {
        const ContrastiveDirection dir = direction(head, {fact, foil});
        const double c = dot(cv.r, dir.u) / (norm(cv.r) * std::sqrt(dir.norm_sq));
        cos_text = fmt("%.4f", c);
        sign_text = to_string(concept_sign(cv, dir));
        row["cos"] = c;
        row["sign"] = sign_text;
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::DegenerateDirection) throw;
      }
      rows.push_back(row);
      out << pad(fact, 18) << pad(foil, 18) << lpad(cos_text, 10) << lpad(sign_text, 11) << "\n";
    }
  }
  return out.str();
}

void cmd_inlp(const RunContext& ctx, OutputDir& out, std::ostream& log) {
  const Inputs in = load_inputs(ctx, true);
  const ConceptSpec spec = ConceptSpec::parse(ctx.str("concept"));
  std::optional<PartialInputBaseline> baseline;
  const ConceptResources res = concept_resources(ctx, in.data, baseline, spec);
  const std::vector<int> labels = label_concept(spec, in.data, res);
  const std::vector<LatentRepr> reprs = aligned_reprs(in);

  InlpConfig cfg;
  cfg.epsilon = ctx.num("epsilon");
  const long long max_iters = ctx.integer("max-iters");
  if (max_iters < 1) throw Error(ErrorKind::InvalidInput, "--max-iters must be at least 1");
  cfg.max_iters = static_cast<int>(max_iters);
  cfg.probe.l2 = ctx.num("probe-l2");
  cfg.probe.dev_fraction = ctx.num("dev-fraction");
  cfg.probe.seed = ctx.seed;
  const ProjectionStack stack = inlp(reprs, labels, spec.name, cfg);

  save_stack(out.path("stack.json"), stack);
  out.record("stack.json");

  std::ostringstream summary;
  summary << "concept: " << stack.concept_name << "\n";
  summary << "iterations: " << stack.iterations << "    converged: " << (stack.converged ? "yes" : "no") << "\n";
  summary << "final probe accuracy: " << fmt("%.4f", stack.final_probe_accuracy)
          << "    majority baseline: " << fmt("%.4f", stack.majority_baseline) << "\n";
  summary << "accuracy trace:";
  for (double a : stack.accuracy_trace) summary << ' ' << fmt("%.4f", a);
  summary << "\n\n";
  json rows;
  summary << sign_table(in.model.head, stack, rows);
  out.write("inlp.txt", summary.str());
  out.write("signs.json", rows.dump(2) + "\n");
  log << summary.str();

  if (!stack.converged && ctx.flag("require-convergence")) {
    throw Error(ErrorKind::TrainingFailure, "INLP stopped after " + std::to_string(stack.iterations) +
                                                " directions without reaching the majority baseline");
  }
}

void cmd_amnesic_apply(const RunContext& ctx, OutputDir& out, std::ostream& log) {
  const Inputs in = load_inputs(ctx, false);
  const ProjectionStack stack = load_stack(ctx.str("stack"));
  const std::vector<LatentRepr>& reprs = in.model.reprs;
  std::vector<LatentRepr> projected(reprs.size());
  parallel_for(reprs.size(), ctx.workers, [&](std::size_t i) { projected[i] = apply_amnesic(stack, reprs[i]); });
  write_representations(out.path(kReprFile), in.model.head, projected);
  out.record(kReprFile);

  std::map<std::string, const Example*> by_id;
  for (const auto& ex : in.data) by_id[ex.id] = &ex;
  std::size_t changed = 0, labelled = 0, correct_before = 0, correct_after = 0;
  double drop = 0.0;
  for (std::size_t i = 0; i < reprs.size(); ++i) {
    const Prediction p = predict(in.model.head, reprs[i].h);
    const Prediction q = predict(in.model.head, projected[i].h);
    changed += p.fact != q.fact ? 1 : 0;
    drop += p.probs[p.fact] - q.probs[p.fact];
    auto it = by_id.find(reprs[i].example_id);
    if (it != by_id.end() && in.model.head.event_space.contains(it->second->label)) {
      const std::size_t gold = in.model.head.event_space.index_of(it->second->label);
      ++labelled;
      correct_before += p.fact == gold ? 1 : 0;
      correct_after += q.fact == gold ? 1 : 0;
    }
  }
  const double n = reprs.empty() ? 1.0 : static_cast<double>(reprs.size());
  json summary{{"concept", stack.concept_name},
               {"directions", stack.directions.size()},
               {"examples", reprs.size()},
               {"prediction_changes", changed},
               {"mean_fact_drop", drop / n}};
  if (labelled > 0) {
    summary["accuracy_before"] = static_cast<double>(correct_before) / static_cast<double>(labelled);
    summary["accuracy_after"] = static_cast<double>(correct_after) / static_cast<double>(labelled);
  }
  out.write("amnesic.json", summary.dump(2) + "\n");
  log << "removed " << stack.directions.size() << " direction(s) for '" << stack.concept_name << "': " << changed
      << " of " << reprs.size() << " predictions changed\n";
}

// ---- contrastive-power --------------------------------------------------------

void cmd_contrastive_power(const RunContext& ctx, OutputDir& out, std::ostream& log) {
  const Inputs in = load_inputs(ctx, false);
  const FoilRanking ranking = contrastive_power(in.model.head, in.model.reprs, ctx.count("min-count"), ctx.workers);
  out.write("power.csv", reports_csv(ranking.by_fact));
  out.write("power.json", reports_to_json(ranking.by_fact));

  std::ostringstream t;
  t << pad("fact", 18) << pad("most contrastive", 26) << pad("least contrastive", 26) << "\n";
  for (const auto& report : ranking.by_fact) {
    std::vector<const RankEntry*> ok;
    for (const auto& e : report.entries)
      if (!e.insufficient) ok.push_back(&e);
    auto cell = [](const RankEntry* e) { return e ? e->item + " (" + fmt("%.4f", e->score) + ")" : std::string("---"); };
    t << pad(report.fact, 18) << pad(cell(ok.empty() ? nullptr : ok.front()), 26)
      << pad(cell(ok.size() < 2 ? nullptr : ok.back()), 26) << "\n";
  }
  t << "\nscores: mean symmetrized KL between p and q under the contrastive-only intervention\n";
  out.write("power.txt", t.str());
  log << t.str();
}

// ---- prevalence -------------------------------------------------------------

void cmd_prevalence(const RunContext& ctx, OutputDir& out, std::ostream& log) {
  const Inputs in = load_inputs(ctx, true);
  const BowEncoder& encoder = need_encoder(in, ctx.command);
  std::vector<PrevalenceTable> tables;
  std::stringstream names(ctx.str("concept"));
  for (std::string name; std::getline(names, name, ',');) {
    if (name.empty()) continue;
    const ConceptSpec spec = ConceptSpec::parse(name);
    std::optional<PartialInputBaseline> baseline;
    const ConceptResources res = concept_resources(ctx, in.data, baseline, spec);
    const std::vector<int> labels = label_concept(spec, in.data, res);
    tables.push_back(prevalence(in.data, in.model.head, encoder, spec.name, labels));
  }
  if (tables.empty()) throw Error(ErrorKind::InvalidInput, "--concept: no concept named");
  std::ostringstream csv;
  write_prevalence_csv(csv, tables);
  out.write("prevalence.csv", csv.str());

  std::ostringstream t;
  for (const auto& tab : tables) {
    t << "concept: " << tab.concept_name << "    " << tab.with_concept << " of " << tab.total << " ("
      << fmt("%.1f", tab.total_pct) << "%)\n";
    t << "  " << pad("class", 18) << lpad("gold%", 8) << lpad("pred%", 8) << "\n";
    for (std::size_t c = 0; c < tab.classes.size(); ++c) {
      t << "  " << pad(tab.classes[c], 18) << lpad(tab.gold_pct.empty() ? "---" : fmt("%.1f", tab.gold_pct[c]), 8)
        << lpad(tab.predicted_pct.empty() ? "---" : fmt("%.1f", tab.predicted_pct[c]), 8) << "\n";
    }
  }
  out.write("prevalence.txt", t.str());
  log << t.str();
}

// ---- stain / verify-stain ---------------------------------------------------

TopicCorpusConfig corpus_config(const RunContext& ctx) {
  TopicCorpusConfig tc;
  tc.size = ctx.count("size");
  tc.heldout = ctx.count("heldout");
  tc.topic_purity = ctx.num("purity");
  if (!(tc.topic_purity > 0.0 && tc.topic_purity <= 1.0)) {
    throw Error(ErrorKind::InvalidInput, "--purity must lie in (0, 1]");
  }
  return tc;
}

void cmd_stain(const RunContext& ctx, OutputDir& out, std::ostream& log) {
  const StainScheme scheme = StainScheme::nli(ctx.str("scheme"));
  const CorpusSplit corpus = make_topic_corpus(corpus_config(ctx), ctx.seed);
  const CorpusSplit stained = stain_dataset(corpus, scheme, ctx.num("mask-fraction"), ctx.seed);
  write_dataset(out.path("train.jsonl"), stained.train);
  out.record("train.jsonl");
  write_dataset(out.path("heldout.jsonl"), stained.heldout);
  out.record("heldout.jsonl");
  out.write("scheme.json", json{{"stained_class", scheme.stained_class}, {"prefix", scheme.prefix}}.dump(2) + "\n");
  log << "stained " << stained.train.size() << " training and " << stained.heldout.size()
      << " held-out examples for '" << scheme.stained_class << "'\n";
}

void cmd_verify_stain(const RunContext& ctx, OutputDir& out, std::ostream& log) {
  const StainScheme scheme = StainScheme::nli(ctx.str("scheme"));
  CorpusSplit stained;
  if (ctx.has("train-data") || ctx.has("heldout-data")) {
    if (!ctx.has("train-data") || !ctx.has("heldout-data")) {
      throw Error(ErrorKind::InvalidInput, "--train-data and --heldout-data must be given together");
    }
    stained.train = read_dataset(fs::path(ctx.str("train-data")));
    stained.heldout = read_dataset(fs::path(ctx.str("heldout-data")));
  } else {
    const CorpusSplit corpus = make_topic_corpus(corpus_config(ctx), ctx.seed);
    stained = stain_dataset(corpus, scheme, ctx.num("mask-fraction"), ctx.seed);
  }
  StainConfig cfg;
  cfg.train.lr = ctx.num("lr");
  cfg.train.epochs = static_cast<int>(ctx.integer("epochs"));
  cfg.train.l2 = ctx.num("l2");
  cfg.train.seed = ctx.seed;
  cfg.min_accuracy = ctx.num("min-accuracy");
  cfg.min_count = ctx.count("min-count");
  cfg.workers = ctx.workers;
  const StainReport report = verify_stain_recovery(stained, scheme, cfg);
  out.write("stain_report.json", stain_report_to_json(report) + "\n");
  const std::string table = stain_report_table(report);
  out.write("stain_report.txt", table);
  log << table;
}

OptionSpec str(std::string flag, json fallback, std::string help, bool required = false) {
  return {std::move(flag), OptType::String, std::move(fallback), required, std::move(help)};
}
OptionSpec num(std::string flag, double fallback, std::string help) {
  return {std::move(flag), OptType::Double, fallback, false, std::move(help)};
}
OptionSpec integer(std::string flag, long long fallback, std::string help) {
  return {std::move(flag), OptType::Int, fallback, false, std::move(help)};
}
OptionSpec flag(std::string name, std::string help) {
  return {std::move(name), OptType::Flag, false, false, std::move(help)};
}

OptionSpec model_opt() { return str("model", nullptr, "model directory or representation file", true); }
OptionSpec data_opt() { return str("data", nullptr, "dataset JSONL (default: <model>/data.jsonl)"); }

std::vector<OptionSpec> corpus_opts(std::vector<OptionSpec> extra) {
  std::vector<OptionSpec> opts{
      str("scheme", nullptr, "stained class: entailment, contradiction or neutral", true),
      num("mask-fraction", 0.1, "fraction of training examples whose stain is masked"),
      integer("size", 3000, "synthetic corpus size"),
      integer("heldout", 600, "held-out examples"),
      num("purity", 0.85, "probability that a topic word matches the example's class"),
  };
  opts.insert(opts.end(), extra.begin(), extra.end());
  return opts;
}

}  // namespace

const std::vector<CommandSpec>& command_table() {
  static const std::vector<CommandSpec> table{
      {"train",
       "train the bag-of-words logistic model",
       {str("data", nullptr, "training dataset JSONL", true), num("lr", 2.0, "learning rate"),
        integer("epochs", 300, "full-batch epochs"), num("l2", 1e-4, "L2 penalty on the weights"),
        integer("dim", 0, "random embedding size (0: raw counts)"), flag("no-bias", "fit without a bias"),
        flag("no-premise", "ignore premise tokens")},
       cmd_train},
      {"rank-factors",
       "rank the highlights of one example for a fixed foil",
       {model_opt(), data_opt(), str("example", nullptr, "example id", true),
        str("foil", nullptr, "foil class, or none for the non-contrastive drop", true),
        str("ngrams", "1,2", "candidate n-gram sizes: 1, 2 or 1,2"), integer("top", 10, "rows to print")},
       cmd_rank_factors},
      {"rank-foils",
       "rank foils by the effect of a highlight extractor or concept",
       {model_opt(), data_opt(),
        str("factor", nullptr, "pronouns+names, all-ngrams, first-token, token:<w> or concept:NAME", true),
        str("stack", nullptr, "INLP stack for concept factors"),
        str("metric", nullptr, "delta, abs-delta, fact-drop or sym-kl (default: delta; abs-delta for concepts)"),
        str("aggregation", "mean-by-fact", "mean-by-fact, median-by-fact or per-example"),
        integer("min-count", 5, "minimum examples per (fact, foil) cell")},
       cmd_rank_foils},
      {"inlp",
       "fit an iterative nullspace projection for a concept",
       {model_opt(), data_opt(),
        str("concept", nullptr, "overlap, negation, hyp-negation, hypothesis or from-dataset:NAME", true),
        num("epsilon", 0.01, "stop when probe accuracy is within this of the majority baseline"),
        integer("max-iters", 40, "maximum removed directions"), num("probe-l2", 1e-3, "probe L2 penalty"),
        num("dev-fraction", 0.2, "probe dev split"), str("stopwords", nullptr, "stopword list (default: bundled)"),
        str("negation-lexicon", nullptr, "negation word list (default: built in)"),
        flag("require-convergence", "exit 2 when INLP does not converge")},
       cmd_inlp},
      {"amnesic-apply",
       "project the model's representations through an INLP stack",
       {model_opt(), data_opt(), str("stack", nullptr, "INLP stack file", true)},
       cmd_amnesic_apply},
      {"contrastive-power",
       "per-fact most and least contrastive foils by mean symmetrized KL",
       {model_opt(), integer("min-count", 5, "minimum examples per (fact, foil) cell")},
       cmd_contrastive_power},
      {"prevalence",
       "concept prevalence by gold and predicted class",
       {model_opt(), data_opt(),
        str("concept", nullptr, "comma-separated concepts: overlap, negation, hypothesis, from-dataset:NAME", true),
        str("stopwords", nullptr, "stopword list (default: bundled)"),
        str("negation-lexicon", nullptr, "negation word list (default: built in)")},
       cmd_prevalence},
      {"stain", "write a stained synthetic corpus", corpus_opts({}), cmd_stain},
      {"verify-stain",
       "train on a stained corpus and check stain recovery",
       corpus_opts({str("train-data", nullptr, "stained training JSONL (default: generate)"),
                    str("heldout-data", nullptr, "stained held-out JSONL"), num("lr", 4.0, "learning rate"),
                    integer("epochs", 600, "full-batch epochs"), num("l2", 1e-5, "L2 penalty"),
                    num("min-accuracy", 0.9, "abort below this held-out accuracy"),
                    integer("min-count", 5, "minimum examples per foil-grid cell")}),
       cmd_verify_stain},
  };
  return table;
}

const CommandSpec* find_command(const std::string& name) {
  for (const auto& c : command_table())
    if (c.name == name) return &c;
  return nullptr;
}

void execute(const RunContext& ctx, std::ostream& out) {
  const CommandSpec* spec = find_command(ctx.command);
  if (!spec) throw Error(ErrorKind::InvalidInput, "unknown command '" + ctx.command + "'");
  OutputDir dir(ctx.out);
  spec->run(ctx, dir, out);
  dir.finalize(ctx);
}

}  // namespace cx::cli
