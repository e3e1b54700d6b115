#include "cx/interventions.hpp"

#include <atomic>
#include <exception>
#include <fstream>
#include <istream>
#include <mutex>
#include <ostream>
#include <thread>

#include <nlohmann/json.hpp>

namespace cx {

Factor Factor::highlight(std::vector<TokenSpan> spans, std::string display) {
  Factor f;
  f.kind = Kind::Highlight;
  f.spans = std::move(spans);
  f.display = std::move(display);
  return f;
}

Factor Factor::for_concept(std::string name) {
  Factor f;
  f.kind = Kind::Concept;
  f.display = name;
  f.concept_name = std::move(name);
  return f;
}

const char* to_string(InterventionKind kind) noexcept {
  switch (kind) {
    case InterventionKind::Mask: return "mask";
    case InterventionKind::Amnesic: return "amnesic";
    case InterventionKind::Paired: return "paired";
    case InterventionKind::ContrastiveOnly: return "contrastive-only";
  }
  return "?";
}

InterventionKind intervention_kind_from(const std::string& name) {
  for (auto k : {InterventionKind::Mask, InterventionKind::Amnesic, InterventionKind::Paired,
                 InterventionKind::ContrastiveOnly}) {
    if (name == to_string(k)) return k;
  }
  throw Error(ErrorKind::InvalidInput, "unknown intervention kind '" + name + "'");
}

void InterventionPlan::validate() const {
  if (kind == InterventionKind::Mask && (!factor || factor->kind != Factor::Kind::Highlight)) {
    throw Error(ErrorKind::InvalidInput, "mask intervention needs a highlight factor");
  }
  if (kind == InterventionKind::Amnesic && (!factor || factor->kind != Factor::Kind::Concept)) {
    throw Error(ErrorKind::InvalidInput, "amnesic intervention needs a concept factor");
  }
  if (pair.fact == pair.foil) throw Error(ErrorKind::InvalidPair, "foil '" + pair.foil + "' equals the fact");
}

std::string InterventionPlan::tag() const {
  std::string t = to_string(kind);
  if (factor && !factor->display.empty()) t += ":" + factor->display;
  return t;
}

CounterfactualIndex::CounterfactualIndex(std::span<const Example> dataset) {
  for (const auto& ex : dataset) {
    if (ex.counterfactual_of) edits_.emplace(*ex.counterfactual_of, ex);
  }
}

const Example* CounterfactualIndex::find(const std::string& original_id) const {
  auto it = edits_.find(original_id);
  return it == edits_.end() ? nullptr : &it->second;
}

namespace {

const LinearHead& require_head(const InterventionContext& ctx) {
  if (!ctx.head) throw Error(ErrorKind::InvalidInput, "intervention context has no head");
  return *ctx.head;
}

const ProjectionStack& require_stack(const InterventionContext& ctx, const std::string& concept_name) {
  if (ctx.stacks) {
    auto it = ctx.stacks->find(concept_name);
    if (it != ctx.stacks->end()) return it->second;
  }
  throw Error(ErrorKind::NoConcept, "no projection stack for concept '" + concept_name + "'");
}

BehaviorPair start_pair(const LinearHead& head, const std::string& id, const InterventionPlan& plan,
                        std::span<const double> h) {
  plan.validate();
  validate_pair(plan.pair, head.event_space);
  BehaviorPair bp;
  bp.example_id = id;
  bp.pair = plan.pair;
  bp.fact_index = head.event_space.index_of(plan.pair.fact);
  bp.foil_index = head.event_space.index_of(plan.pair.foil);
  bp.p = softmax(logits_of(head, h));
  bp.intervention_tag = plan.tag();
  return bp;
}

}  // namespace

BehaviorPair intervene(const InterventionContext& ctx, const Example& ex, const InterventionPlan& plan) {
  const LinearHead& head = require_head(ctx);
  if (!ctx.encoder) throw Error(ErrorKind::InvalidInput, "example interventions need an encoder");
  const BowEncoder& encoder = *ctx.encoder;

  const LatentRepr h = encoder.encode(ex);
  BehaviorPair bp = start_pair(head, ex.id, plan, h.h);
  switch (plan.kind) {
    case InterventionKind::Mask:
      bp.q = softmax(logits_of(head, encoder.encode(ex, plan.factor->spans).h));
      break;
    case InterventionKind::Amnesic:
      bp.q = softmax(logits_of(head, apply_amnesic(require_stack(ctx, plan.factor->concept_name), h.h)));
      break;
    case InterventionKind::Paired: {
      const Example* edited = ctx.counterfactuals ? ctx.counterfactuals->find(ex.id) : nullptr;
      if (!edited) throw Error(ErrorKind::MissingPair, "no counterfactual links to example '" + ex.id + "'");
      bp.q = softmax(logits_of(head, encoder.encode(*edited).h));
      break;
    }
    case InterventionKind::ContrastiveOnly:
      bp.q = softmax(logits_of(head, contrast_transform(h.h, direction(head, plan.pair))));
      break;
  }
  return bp;
}

BehaviorPair intervene(const InterventionContext& ctx, const LatentRepr& repr, const InterventionPlan& plan) {
  const LinearHead& head = require_head(ctx);
  BehaviorPair bp = start_pair(head, repr.example_id, plan, repr.h);
  switch (plan.kind) {
    case InterventionKind::Amnesic:
      bp.q = softmax(logits_of(head, apply_amnesic(require_stack(ctx, plan.factor->concept_name), repr.h)));
      break;
    case InterventionKind::ContrastiveOnly:
      bp.q = softmax(logits_of(head, contrast_transform(repr.h, direction(head, plan.pair))));
      break;
    default:
      throw Error(ErrorKind::InvalidInput,
                  std::string(to_string(plan.kind)) + " interventions need the example text, not only its latent");
  }
  return bp;
}

void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& fn) {
  if (workers <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> threads;
  const std::size_t count = std::min(workers, n);
  threads.reserve(count);
  for (std::size_t t = 0; t < count; ++t) {
    threads.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& th : threads) th.join();
  if (failure) std::rethrow_exception(failure);
}

BatchResult batch_intervene(const InterventionContext& ctx, std::span<const Example> dataset,
                            std::span<const InterventionPlan> plans, std::size_t workers) {
  const std::size_t total = dataset.size() * plans.size();
  std::vector<std::optional<BehaviorPair>> slots(total);
  std::vector<std::optional<BatchFailure>> errors(total);

  parallel_for(total, workers, [&](std::size_t k) {
    const std::size_t i = k / plans.size();
    const std::size_t j = k % plans.size();
    try {
      slots[k] = intervene(ctx, dataset[i], plans[j]);
    } catch (const Error& e) {
      errors[k] = BatchFailure{i, j, dataset[i].id, e.kind(), e.what()};
    }
  });

  BatchResult result;
  for (std::size_t k = 0; k < total; ++k) {
    if (slots[k]) result.pairs.push_back(std::move(*slots[k]));
    if (errors[k]) result.failures.push_back(std::move(*errors[k]));
  }
  return result;
}

using nlohmann::json;

std::vector<InterventionPlan> read_plans(std::istream& in, const std::string& source) {
  std::vector<InterventionPlan> plans;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = source + ":" + std::to_string(number) + ": ";
    try {
      const json j = json::parse(line);
      InterventionPlan plan;
      plan.kind = intervention_kind_from(j.at("kind").get<std::string>());
      plan.pair = {j.at("fact").get<std::string>(), j.at("foil").get<std::string>()};
      if (j.contains("spans")) {
        std::vector<TokenSpan> spans;
        for (const auto& s : j["spans"]) spans.push_back({s.at(0).get<std::size_t>(), s.at(1).get<std::size_t>()});
        plan.factor = Factor::highlight(std::move(spans), j.value("display", ""));
      } else if (j.contains("concept")) {
        plan.factor = Factor::for_concept(j["concept"].get<std::string>());
      }
      plan.validate();
      plans.push_back(std::move(plan));
    } catch (const json::exception& e) {
      throw Error(ErrorKind::Parse, where + e.what());
    } catch (const Error& e) {
      throw Error(ErrorKind::Parse, where + e.what());
    }
  }
  return plans;
}

std::vector<InterventionPlan> read_plans(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Parse, "cannot open " + path.string());
  return read_plans(in, path.string());
}

void write_plans(std::ostream& out, std::span<const InterventionPlan> plans) {
  for (const auto& plan : plans) {
    json j{{"kind", to_string(plan.kind)}, {"fact", plan.pair.fact}, {"foil", plan.pair.foil}};
    if (plan.factor && plan.factor->kind == Factor::Kind::Highlight) {
      json spans = json::array();
      for (const auto& s : plan.factor->spans) spans.push_back({s.begin, s.end});
      j["spans"] = spans;
      if (!plan.factor->display.empty()) j["display"] = plan.factor->display;
    } else if (plan.factor) {
      j["concept"] = plan.factor->concept_name;
    }
    out << j.dump() << '\n';
  }
}

}  // namespace cx
