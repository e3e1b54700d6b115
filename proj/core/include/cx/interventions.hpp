#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cx/amnesic.hpp"
#include "cx/contrastive.hpp"
#include "cx/error.hpp"
#include "cx/model.hpp"

namespace cx {

/// A candidate cause: token spans to mask, or a concept to erase.
struct Factor {
  enum class Kind { Highlight, Concept };

  Kind kind = Kind::Highlight;
  std::vector<TokenSpan> spans;
  std::string concept_name;
  std::string display;

  static Factor highlight(std::vector<TokenSpan> spans, std::string display = {});
  static Factor for_concept(std::string name);
};

enum class InterventionKind { Mask, Amnesic, Paired, ContrastiveOnly };

const char* to_string(InterventionKind kind) noexcept;
InterventionKind intervention_kind_from(const std::string& name);

struct InterventionPlan {
  InterventionKind kind = InterventionKind::Mask;
  std::optional<Factor> factor;
  ContrastivePair pair;

  /// Mask needs a highlight factor, amnesic a concept factor.
  void validate() const;
  std::string tag() const;
};

/// Maps an original example id to its edited counterpart (the example whose
/// counterfactual_of names it).
class CounterfactualIndex {
 public:
  CounterfactualIndex() = default;
  explicit CounterfactualIndex(std::span<const Example> dataset);

  const Example* find(const std::string& original_id) const;
  std::size_t size() const noexcept { return edits_.size(); }

 private:
  std::map<std::string, Example> edits_;
};

/// Everything an intervention may need beyond the example itself.
struct InterventionContext {
  const LinearHead* head = nullptr;
  const BowEncoder* encoder = nullptr;
  /// Frozen stacks by concept name.
  const std::map<std::string, ProjectionStack>* stacks = nullptr;
  const CounterfactualIndex* counterfactuals = nullptr;
};

/// p from the unmodified example; q from the masked re-encoding, the amnesic
/// projection, the paired counterfactual, or the contrastive projection.
BehaviorPair intervene(const InterventionContext& ctx, const Example& ex, const InterventionPlan& plan);

/// Representation-only variant for externally produced latents. Supports the
/// amnesic and contrastive-only kinds.
BehaviorPair intervene(const InterventionContext& ctx, const LatentRepr& repr, const InterventionPlan& plan);

struct BatchFailure {
  std::size_t example_index = 0;
  std::size_t plan_index = 0;
  std::string example_id;
  ErrorKind kind = ErrorKind::InvalidInput;
  std::string message;
};

struct BatchResult {
  /// Example-major order: all plans for example 0, then example 1, ...
  std::vector<BehaviorPair> pairs;
  std::vector<BatchFailure> failures;
};

/// Runs every plan on every example. Per-item failures are recorded, never
/// thrown. Output is identical for any worker count.
BatchResult batch_intervene(const InterventionContext& ctx, std::span<const Example> dataset,
                            std::span<const InterventionPlan> plans, std::size_t workers = 1);

/// Runs `fn(i)` for i in [0, n) on up to `workers` threads. Callers write into
/// per-index slots, so results never depend on scheduling.
void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& fn);

// Plan files are JSON Lines:
//   {"kind":"mask","fact":"A","foil":"B","spans":[[0,1]],"display":"..."}
//   {"kind":"amnesic","fact":"A","foil":"B","concept":"gender"}
std::vector<InterventionPlan> read_plans(std::istream& in, const std::string& source = "<stream>");
std::vector<InterventionPlan> read_plans(const std::filesystem::path& path);
void write_plans(std::ostream& out, std::span<const InterventionPlan> plans);

}  // namespace cx
