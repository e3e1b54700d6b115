#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "cx/contrastive.hpp"
#include "cx/model.hpp"
#include "cx/numerics.hpp"

namespace cx {

struct ProbeConfig {
  double l2 = 1e-3;
  double dev_fraction = 0.2;
  int max_newton_steps = 100;
  std::uint64_t seed = 0;
};

struct ProbeResult {
  Vec weight;
  double intercept = 0.0;
  double dev_accuracy = 0.0;
  /// Share of the most frequent label on the dev split.
  double majority_baseline = 0.0;
  std::size_t train_size = 0;
  std::size_t dev_size = 0;
};

/// Indices of the dev split: the `dev_fraction` share of examples with the
/// smallest seeded hash of their id. Deterministic in (ids, seed).
std::vector<bool> dev_split(std::span<const LatentRepr> reprs, double dev_fraction, std::uint64_t seed);

/// Binary L2-regularized logistic probe, fit with damped Newton steps.
/// Throws invalid-concept unless both labels occur in the training split.
ProbeResult train_probe(std::span<const LatentRepr> reprs, std::span<const int> labels, const ProbeConfig& config);

struct InlpConfig {
  double epsilon = 0.01;
  int max_iters = 40;
  ProbeConfig probe;
};

/// Result of iterative nullspace projection for one concept.
struct ProjectionStack {
  std::string concept_name;
  /// Orthonormal removed directions, in removal order.
  std::vector<Vec> directions;
  /// I - sum v vᵀ over `directions`.
  Mat projection;
  int iterations = 0;
  double final_probe_accuracy = 0.0;
  double majority_baseline = 0.0;
  bool converged = false;
  /// Dev accuracy of the probe at every round, including the final check.
  std::vector<double> accuracy_trace;
  InlpConfig config;

  std::size_t dim() const noexcept { return projection.rows(); }
};

Mat nullspace_projection(std::span<const Vec> directions, std::size_t dim);

/// Removes linear directions predictive of `labels` until the retrained
/// probe's dev accuracy is within epsilon of the majority baseline. Hitting
/// max_iters returns a stack with converged == false.
ProjectionStack inlp(std::span<const LatentRepr> reprs, std::span<const int> labels, std::string concept_name,
                     const InlpConfig& config);

Vec apply_amnesic(const ProjectionStack& stack, std::span<const double> h);
LatentRepr apply_amnesic(const ProjectionStack& stack, const LatentRepr& h);

struct ConceptVector {
  Vec r;
};

enum class ConceptSign { Positive, Negative, Indeterminate };

/// "+", "−" or "±0".
const char* to_string(ConceptSign sign) noexcept;

/// r is the first removed direction. Throws no-concept on an empty stack.
ConceptVector concept_vector(const ProjectionStack& stack);
ConceptSign concept_sign(const ConceptVector& cv, const ContrastiveDirection& dir);

std::string stack_to_json(const ProjectionStack& stack);
ProjectionStack stack_from_json(const std::string& text);
void save_stack(const std::filesystem::path& path, const ProjectionStack& stack);
ProjectionStack load_stack(const std::filesystem::path& path);

}  // namespace cx
