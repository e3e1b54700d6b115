#pragma once

#include <cstddef>
#include <span>
#include <string>

#include "cx/model.hpp"
#include "cx/numerics.hpp"

namespace cx {

/// The predicted class (fact) and a single alternative (foil).
struct ContrastivePair {
  std::string fact;
  std::string foil;

  friend bool operator==(const ContrastivePair&, const ContrastivePair&) = default;
};

/// Throws invalid-pair when fact == foil or either is outside `space`.
void validate_pair(const ContrastivePair& pair, const EventSpace& space);

/// u = w_fact - w_foil, the only latent direction that moves the fact/foil logit gap.
struct ContrastiveDirection {
  ContrastivePair pair;
  std::size_t fact_index = 0;
  std::size_t foil_index = 0;
  Vec u;
  double norm_sq = 0.0;
};

struct BehaviorPair {
  std::string example_id;
  ContrastivePair pair;
  std::size_t fact_index = 0;
  std::size_t foil_index = 0;
  /// Probabilities before the intervention.
  Vec p;
  /// Probabilities after the intervention.
  Vec q;
  std::string intervention_tag;
};

/// Degenerate-direction error when the two rows coincide (‖u‖² < 1e-18).
ContrastiveDirection direction(const LinearHead& head, const ContrastivePair& pair);

/// Orthogonal projection of h onto span(u): (u·h / u·u) u.
Vec contrast_transform(std::span<const double> h, const ContrastiveDirection& dir);
LatentRepr contrast_transform(const LatentRepr& h, const ContrastiveDirection& dir);

/// p_f/(p_f+p_o) - q_f/(q_f+q_o), in [-1, 1].
double delta_contr(std::span<const double> p, std::span<const double> q, std::size_t fact, std::size_t foil);
double delta_contr(const BehaviorPair& bp);

/// p_fact - q_fact; the non-contrastive baseline score.
double fact_drop(const BehaviorPair& bp);

/// Symmetrized KL between p and q after flooring both at 1e-12.
double behavior_sym_kl(const BehaviorPair& bp);

/// p = softmax(W h + b), q = softmax(W C(h) + b).
BehaviorPair contrastive_only_intervention(const LinearHead& head, const LatentRepr& h, const ContrastivePair& pair);

}  // namespace cx
