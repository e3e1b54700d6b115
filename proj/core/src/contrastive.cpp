#include "cx/contrastive.hpp"

#include "cx/error.hpp"

namespace cx {

void validate_pair(const ContrastivePair& pair, const EventSpace& space) {
  if (pair.fact == pair.foil) {
    throw Error(ErrorKind::InvalidPair, "foil '" + pair.foil + "' equals the fact");
  }
  for (const auto* name : {&pair.fact, &pair.foil}) {
    if (!space.contains(*name)) throw Error(ErrorKind::InvalidPair, "class '" + *name + "' is not in the event space");
  }
}

ContrastiveDirection direction(const LinearHead& head, const ContrastivePair& pair) {
  validate_pair(pair, head.event_space);
  ContrastiveDirection dir;
  dir.pair = pair;
  dir.fact_index = head.event_space.index_of(pair.fact);
  dir.foil_index = head.event_space.index_of(pair.foil);
  dir.u = subtract(head.W.row(dir.fact_index), head.W.row(dir.foil_index));
  dir.norm_sq = dot(dir.u, dir.u);
  if (!(dir.norm_sq >= tol::kDegenerateNormSq)) {
    throw Error(ErrorKind::DegenerateDirection,
                "rows for '" + pair.fact + "' and '" + pair.foil + "' are indistinguishable to the head");
  }
  return dir;
}

Vec contrast_transform(std::span<const double> h, const ContrastiveDirection& dir) {
  require_same_size(h.size(), dir.u.size(), "representation vs contrastive direction");
  return scaled(dir.u, dot(dir.u, h) / dir.norm_sq);
}

LatentRepr contrast_transform(const LatentRepr& h, const ContrastiveDirection& dir) {
  return {h.example_id, contrast_transform(h.h, dir)};
}

double delta_contr(std::span<const double> p, std::span<const double> q, std::size_t fact, std::size_t foil) {
  require_same_size(p.size(), q.size(), "behavior distributions");
  if (fact >= p.size() || foil >= p.size() || fact == foil) {
    throw Error(ErrorKind::InvalidPair, "fact/foil indices invalid for the distributions");
  }
  const double before = p[fact] + p[foil];
  const double after = q[fact] + q[foil];
  if (!(before > 0.0) || !(after > 0.0)) {
    throw Error(ErrorKind::DegenerateDistribution, "fact and foil carry zero probability mass");
  }
  return p[fact] / before - q[fact] / after;
}

double delta_contr(const BehaviorPair& bp) { return delta_contr(bp.p, bp.q, bp.fact_index, bp.foil_index); }

double fact_drop(const BehaviorPair& bp) { return bp.p.at(bp.fact_index) - bp.q.at(bp.fact_index); }

double behavior_sym_kl(const BehaviorPair& bp) {
  return sym_kl(clamp_probabilities(bp.p), clamp_probabilities(bp.q));
}

BehaviorPair contrastive_only_intervention(const LinearHead& head, const LatentRepr& h, const ContrastivePair& pair) {
  const ContrastiveDirection dir = direction(head, pair);
  BehaviorPair bp;
  bp.example_id = h.example_id;
  bp.pair = pair;
  bp.fact_index = dir.fact_index;
  bp.foil_index = dir.foil_index;
  bp.p = softmax(logits_of(head, h.h));
  bp.q = softmax(logits_of(head, contrast_transform(h.h, dir)));
  bp.intervention_tag = "contrastive-only";
  return bp;
}

}  // namespace cx
