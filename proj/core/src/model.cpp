#include "cx/model.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>

#include "cx/error.hpp"
#include "cx/rng.hpp"

namespace cx {

EventSpace::EventSpace(std::vector<std::string> classes) : classes_(std::move(classes)) {
  if (classes_.size() < 2) {
    throw Error(ErrorKind::InvalidDataset, "event space needs at least two classes");
  }
  std::set<std::string_view> seen;
  for (const auto& c : classes_) {
    if (c.empty()) throw Error(ErrorKind::InvalidDataset, "empty class name");
    if (!seen.insert(c).second) throw Error(ErrorKind::InvalidDataset, "duplicate class '" + c + "'");
  }
}

EventSpace EventSpace::from_labels(std::span<const std::string> labels) {
  std::set<std::string> unique(labels.begin(), labels.end());
  if (unique.size() < 2) {
    throw Error(ErrorKind::InvalidDataset, "dataset contains fewer than two classes");
  }
  return EventSpace(std::vector<std::string>(unique.begin(), unique.end()));
}

bool EventSpace::contains(std::string_view name) const noexcept {
  return std::find(classes_.begin(), classes_.end(), name) != classes_.end();
}

std::size_t EventSpace::index_of(std::string_view name) const {
  auto it = std::find(classes_.begin(), classes_.end(), name);
  if (it == classes_.end()) {
    throw Error(ErrorKind::InvalidDataset, "unknown class '" + std::string(name) + "'");
  }
  return static_cast<std::size_t>(it - classes_.begin());
}

EventSpace event_space_of(std::span<const Example> dataset) {
  std::vector<std::string> labels;
  labels.reserve(dataset.size());
  for (const auto& ex : dataset) labels.push_back(ex.label);
  return EventSpace::from_labels(labels);
}

std::string span_text(const Example& ex, const TokenSpan& span) {
  std::string out;
  for (std::size_t i = span.begin; i < span.end && i < ex.tokens.size(); ++i) {
    if (!out.empty()) out += ' ';
    out += ex.tokens[i];
  }
  return out;
}

void LinearHead::validate() const {
  require_same_size(W.rows(), event_space.size(), "head rows vs classes");
  if (W.cols() < 2) throw Error(ErrorKind::Shape, "head dimension must be at least 2");
  if (bias) require_same_size(bias->size(), W.rows(), "bias length vs classes");
  if (!all_finite(W.data()) || (bias && !all_finite(*bias))) {
    throw Error(ErrorKind::InvalidInput, "head contains non-finite values");
  }
}

Vec logits_of(const LinearHead& head, std::span<const double> h) {
  require_same_size(h.size(), head.dim(), "representation vs head");
  Vec z = head.W.multiply(h);
  if (head.bias) axpy(1.0, *head.bias, z);
  return z;
}

std::size_t argmax(std::span<const double> v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] > v[best]) best = i;
  return best;
}

Prediction predict(const LinearHead& head, std::span<const double> h) {
  Prediction out;
  out.logits = logits_of(head, h);
  out.probs = softmax(out.logits);
  out.fact = argmax(out.logits);
  return out;
}

std::string normalize_token(std::string_view token) {
  std::string out(token);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t j = i;
    while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
    if (j > i) out.emplace_back(text.substr(i, j - i));
    i = j;
  }
  return out;
}

BowEncoder::BowEncoder(std::vector<std::string> vocabulary, bool use_premise, std::optional<Mat> embedding)
    : vocabulary_(std::move(vocabulary)), use_premise_(use_premise), embedding_(std::move(embedding)) {
  for (std::size_t i = 0; i < vocabulary_.size(); ++i) {
    const auto& tok = vocabulary_[i];
    if (tok == kMaskToken) throw Error(ErrorKind::InvalidInput, "the mask token cannot be a vocabulary entry");
    if (!index_.emplace(tok, i).second) throw Error(ErrorKind::InvalidInput, "duplicate vocabulary entry '" + tok + "'");
  }
  if (embedding_) require_same_size(embedding_->rows(), feature_count(), "embedding rows vs features");
  if (dim() < 2) throw Error(ErrorKind::Shape, "encoder dimension must be at least 2");
}

BowEncoder BowEncoder::build(std::span<const Example> train, const Options& options) {
  std::set<std::string> tokens;
  for (const auto& ex : train) {
    for (const auto& t : ex.tokens) tokens.insert(normalize_token(t));
    if (options.use_premise)
      for (const auto& t : ex.premise) tokens.insert(normalize_token(t));
  }
  tokens.erase(std::string(kMaskToken));
  std::vector<std::string> vocab(tokens.begin(), tokens.end());

  std::optional<Mat> embedding;
  if (options.embedding_dim > 0) {
    Rng rng(options.seed, 0xE3BEDull);
    Mat e(vocab.size() + 1, options.embedding_dim);
    const double scale = 1.0 / std::sqrt(static_cast<double>(options.embedding_dim));
    for (double& x : e.data()) x = rng.normal() * scale;
    embedding = std::move(e);
  }
  return BowEncoder(std::move(vocab), options.use_premise, std::move(embedding));
}

std::size_t BowEncoder::feature_of(std::string_view token) const {
  auto it = index_.find(normalize_token(token));
  return it == index_.end() ? mask_index() : it->second;
}

bool BowEncoder::in_vocabulary(std::string_view token) const {
  return index_.find(normalize_token(token)) != index_.end();
}

void validate_spans(std::span<const TokenSpan> spans, std::size_t token_count) {
  std::vector<TokenSpan> sorted(spans.begin(), spans.end());
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const auto& s = sorted[i];
    if (s.begin >= s.end || s.end > token_count) {
      throw Error(ErrorKind::InvalidSpan, "span [" + std::to_string(s.begin) + "," + std::to_string(s.end) +
                                              ") outside " + std::to_string(token_count) + " tokens");
    }
    if (i > 0 && sorted[i - 1].end > s.begin) {
      throw Error(ErrorKind::InvalidSpan, "overlapping spans at token " + std::to_string(s.begin));
    }
  }
}

Vec BowEncoder::feature_counts(const Example& ex, std::span<const TokenSpan> masked) const {
  if (ex.tokens.empty()) throw Error(ErrorKind::InvalidInput, "example '" + ex.id + "' has no tokens");
  validate_spans(masked, ex.tokens.size());
  Vec counts(feature_count(), 0.0);
  std::vector<bool> is_masked(ex.tokens.size(), false);
  for (const auto& s : masked)
    for (std::size_t i = s.begin; i < s.end; ++i) is_masked[i] = true;

  double total = 0.0;
  for (std::size_t i = 0; i < ex.tokens.size(); ++i) {
    counts[is_masked[i] ? mask_index() : feature_of(ex.tokens[i])] += 1.0;
    total += 1.0;
  }
  if (use_premise_) {
    for (const auto& t : ex.premise) {
      counts[feature_of(t)] += 1.0;
      total += 1.0;
    }
  }
  for (double& c : counts) c /= total;
  return counts;
}

LatentRepr BowEncoder::encode(const Example& ex, std::span<const TokenSpan> masked) const {
  Vec counts = feature_counts(ex, masked);
  if (!embedding_) return {ex.id, std::move(counts)};
  return {ex.id, embedding_->multiply_transposed(counts)};
}

std::vector<LatentRepr> encode_all(const BowEncoder& encoder, std::span<const Example> dataset) {
  std::vector<LatentRepr> out;
  out.reserve(dataset.size());
  for (const auto& ex : dataset) out.push_back(encoder.encode(ex));
  return out;
}

}  // namespace cx
