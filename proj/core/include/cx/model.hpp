#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cx/numerics.hpp"

namespace cx {

/// Ordered, duplicate-free set of class names. Position i indexes row i of W.
class EventSpace {
 public:
  EventSpace() = default;
  explicit EventSpace(std::vector<std::string> classes);

  /// Sorted unique labels of a dataset.
  static EventSpace from_labels(std::span<const std::string> labels);

  std::size_t size() const noexcept { return classes_.size(); }
  const std::vector<std::string>& classes() const noexcept { return classes_; }
  const std::string& name(std::size_t i) const { return classes_.at(i); }
  bool contains(std::string_view name) const noexcept;
  /// Throws invalid-dataset for unknown names.
  std::size_t index_of(std::string_view name) const;

  friend bool operator==(const EventSpace&, const EventSpace&) = default;

 private:
  std::vector<std::string> classes_;
};

struct Example {
  std::string id;
  /// The text that highlights index into (the hypothesis for paired-text tasks).
  std::vector<std::string> tokens;
  std::string label;
  /// Optional context segment (e.g. an NLI premise); encoded, never masked.
  std::vector<std::string> premise;
  std::map<std::string, int> concept_labels;
  std::optional<std::string> counterfactual_of;
};

EventSpace event_space_of(std::span<const Example> dataset);

/// Half-open token range [begin, end).
struct TokenSpan {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t length() const noexcept { return end - begin; }
  friend auto operator<=>(const TokenSpan&, const TokenSpan&) = default;
};

std::string span_text(const Example& ex, const TokenSpan& span);

struct LinearHead {
  Mat W;
  std::optional<Vec> bias;
  EventSpace event_space;

  std::size_t num_classes() const noexcept { return W.rows(); }
  std::size_t dim() const noexcept { return W.cols(); }

  /// Throws shape errors when W, bias and the event space disagree.
  void validate() const;
};

struct LatentRepr {
  std::string example_id;
  Vec h;
};

struct Prediction {
  Vec logits;
  Vec probs;
  std::size_t fact = 0;
};

Vec logits_of(const LinearHead& head, std::span<const double> h);
/// Argmax with ties resolved to the lowest class index.
std::size_t argmax(std::span<const double> v);
Prediction predict(const LinearHead& head, std::span<const double> h);
inline Prediction predict(const LinearHead& head, const LatentRepr& r) { return predict(head, r.h); }

/// Whitespace split. Case is kept; the encoder lowercases features.
std::vector<std::string> tokenize(std::string_view text);
std::string normalize_token(std::string_view token);

/// Bag-of-features encoder. Features are the training vocabulary plus one
/// reserved slot shared by masked and out-of-vocabulary tokens. Counts are
/// L1-normalized; an optional embedding maps them to a dense space.
class BowEncoder {
 public:
  static constexpr std::string_view kMaskToken = "<mask>";

  struct Options {
    /// 0 keeps the identity encoding (d = |vocab| + 1).
    std::size_t embedding_dim = 0;
    std::uint64_t seed = 0;
    bool use_premise = true;
  };

  BowEncoder() = default;
  BowEncoder(std::vector<std::string> vocabulary, bool use_premise, std::optional<Mat> embedding = std::nullopt);

  /// Vocabulary = normalized tokens of `train` (premise included when used).
  static BowEncoder build(std::span<const Example> train, const Options& options);

  std::size_t feature_count() const noexcept { return vocabulary_.size() + 1; }
  std::size_t mask_index() const noexcept { return vocabulary_.size(); }
  std::size_t dim() const noexcept { return embedding_ ? embedding_->cols() : feature_count(); }
  bool use_premise() const noexcept { return use_premise_; }
  const std::vector<std::string>& vocabulary() const noexcept { return vocabulary_; }
  const std::optional<Mat>& embedding() const noexcept { return embedding_; }

  /// Feature slot of a token; OOV and the mask token map to mask_index().
  std::size_t feature_of(std::string_view token) const;
  bool in_vocabulary(std::string_view token) const;

  /// L1-normalized feature counts before any embedding.
  Vec feature_counts(const Example& ex, std::span<const TokenSpan> masked = {}) const;
  LatentRepr encode(const Example& ex, std::span<const TokenSpan> masked = {}) const;

 private:
  std::vector<std::string> vocabulary_;
  std::map<std::string, std::size_t, std::less<>> index_;
  bool use_premise_ = true;
  std::optional<Mat> embedding_;
};

/// Throws invalid-span when spans overlap or leave the token range.
void validate_spans(std::span<const TokenSpan> spans, std::size_t token_count);

std::vector<LatentRepr> encode_all(const BowEncoder& encoder, std::span<const Example> dataset);

struct TrainConfig {
  double lr = 2.0;
  int epochs = 300;
  double l2 = 1e-4;
  std::uint64_t seed = 0;
  bool fit_bias = true;
};

/// Design matrix with integer class targets, as consumed by the trainer.
struct TrainingData {
  Mat x;
  std::vector<std::size_t> y;
  /// Column indices of the non-zero entries of each row.
  std::vector<std::vector<std::size_t>> nonzero;
};

TrainingData make_training_data(std::span<const LatentRepr> reprs, std::span<const std::size_t> labels);
/// Rebuilds `nonzero` from `x`.
void index_nonzeros(TrainingData& data);

struct LogisticParams {
  Mat W;
  Vec b;
};

/// Mean cross-entropy + (l2/2)‖W‖². Bias is not regularized.
double logistic_loss(const LogisticParams& params, const TrainingData& data, double l2);
LogisticParams logistic_gradient(const LogisticParams& params, const TrainingData& data, double l2);

/// Multinomial logistic regression, full-batch gradient descent from zero
/// weights. `loss_trace`, when given, receives the loss before each epoch and
/// after the last.
LinearHead train_logistic(std::span<const Example> dataset, const BowEncoder& encoder,
                          const TrainConfig& config, std::vector<double>* loss_trace = nullptr);

/// Same trainer over precomputed representations.
LinearHead train_logistic(const TrainingData& data, const EventSpace& space, const TrainConfig& config,
                          std::vector<double>* loss_trace = nullptr);

double accuracy(const LinearHead& head, std::span<const LatentRepr> reprs, std::span<const std::size_t> labels);

}  // namespace cx
