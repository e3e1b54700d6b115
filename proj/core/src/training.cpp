#include <algorithm>
#include <cmath>

#include "cx/error.hpp"
#include "cx/model.hpp"

namespace cx {

void index_nonzeros(TrainingData& data) {
  data.nonzero.assign(data.x.rows(), {});
  for (std::size_t i = 0; i < data.x.rows(); ++i) {
    const auto row = data.x.row(i);
    for (std::size_t j = 0; j < row.size(); ++j)
      if (row[j] != 0.0) data.nonzero[i].push_back(j);
  }
}

TrainingData make_training_data(std::span<const LatentRepr> reprs, std::span<const std::size_t> labels) {
  require_same_size(reprs.size(), labels.size(), "representations vs labels");
  if (reprs.empty()) throw Error(ErrorKind::InvalidDataset, "no training examples");
  const std::size_t d = reprs.front().h.size();
  TrainingData data{Mat(reprs.size(), d), std::vector<std::size_t>(labels.begin(), labels.end()), {}};
  for (std::size_t i = 0; i < reprs.size(); ++i) {
    require_same_size(reprs[i].h.size(), d, "training representation");
    std::copy(reprs[i].h.begin(), reprs[i].h.end(), data.x.row(i).begin());
  }
  index_nonzeros(data);
  return data;
}

namespace {

// Per-example class scores z = W x + b written into `z`, visiting only `cols`.
void scores(const LogisticParams& params, std::span<const double> x, std::span<const std::size_t> cols,
            std::span<double> z) {
  const std::size_t k = params.W.rows();
  for (std::size_t c = 0; c < k; ++c) {
    const auto w = params.W.row(c);
    double acc = params.b[c];
    for (std::size_t j : cols) acc += w[j] * x[j];
    z[c] = acc;
  }
}

std::vector<std::size_t> all_columns(std::size_t d) {
  std::vector<std::size_t> cols(d);
  for (std::size_t j = 0; j < d; ++j) cols[j] = j;
  return cols;
}

double log_sum_exp(std::span<const double> z) {
  const double peak = *std::max_element(z.begin(), z.end());
  double s = 0.0;
  for (double v : z) s += std::exp(v - peak);
  return peak + std::log(s);
}

void check_shapes(const LogisticParams& params, const TrainingData& data) {
  if (!data.nonzero.empty()) require_same_size(data.nonzero.size(), data.x.rows(), "sparsity index vs rows");
  require_same_size(params.W.cols(), data.x.cols(), "weights vs features");
  require_same_size(params.b.size(), params.W.rows(), "bias vs classes");
  require_same_size(data.y.size(), data.x.rows(), "targets vs rows");
  for (std::size_t y : data.y)
    if (y >= params.W.rows()) throw Error(ErrorKind::InvalidDataset, "target class out of range");
}

}  // namespace

double logistic_loss(const LogisticParams& params, const TrainingData& data, double l2) {
  check_shapes(params, data);
  const std::size_t n = data.x.rows();
  Vec z(params.W.rows());
  const auto dense = all_columns(data.x.cols());
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    scores(params, data.x.row(i), data.nonzero.empty() ? dense : data.nonzero[i], z);
    total += log_sum_exp(z) - z[data.y[i]];
  }
  double reg = 0.0;
  for (double w : params.W.data()) reg += w * w;
  return total / static_cast<double>(n) + 0.5 * l2 * reg;
}

LogisticParams logistic_gradient(const LogisticParams& params, const TrainingData& data, double l2) {
  check_shapes(params, data);
  const std::size_t n = data.x.rows();
  const std::size_t k = params.W.rows();
  LogisticParams grad{Mat(k, params.W.cols()), Vec(k, 0.0)};
  Vec z(k);
  const double inv_n = 1.0 / static_cast<double>(n);
  const auto dense = all_columns(data.x.cols());
  for (std::size_t i = 0; i < n; ++i) {
    const auto x = data.x.row(i);
    const std::span<const std::size_t> cols = data.nonzero.empty() ? dense : data.nonzero[i];
    scores(params, x, cols, z);
    Vec p = softmax(z);
    p[data.y[i]] -= 1.0;
    for (std::size_t c = 0; c < k; ++c) {
      const double r = p[c] * inv_n;
      grad.b[c] += r;
      auto g = grad.W.row(c);
      for (std::size_t j : cols) g[j] += r * x[j];
    }
  }
  axpy(l2, params.W.data(), grad.W.data());
  return grad;
}

LinearHead train_logistic(const TrainingData& data, const EventSpace& space, const TrainConfig& config,
                          std::vector<double>* loss_trace) {
  if (space.size() < 2) throw Error(ErrorKind::InvalidDataset, "training needs at least two classes");
  std::vector<bool> present(space.size(), false);
  for (std::size_t y : data.y) {
    if (y >= space.size()) throw Error(ErrorKind::InvalidDataset, "target class out of range");
    present[y] = true;
  }
  if (std::count(present.begin(), present.end(), true) < 2) {
    throw Error(ErrorKind::InvalidDataset, "training data contains a single class");
  }
  if (!(config.lr > 0.0) || config.epochs < 0 || config.l2 < 0.0) {
    throw Error(ErrorKind::InvalidInput, "training config needs lr > 0, epochs >= 0, l2 >= 0");
  }

  LogisticParams params{Mat(space.size(), data.x.cols()), Vec(space.size(), 0.0)};
  if (loss_trace) loss_trace->clear();
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    if (loss_trace) loss_trace->push_back(logistic_loss(params, data, config.l2));
    const LogisticParams grad = logistic_gradient(params, data, config.l2);
    axpy(-config.lr, grad.W.data(), params.W.data());
    if (config.fit_bias) axpy(-config.lr, grad.b, params.b);
  }
  if (loss_trace) loss_trace->push_back(logistic_loss(params, data, config.l2));

  LinearHead head{std::move(params.W), std::nullopt, space};
  if (config.fit_bias) head.bias = std::move(params.b);
  head.validate();
  return head;
}

LinearHead train_logistic(std::span<const Example> dataset, const BowEncoder& encoder, const TrainConfig& config,
                          std::vector<double>* loss_trace) {
  const EventSpace space = event_space_of(dataset);
  const auto reprs = encode_all(encoder, dataset);
  std::vector<std::size_t> labels;
  labels.reserve(dataset.size());
  for (const auto& ex : dataset) labels.push_back(space.index_of(ex.label));
  return train_logistic(make_training_data(reprs, labels), space, config, loss_trace);
}

double accuracy(const LinearHead& head, std::span<const LatentRepr> reprs, std::span<const std::size_t> labels) {
  require_same_size(reprs.size(), labels.size(), "representations vs labels");
  if (reprs.empty()) return 0.0;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < reprs.size(); ++i)
    if (predict(head, reprs[i]).fact == labels[i]) ++correct;
  return static_cast<double>(correct) / static_cast<double>(reprs.size());
}

}  // namespace cx
