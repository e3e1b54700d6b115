#include "cx/amnesic.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "cx/error.hpp"
#include "cx/rng.hpp"
#include <nlohmann/json.hpp>

namespace cx {

namespace {

double log1p_exp(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

struct ProbeData {
  std::vector<const double*> rows;
  std::vector<double> y;
  std::size_t dim = 0;
};

// Mean logistic loss with the intercept stored at params[dim].
double probe_loss(const ProbeData& data, std::span<const double> params, double l2) {
  double total = 0.0;
  for (std::size_t i = 0; i < data.rows.size(); ++i) {
    double z = params[data.dim];
    for (std::size_t j = 0; j < data.dim; ++j) z += params[j] * data.rows[i][j];
    total += log1p_exp(z) - data.y[i] * z;
  }
  double reg = 0.0;
  for (std::size_t j = 0; j < data.dim; ++j) reg += params[j] * params[j];
  return total / static_cast<double>(data.rows.size()) + 0.5 * l2 * reg;
}

Vec fit_probe(const ProbeData& data, const ProbeConfig& config) {
  const std::size_t d = data.dim;
  const std::size_t m = d + 1;
  const double inv_n = 1.0 / static_cast<double>(data.rows.size());
  Vec params(m, 0.0);
  double loss = probe_loss(data, params, config.l2);

  for (int step = 0; step < config.max_newton_steps; ++step) {
    Vec grad(m, 0.0);
    Mat hess(m, m);
    for (std::size_t i = 0; i < data.rows.size(); ++i) {
      const double* x = data.rows[i];
      double z = params[d];
      for (std::size_t j = 0; j < d; ++j) z += params[j] * x[j];
      const double p = sigmoid(z);
      const double r = (p - data.y[i]) * inv_n;
      const double w = p * (1.0 - p) * inv_n;
      for (std::size_t a = 0; a < d; ++a) {
        grad[a] += r * x[a];
        if (x[a] == 0.0) continue;
        const double wa = w * x[a];
        for (std::size_t b = a; b < d; ++b) hess(a, b) += wa * x[b];
        hess(a, d) += wa;
      }
      grad[d] += r;
      hess(d, d) += w;
    }
    for (std::size_t a = 0; a < d; ++a) {
      grad[a] += config.l2 * params[a];
      hess(a, a) += config.l2;
    }
    hess(d, d) += 1e-12;
    for (std::size_t a = 0; a < m; ++a)
      for (std::size_t b = 0; b < a; ++b) hess(a, b) = hess(b, a);

    const Vec newton = solve_spd(hess, grad);
    // Backtracking on the Newton direction keeps every step a descent step.
    double t = 1.0;
    Vec trial(m);
    double trial_loss = loss;
    const double slope = dot(grad, newton);
    for (int k = 0; k < 40; ++k) {
      for (std::size_t a = 0; a < m; ++a) trial[a] = params[a] - t * newton[a];
      trial_loss = probe_loss(data, trial, config.l2);
      if (trial_loss <= loss - 1e-4 * t * slope) break;
      t *= 0.5;
    }
    if (!(trial_loss < loss)) break;
    params = trial;
    const double moved = t * max_abs(newton);
    loss = trial_loss;
    if (moved < 1e-10 * std::max(1.0, max_abs(params))) break;
  }
  return params;
}

}  // namespace

std::vector<bool> dev_split(std::span<const LatentRepr> reprs, double dev_fraction, std::uint64_t seed) {
  const std::size_t n = reprs.size();
  std::vector<std::pair<std::uint64_t, std::size_t>> keys(n);
  for (std::size_t i = 0; i < n; ++i) keys[i] = {splitmix64(fnv1a64(reprs[i].example_id) ^ splitmix64(seed)), i};
  std::sort(keys.begin(), keys.end());
  const auto dev_count = static_cast<std::size_t>(std::llround(dev_fraction * static_cast<double>(n)));
  std::vector<bool> is_dev(n, false);
  for (std::size_t k = 0; k < std::min(dev_count, n); ++k) is_dev[keys[k].second] = true;
  return is_dev;
}

ProbeResult train_probe(std::span<const LatentRepr> reprs, std::span<const int> labels, const ProbeConfig& config) {
  require_same_size(reprs.size(), labels.size(), "probe representations vs labels");
  if (reprs.empty()) throw Error(ErrorKind::InvalidConcept, "no examples to train a probe on");
  if (!(config.dev_fraction > 0.0 && config.dev_fraction < 1.0)) {
    throw Error(ErrorKind::InvalidInput, "dev fraction must lie in (0, 1)");
  }
  const std::size_t d = reprs.front().h.size();
  for (std::size_t i = 0; i < reprs.size(); ++i) {
    require_same_size(reprs[i].h.size(), d, "probe representation");
    if (labels[i] != 0 && labels[i] != 1) throw Error(ErrorKind::InvalidConcept, "concept labels must be 0 or 1");
  }

  const auto is_dev = dev_split(reprs, config.dev_fraction, config.seed);
  ProbeData train;
  train.dim = d;
  std::vector<std::size_t> dev;
  for (std::size_t i = 0; i < reprs.size(); ++i) {
    if (is_dev[i]) {
      dev.push_back(i);
    } else {
      train.rows.push_back(reprs[i].h.data());
      train.y.push_back(static_cast<double>(labels[i]));
    }
  }
  const auto positives = std::count(train.y.begin(), train.y.end(), 1.0);
  if (positives == 0 || positives == static_cast<std::ptrdiff_t>(train.y.size())) {
    throw Error(ErrorKind::InvalidConcept, "concept labels are single-valued on the training split");
  }
  if (dev.empty()) throw Error(ErrorKind::InvalidConcept, "dev split is empty");

  const Vec params = fit_probe(train, config);
  ProbeResult result;
  result.weight.assign(params.begin(), params.begin() + static_cast<std::ptrdiff_t>(d));
  result.intercept = params[d];
  result.train_size = train.rows.size();
  result.dev_size = dev.size();

  std::size_t correct = 0;
  std::size_t dev_positive = 0;
  for (std::size_t i : dev) {
    const double z = dot(result.weight, reprs[i].h) + result.intercept;
    const int predicted = z > 0.0 ? 1 : 0;
    if (predicted == labels[i]) ++correct;
    if (labels[i] == 1) ++dev_positive;
  }
  const double n_dev = static_cast<double>(dev.size());
  result.dev_accuracy = static_cast<double>(correct) / n_dev;
  result.majority_baseline =
      static_cast<double>(std::max(dev_positive, dev.size() - dev_positive)) / n_dev;
  return result;
}

Mat nullspace_projection(std::span<const Vec> directions, std::size_t dim) {
  Mat p = Mat::identity(dim);
  for (const auto& v : directions) {
    require_same_size(v.size(), dim, "removed direction");
    for (std::size_t i = 0; i < dim; ++i)
      for (std::size_t j = 0; j < dim; ++j) p(i, j) -= v[i] * v[j];
  }
  return p;
}

ProjectionStack inlp(std::span<const LatentRepr> reprs, std::span<const int> labels, std::string concept_name,
                     const InlpConfig& config) {
  if (reprs.empty()) throw Error(ErrorKind::InvalidConcept, "no representations for concept '" + concept_name + "'");
  if (config.max_iters < 0 || config.epsilon < 0.0) throw Error(ErrorKind::InvalidInput, "bad INLP config");
  const std::size_t d = reprs.front().h.size();

  ProjectionStack stack;
  stack.concept_name = std::move(concept_name);
  stack.config = config;
  std::vector<LatentRepr> current(reprs.begin(), reprs.end());

  for (;;) {
    const ProbeResult probe = train_probe(current, labels, config.probe);
    stack.accuracy_trace.push_back(probe.dev_accuracy);
    stack.final_probe_accuracy = probe.dev_accuracy;
    stack.majority_baseline = probe.majority_baseline;
    if (probe.dev_accuracy <= probe.majority_baseline + config.epsilon) {
      stack.converged = true;
      break;
    }
    if (stack.directions.size() >= static_cast<std::size_t>(config.max_iters)) break;

    Vec v = probe.weight;
    // Two Gram-Schmidt passes against the removed set.
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& prev : stack.directions) axpy(-dot(prev, v), prev, v);
    const double len = norm(v);
    if (!(len > 1e-12)) break;
    for (double& x : v) x /= len;

    for (auto& r : current) axpy(-dot(v, r.h), v, r.h);
    stack.directions.push_back(std::move(v));
  }
  stack.iterations = static_cast<int>(stack.directions.size());
  stack.projection = nullspace_projection(stack.directions, d);
  return stack;
}

Vec apply_amnesic(const ProjectionStack& stack, std::span<const double> h) {
  require_same_size(h.size(), stack.dim(), "representation vs amnesic projection");
  return stack.projection.multiply(h);
}

LatentRepr apply_amnesic(const ProjectionStack& stack, const LatentRepr& h) {
  return {h.example_id, apply_amnesic(stack, h.h)};
}

const char* to_string(ConceptSign sign) noexcept {
  switch (sign) {
    case ConceptSign::Positive: return "+";
    case ConceptSign::Negative: return "−";
    case ConceptSign::Indeterminate: return "±0";
  }
  return "?";
}

ConceptVector concept_vector(const ProjectionStack& stack) {
  if (stack.directions.empty()) {
    throw Error(ErrorKind::NoConcept, "stack for '" + stack.concept_name + "' removed no directions");
  }
  return {stack.directions.front()};
}

ConceptSign concept_sign(const ConceptVector& cv, const ContrastiveDirection& dir) {
  const double c = dot(cv.r, dir.u);
  if (std::abs(c) < 1e-12) return ConceptSign::Indeterminate;
  return c > 0 ? ConceptSign::Positive : ConceptSign::Negative;
}

using nlohmann::json;

std::string stack_to_json(const ProjectionStack& stack) {
  json j{{"format", "cx-stack"},
         {"version", 1},
         {"concept", stack.concept_name},
         {"dim", stack.dim()},
         {"directions", stack.directions},
         {"iterations", stack.iterations},
         {"final_probe_accuracy", stack.final_probe_accuracy},
         {"majority_baseline", stack.majority_baseline},
         {"converged", stack.converged},
         {"accuracy_trace", stack.accuracy_trace},
         {"config",
          {{"epsilon", stack.config.epsilon},
           {"max_iters", stack.config.max_iters},
           {"l2", stack.config.probe.l2},
           {"dev_fraction", stack.config.probe.dev_fraction},
           {"max_newton_steps", stack.config.probe.max_newton_steps},
           {"seed", stack.config.probe.seed}}}};
  return j.dump(2);
}

ProjectionStack stack_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::Parse, std::string("stack file: ") + e.what());
  }
  try {
    if (j.at("format").get<std::string>() != "cx-stack") throw Error(ErrorKind::Parse, "stack file: wrong format");
    ProjectionStack s;
    s.concept_name = j.at("concept").get<std::string>();
    const auto dim = j.at("dim").get<std::size_t>();
    s.directions = j.at("directions").get<std::vector<Vec>>();
    s.iterations = j.at("iterations").get<int>();
    s.final_probe_accuracy = j.at("final_probe_accuracy").get<double>();
    s.majority_baseline = j.at("majority_baseline").get<double>();
    s.converged = j.at("converged").get<bool>();
    s.accuracy_trace = j.at("accuracy_trace").get<std::vector<double>>();
    const auto& c = j.at("config");
    s.config.epsilon = c.at("epsilon").get<double>();
    s.config.max_iters = c.at("max_iters").get<int>();
    s.config.probe.l2 = c.at("l2").get<double>();
    s.config.probe.dev_fraction = c.at("dev_fraction").get<double>();
    s.config.probe.max_newton_steps = c.at("max_newton_steps").get<int>();
    s.config.probe.seed = c.at("seed").get<std::uint64_t>();
    if (s.iterations != static_cast<int>(s.directions.size())) {
      throw Error(ErrorKind::Parse, "stack file: iterations does not match direction count");
    }
    s.projection = nullspace_projection(s.directions, dim);
    return s;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Parse, std::string("stack file: ") + e.what());
  }
}

void save_stack(const std::filesystem::path& path, const ProjectionStack& stack) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::InvalidInput, "cannot write " + path.string());
  out << stack_to_json(stack) << '\n';
}

ProjectionStack load_stack(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Parse, "cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return stack_from_json(ss.str());
}

}  // namespace cx
