#include "cx/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "cx/error.hpp"

namespace cx {

Mat::Mat(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Mat::Mat(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    throw Error(ErrorKind::Shape, "matrix data length " + std::to_string(data_.size()) +
                                      " != " + std::to_string(rows_) + "x" + std::to_string(cols_));
  }
}

Mat Mat::identity(std::size_t n) {
  Mat m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Mat Mat::from_rows(const std::vector<Vec>& rows) {
  if (rows.empty()) return {};
  const std::size_t cols = rows.front().size();
  Mat m(rows.size(), cols);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    require_same_size(rows[r].size(), cols, "matrix row");
    std::copy(rows[r].begin(), rows[r].end(), m.row(r).begin());
  }
  return m;
}

std::span<const double> Mat::row(std::size_t r) const {
  return std::span<const double>(data_).subspan(r * cols_, cols_);
}

std::span<double> Mat::row(std::size_t r) {
  return std::span<double>(data_).subspan(r * cols_, cols_);
}

Vec Mat::multiply(std::span<const double> x) const {
  require_same_size(x.size(), cols_, "matrix-vector product");
  Vec y(rows_, 0.0);
  for (std::size_t r = 0; r < rows_; ++r) {
    const double* a = data_.data() + r * cols_;
    double acc = 0.0;
    for (std::size_t c = 0; c < cols_; ++c) acc += a[c] * x[c];
    y[r] = acc;
  }
  return y;
}

Vec Mat::multiply_transposed(std::span<const double> x) const {
  require_same_size(x.size(), rows_, "transposed matrix-vector product");
  Vec y(cols_, 0.0);
  for (std::size_t r = 0; r < rows_; ++r) {
    if (x[r] == 0.0) continue;
    const double* a = data_.data() + r * cols_;
    for (std::size_t c = 0; c < cols_; ++c) y[c] += a[c] * x[r];
  }
  return y;
}

Mat Mat::matmul(const Mat& other) const {
  require_same_size(cols_, other.rows_, "matrix product");
  Mat out(rows_, other.cols_);
  for (std::size_t i = 0; i < rows_; ++i) {
    for (std::size_t k = 0; k < cols_; ++k) {
      const double a = (*this)(i, k);
      if (a == 0.0) continue;
      for (std::size_t j = 0; j < other.cols_; ++j) out(i, j) += a * other(k, j);
    }
  }
  return out;
}

Mat Mat::transpose() const {
  Mat t(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
  return t;
}

bool all_finite(std::span<const double> v) noexcept {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

void require_same_size(std::size_t a, std::size_t b, std::string_view what) {
  if (a != b) {
    throw Error(ErrorKind::Shape, std::string(what) + ": dimension " + std::to_string(a) +
                                      " does not match " + std::to_string(b));
  }
}

double dot(std::span<const double> a, std::span<const double> b) {
  require_same_size(a.size(), b.size(), "dot product");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

double norm(std::span<const double> v) { return std::sqrt(dot(v, v)); }

double max_abs(std::span<const double> v) noexcept {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

Vec subtract(std::span<const double> a, std::span<const double> b) {
  require_same_size(a.size(), b.size(), "vector difference");
  Vec out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
  return out;
}

Vec scaled(std::span<const double> v, double s) {
  Vec out(v.begin(), v.end());
  for (double& x : out) x *= s;
  return out;
}

void axpy(double a, std::span<const double> x, std::span<double> y) {
  require_same_size(x.size(), y.size(), "axpy");
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += a * x[i];
}

Vec softmax(std::span<const double> logits) {
  if (logits.empty()) throw Error(ErrorKind::InvalidInput, "softmax of an empty vector");
  if (!all_finite(logits)) throw Error(ErrorKind::InvalidInput, "softmax of non-finite logits");
  const double peak = *std::max_element(logits.begin(), logits.end());
  Vec out(logits.size());
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - peak);
    total += out[i];
  }
  for (double& x : out) x /= total;
  return out;
}

Vec project_onto(std::span<const double> h, std::span<const double> u) {
  require_same_size(h.size(), u.size(), "projection");
  const double uu = dot(u, u);
  if (!(uu > tol::kDegenerateNormSq)) {
    throw Error(ErrorKind::DegenerateDirection, "projection onto a zero-norm direction");
  }
  return scaled(u, dot(u, h) / uu);
}

Mat projection_matrix(std::span<const double> u) {
  const double uu = dot(u, u);
  if (!(uu > tol::kDegenerateNormSq)) {
    throw Error(ErrorKind::DegenerateDirection, "projection matrix of a zero-norm direction");
  }
  Mat p(u.size(), u.size());
  for (std::size_t i = 0; i < u.size(); ++i)
    for (std::size_t j = 0; j < u.size(); ++j) p(i, j) = u[i] * u[j] / uu;
  return p;
}

namespace {

void require_distribution(std::span<const double> p, std::string_view name) {
  for (double x : p) {
    if (!(x > 0.0) || !std::isfinite(x)) {
      throw Error(ErrorKind::InvalidDistribution,
                  std::string(name) + " has a non-positive or non-finite entry");
    }
  }
}

}  // namespace

double kl_divergence(std::span<const double> p, std::span<const double> q) {
  require_same_size(p.size(), q.size(), "KL divergence");
  require_distribution(p, "p");
  require_distribution(q, "q");
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) acc += p[i] * std::log(p[i] / q[i]);
  return acc;
}

double sym_kl(std::span<const double> p, std::span<const double> q) {
  require_same_size(p.size(), q.size(), "symmetrized KL");
  require_distribution(p, "p");
  require_distribution(q, "q");
  // (p - q)(log p - log q) summed is the symmetrized divergence; each term is >= 0.
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) acc += (p[i] - q[i]) * (std::log(p[i]) - std::log(q[i]));
  return acc;
}

Vec clamp_probabilities(std::span<const double> p, double floor) {
  Vec out(p.begin(), p.end());
  for (double& x : out) x = std::max(x, floor);
  return out;
}

Vec solve_spd(const Mat& a, std::span<const double> b) {
  const std::size_t n = a.rows();
  require_same_size(a.cols(), n, "SPD solve (square)");
  require_same_size(b.size(), n, "SPD solve (rhs)");
  Mat l(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    double diag = a(j, j);
    for (std::size_t k = 0; k < j; ++k) diag -= l(j, k) * l(j, k);
    if (!(diag > 0.0)) throw Error(ErrorKind::InvalidInput, "matrix is not positive definite");
    l(j, j) = std::sqrt(diag);
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = a(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      l(i, j) = s / l(j, j);
    }
  }
  Vec y(n);
  for (std::size_t i = 0; i < n; ++i) {
    double s = b[i];
    for (std::size_t k = 0; k < i; ++k) s -= l(i, k) * y[k];
    y[i] = s / l(i, i);
  }
  Vec x(n);
  for (std::size_t i = n; i-- > 0;) {
    double s = y[i];
    for (std::size_t k = i + 1; k < n; ++k) s -= l(k, i) * x[k];
    x[i] = s / l(i, i);
  }
  return x;
}

}  // namespace cx
