#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace cx {

namespace tol {
inline constexpr double kEqual = 1e-9;
inline constexpr double kProjection = 1e-10;
/// Floor applied to probabilities before logs on the intervention path.
inline constexpr double kProbabilityFloor = 1e-12;
/// Squared norm below which a contrastive direction is considered zero.
inline constexpr double kDegenerateNormSq = 1e-18;
}  // namespace tol

using Vec = std::vector<double>;

/// Dense row-major matrix of doubles.
class Mat {
 public:
  Mat() = default;
  Mat(std::size_t rows, std::size_t cols, double fill = 0.0);
  Mat(std::size_t rows, std::size_t cols, std::vector<double> data);

  static Mat identity(std::size_t n);
  static Mat from_rows(const std::vector<Vec>& rows);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

  std::span<const double> row(std::size_t r) const;
  std::span<double> row(std::size_t r);

  std::span<const double> data() const noexcept { return data_; }
  std::span<double> data() noexcept { return data_; }

  /// y = M x
  Vec multiply(std::span<const double> x) const;
  /// y = Mᵀ x
  Vec multiply_transposed(std::span<const double> x) const;
  Mat matmul(const Mat& other) const;
  Mat transpose() const;

  friend bool operator==(const Mat&, const Mat&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

bool all_finite(std::span<const double> v) noexcept;

/// Throws a shape error naming `what` when the sizes differ.
void require_same_size(std::size_t a, std::size_t b, std::string_view what);

double dot(std::span<const double> a, std::span<const double> b);
double norm(std::span<const double> v);
double max_abs(std::span<const double> v) noexcept;
Vec subtract(std::span<const double> a, std::span<const double> b);
Vec scaled(std::span<const double> v, double s);
/// y += a x
void axpy(double a, std::span<const double> x, std::span<double> y);

/// Max-subtracted softmax. Throws invalid-input on non-finite logits.
Vec softmax(std::span<const double> logits);

/// (u·h / u·u) u. Throws degenerate-direction when u is zero.
Vec project_onto(std::span<const double> h, std::span<const double> u);

/// Materialized uuᵀ/uᵀu. Only used where the explicit matrix is the point.
Mat projection_matrix(std::span<const double> u);

double kl_divergence(std::span<const double> p, std::span<const double> q);

/// D(p‖q) + D(q‖p). Inputs must be strictly positive and of equal length;
/// callers handling raw softmax output should go through clamp_probabilities.
double sym_kl(std::span<const double> p, std::span<const double> q);

/// Entry-wise max(p_i, floor). Does not renormalize.
Vec clamp_probabilities(std::span<const double> p, double floor = tol::kProbabilityFloor);

/// Solves A x = b for symmetric positive definite A via Cholesky.
Vec solve_spd(const Mat& a, std::span<const double> b);

}  // namespace cx
