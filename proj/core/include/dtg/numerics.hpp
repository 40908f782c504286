#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace dtg {

using Vector = std::vector<double>;

/// Dense row-major matrix of doubles. Dimensions are fixed at construction.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const noexcept { return {data_.data() + r * cols_, cols_}; }

  std::span<const double> data() const noexcept { return data_; }
  std::span<double> data() noexcept { return data_; }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

inline constexpr double kDefaultNormEpsilon = 1e-12;

double dot(std::span<const double> a, std::span<const double> b);
double norm(std::span<const double> v);
bool all_finite(std::span<const double> v);

/// y = M x
Vector matvec(const Matrix& m, std::span<const double> x);
/// y = Mᵀ x
Vector matvec_transposed(const Matrix& m, std::span<const double> x);
Matrix transpose(const Matrix& m);
Matrix matmul(const Matrix& a, const Matrix& b);

/// Numerically stable softmax (max-subtracted). Throws on empty or non-finite input.
Vector softmax(std::span<const double> logits);

/// log(sum(exp(x))) computed with max subtraction.
double log_sum_exp(std::span<const double> x);

/// Returns v / ‖v‖. Throws DegenerateInput when ‖v‖ <= epsilon.
Vector l2_normalize(std::span<const double> v, double epsilon = kDefaultNormEpsilon);

/// Backward rule of l2_normalize: given u and dL/d(u/‖u‖), returns dL/du.
Vector l2_normalize_backward(std::span<const double> u, std::span<const double> grad_out);

struct GradReport {
  double max_rel_error = 0.0;
  std::vector<std::pair<std::string, double>> per_param_errors;
};

using ScalarFunction = std::function<double(std::span<const double>)>;

/// Compares analytic gradients against central differences.
///
/// The relative error per coordinate is |fd - an| / max(1, |fd|, |an|). When
/// `names` is empty coordinates are reported as "param[i]".
GradReport finite_diff_check(const ScalarFunction& f, std::span<const double> params,
                             std::span<const double> analytic_grads, double eps = 1e-5,
                             std::span<const std::string> names = {});

}  // namespace dtg
