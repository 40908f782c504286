#include "dtg/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dtg/errors.hpp"

namespace dtg {

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows * cols) {
    throw InvalidArgument("Matrix: data size " + std::to_string(data_.size()) + " != " +
                          std::to_string(rows) + "x" + std::to_string(cols));
  }
  if (!all_finite(data_)) {
    throw NumericError("Matrix: non-finite entry");
  }
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw InvalidArgument("dot: size mismatch");
  }
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm(std::span<const double> v) { return std::sqrt(dot(v, v)); }

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

Vector matvec(const Matrix& m, std::span<const double> x) {
  if (x.size() != m.cols()) {
    throw InvalidArgument("matvec: expected " + std::to_string(m.cols()) + " inputs, got " +
                          std::to_string(x.size()));
  }
  Vector y(m.rows(), 0.0);
  for (std::size_t r = 0; r < m.rows(); ++r) y[r] = dot(m.row(r), x);
  return y;
}

Vector matvec_transposed(const Matrix& m, std::span<const double> x) {
  if (x.size() != m.rows()) {
    throw InvalidArgument("matvec_transposed: size mismatch");
  }
  Vector y(m.cols(), 0.0);
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const auto row = m.row(r);
    for (std::size_t c = 0; c < m.cols(); ++c) y[c] += row[c] * x[r];
  }
  return y;
}

Matrix transpose(const Matrix& m) {
  Matrix t(m.cols(), m.rows());
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c) t(c, r) = m(r, c);
  return t;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw InvalidArgument("matmul: inner dimension mismatch");
  }
  Matrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      for (std::size_t j = 0; j < b.cols(); ++j) out(i, j) += aik * b(k, j);
    }
  return out;
}

namespace {

void require_finite_nonempty(std::span<const double> x, const char* what) {
  if (x.empty()) throw InvalidArgument(std::string(what) + ": empty input");
  if (!all_finite(x)) throw NumericError(std::string(what) + ": non-finite entry");
}

}  // namespace

Vector softmax(std::span<const double> logits) {
  require_finite_nonempty(logits, "softmax");
  const double mx = *std::max_element(logits.begin(), logits.end());
  Vector p(logits.size());
  double z = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    p[i] = std::exp(logits[i] - mx);
    z += p[i];
  }
  for (double& v : p) v /= z;
  return p;
}

double log_sum_exp(std::span<const double> x) {
  require_finite_nonempty(x, "log_sum_exp");
  const double mx = *std::max_element(x.begin(), x.end());
  double s = 0.0;
  for (double v : x) s += std::exp(v - mx);
  return mx + std::log(s);
}

Vector l2_normalize(std::span<const double> v, double epsilon) {
  if (!all_finite(v)) throw NumericError("l2_normalize: non-finite entry");
  const double n = norm(v);
  if (!(n > epsilon)) {
    throw DegenerateInput("l2_normalize: vector norm " + std::to_string(n) +
                          " is below epsilon");
  }
  Vector out(v.begin(), v.end());
  for (double& x : out) x /= n;
  return out;
}

Vector l2_normalize_backward(std::span<const double> u, std::span<const double> grad_out) {
  // d(u/|u|)/du = (I - y yᵀ) / |u|
  const double n = norm(u);
  Vector y(u.begin(), u.end());
  for (double& x : y) x /= n;
  const double proj = dot(y, grad_out);
  Vector g(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) g[i] = (grad_out[i] - proj * y[i]) / n;
  return g;
}

GradReport finite_diff_check(const ScalarFunction& f, std::span<const double> params,
                             std::span<const double> analytic_grads, double eps,
                             std::span<const std::string> names) {
  if (!(eps > 0.0)) throw InvalidArgument("finite_diff_check: eps must be positive");
  if (params.size() != analytic_grads.size()) {
    throw InvalidArgument("finite_diff_check: gradient size mismatch");
  }
  if (!names.empty() && names.size() != params.size()) {
    throw InvalidArgument("finite_diff_check: names size mismatch");
  }
  GradReport report;
  report.per_param_errors.reserve(params.size());
  Vector probe(params.begin(), params.end());
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double saved = probe[i];
    probe[i] = saved + eps;
    const double up = f(probe);
    probe[i] = saved - eps;
    const double down = f(probe);
    probe[i] = saved;
    if (!std::isfinite(up) || !std::isfinite(down)) {
      throw NumericError("finite_diff_check: function returned a non-finite value at coordinate " +
                         std::to_string(i));
    }
    const double fd = (up - down) / (2.0 * eps);
    const double an = analytic_grads[i];
    const double rel = std::abs(fd - an) / std::max({1.0, std::abs(fd), std::abs(an)});
    report.max_rel_error = std::max(report.max_rel_error, rel);
    report.per_param_errors.emplace_back(
        names.empty() ? "param[" + std::to_string(i) + "]" : names[i], rel);
  }
  return report;
}

}  // namespace dtg
