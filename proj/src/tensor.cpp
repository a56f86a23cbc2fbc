#include "gradmine/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "gradmine/error.hpp"
#include "gradmine/rng.hpp"

namespace gradmine {

namespace {

std::string shape_str(std::size_t r, std::size_t c) {
  return std::to_string(r) + "x" + std::to_string(c);
}

}  // namespace

Mat::Mat(std::size_t r, std::size_t c, std::vector<double> values)
    : rows(r), cols(c), data(std::move(values)) {
  if (data.size() != r * c) {
    throw InvalidShape("matrix " + shape_str(r, c) + " given " + std::to_string(data.size()) +
                       " values");
  }
}

Mat::Mat(std::initializer_list<std::initializer_list<double>> rows_init) {
  rows = rows_init.size();
  cols = rows == 0 ? 0 : rows_init.begin()->size();
  data.reserve(rows * cols);
  for (const auto& r : rows_init) {
    if (r.size() != cols) throw InvalidShape("ragged matrix initializer");
    data.insert(data.end(), r.begin(), r.end());
  }
}

Mat Mat::identity(std::size_t n) {
  Mat m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Mat matmul(const Mat& a, const Mat& b) {
  if (a.cols != b.rows) {
    throw InvalidShape("matmul " + shape_str(a.rows, a.cols) + " by " + shape_str(b.rows, b.cols));
  }
  Mat out(a.rows, b.cols);
  for (std::size_t i = 0; i < a.rows; ++i) {
    auto orow = out.row(i);
    for (std::size_t k = 0; k < a.cols; ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      axpy(orow, aik, b.row(k));
    }
  }
  return out;
}

Mat transpose(const Mat& a) {
  Mat t(a.cols, a.rows);
  for (std::size_t i = 0; i < a.rows; ++i)
    for (std::size_t j = 0; j < a.cols; ++j) t(j, i) = a(i, j);
  return t;
}

Vec matvec(const Mat& a, std::span<const double> x) {
  Vec out(a.rows);
  add_matvec(out.span(), a, x);
  return out;
}

Vec matvec_t(const Mat& a, std::span<const double> x) {
  Vec out(a.cols);
  add_matvec_t(out.span(), a, x);
  return out;
}

void add_matvec(std::span<double> out, const Mat& a, std::span<const double> x) {
  if (a.cols != x.size() || a.rows != out.size()) {
    throw InvalidShape("matvec " + shape_str(a.rows, a.cols) + " by vector of " +
                       std::to_string(x.size()));
  }
  for (std::size_t i = 0; i < a.rows; ++i) out[i] += dot(a.row(i), x);
}

void add_matvec_t(std::span<double> out, const Mat& a, std::span<const double> x) {
  if (a.rows != x.size() || a.cols != out.size()) {
    throw InvalidShape("transposed matvec " + shape_str(a.rows, a.cols) + " by vector of " +
                       std::to_string(x.size()));
  }
  for (std::size_t i = 0; i < a.rows; ++i) axpy(out, x[i], a.row(i));
}

void add_outer(Mat& m, std::span<const double> u, std::span<const double> v, double scale) {
  if (m.rows != u.size() || m.cols != v.size()) {
    throw InvalidShape("outer product into " + shape_str(m.rows, m.cols));
  }
  for (std::size_t i = 0; i < m.rows; ++i) axpy(m.row(i), scale * u[i], v);
}

void axpy(std::span<double> y, double alpha, std::span<const double> x) {
  if (y.size() != x.size()) throw InvalidShape("axpy length mismatch");
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += alpha * x[i];
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw InvalidShape("dot length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Vec sigmoid(const Vec& v) {
  Vec out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = sigmoid(v[i]);
  return out;
}

Vec tanh(const Vec& v) {
  Vec out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = std::tanh(v[i]);
  return out;
}

Vec softmax(const Vec& v) {
  Vec out(v.size());
  if (v.size() == 0) return out;
  const double m = *std::max_element(v.data.begin(), v.data.end());
  double sum = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    out[i] = std::exp(v[i] - m);
    sum += out[i];
  }
  for (auto& x : out.data) x /= sum;
  return out;
}

bool all_finite(std::span<const double> values) {
  return std::all_of(values.begin(), values.end(), [](double x) { return std::isfinite(x); });
}

NormKind parse_norm_kind(std::string_view name) {
  if (name == "frobenius") return NormKind::frobenius;
  if (name == "spectral") return NormKind::spectral;
  throw ConfigError("unknown norm kind '" + std::string(name) + "'");
}

std::string_view to_string(NormKind kind) {
  return kind == NormKind::frobenius ? "frobenius" : "spectral";
}

double frobenius_norm(std::span<const double> values) {
  double s = 0.0;
  for (double x : values) s += x * x;
  return std::sqrt(s);
}

double frobenius_norm(const Mat& m) { return frobenius_norm(m.data); }

double spectral_norm(const Mat& m, int max_iter, double tol) {
  if (m.data.empty() || frobenius_norm(m) == 0.0) return 0.0;
  // Fixed pseudo-random start keeps the result deterministic.
  Rng rng(0x5eedULL);
  Vec v(m.cols);
  for (auto& x : v.data) x = uniform01(rng) + 0.5;
  double sigma = 0.0;
  for (int it = 0; it < max_iter; ++it) {
    const double vn = frobenius_norm(v.data);
    for (auto& x : v.data) x /= vn;
    Vec u = matvec(m, v);
    const double next = frobenius_norm(u.data);
    v = matvec_t(m, u);
    if (std::abs(next - sigma) <= tol * std::max(1.0, next)) {
      sigma = next;
      break;
    }
    sigma = next;
    if (frobenius_norm(v.data) == 0.0) break;
  }
  return sigma;
}

double matrix_norm(const Mat& m, NormKind kind) {
  return kind == NormKind::frobenius ? frobenius_norm(m) : spectral_norm(m);
}

}  // namespace gradmine
