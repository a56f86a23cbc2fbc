#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string_view>
#include <vector>

namespace gradmine {

// Dense real vector.
struct Vec {
  std::vector<double> data;

  Vec() = default;
  explicit Vec(std::size_t n, double fill = 0.0) : data(n, fill) {}
  explicit Vec(std::vector<double> values) : data(std::move(values)) {}
  Vec(std::initializer_list<double> values) : data(values) {}

  std::size_t size() const noexcept { return data.size(); }
  double& operator[](std::size_t i) { return data[i]; }
  double operator[](std::size_t i) const { return data[i]; }

  operator std::span<const double>() const noexcept { return data; }
  std::span<double> span() noexcept { return data; }

  bool operator==(const Vec&) const = default;
};

// Dense row-major real matrix.
struct Mat {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Mat() = default;
  Mat(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}
  Mat(std::size_t r, std::size_t c, std::vector<double> values);
  Mat(std::initializer_list<std::initializer_list<double>> rows_init);

  static Mat identity(std::size_t n);

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

  std::span<double> row(std::size_t r) { return {data.data() + r * cols, cols}; }
  std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }

  bool operator==(const Mat&) const = default;
};

Mat matmul(const Mat& a, const Mat& b);
Mat transpose(const Mat& a);

// a * x and a^T * x.
Vec matvec(const Mat& a, std::span<const double> x);
Vec matvec_t(const Mat& a, std::span<const double> x);

// out += a * x ; out += a^T * x
void add_matvec(std::span<double> out, const Mat& a, std::span<const double> x);
void add_matvec_t(std::span<double> out, const Mat& a, std::span<const double> x);

// m += scale * u v^T
void add_outer(Mat& m, std::span<const double> u, std::span<const double> v, double scale = 1.0);

// y += alpha * x
void axpy(std::span<double> y, double alpha, std::span<const double> x);

double dot(std::span<const double> a, std::span<const double> b);

double sigmoid(double x);
Vec sigmoid(const Vec& v);
Vec tanh(const Vec& v);
// Max-subtracted for stability; sums to one for any finite input.
Vec softmax(const Vec& v);

bool all_finite(std::span<const double> values);

enum class NormKind { frobenius, spectral };

NormKind parse_norm_kind(std::string_view name);
std::string_view to_string(NormKind kind);

double frobenius_norm(std::span<const double> values);
double frobenius_norm(const Mat& m);
// Largest singular value by power iteration on A^T A.
double spectral_norm(const Mat& m, int max_iter = 100, double tol = 1e-10);
double matrix_norm(const Mat& m, NormKind kind);

}  // namespace gradmine
