#include <doctest.h>

#include <cmath>

#include "gradmine/error.hpp"
#include "gradmine/tensor.hpp"
#include "support.hpp"

using namespace gradmine;

namespace {

Mat random_mat(std::size_t r, std::size_t c, Rng& rng) {
  Mat m(r, c);
  testing::fill_uniform(m.data, 1.0, rng);
  return m;
}

// Triple loop, written independently of matmul.
Mat naive_product(const Mat& a, const Mat& b) {
  Mat out(a.rows, b.cols);
  for (std::size_t i = 0; i < a.rows; ++i)
    for (std::size_t j = 0; j < b.cols; ++j) {
      double s = 0;
      for (std::size_t k = 0; k < a.cols; ++k) s += a.data[i * a.cols + k] * b.data[k * b.cols + j];
      out.data[i * b.cols + j] = s;
    }
  return out;
}

}  // namespace

TEST_CASE("matmul: identity, zero and hand-computed product") {
  Rng rng(1);
  const Mat a = random_mat(3, 4, rng);
  CHECK(matmul(Mat::identity(3), a) == a);
  CHECK(matmul(Mat(2, 3), a) == Mat(2, 4));
  CHECK(matmul(Mat{{1, 2}, {3, 4}}, Mat{{1}, {1}}) == Mat{{3}, {7}});
}

TEST_CASE("matmul rejects mismatched shapes") {
  CHECK_THROWS_AS(matmul(Mat(2, 3), Mat(2, 3)), InvalidShape);
  CHECK_THROWS_AS(Mat(2, 2, std::vector<double>{1, 2, 3}), InvalidShape);
}

TEST_CASE("matmul matches a triple-loop oracle and is associative") {
  Rng rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t m = 1 + uniform_index(rng, 6), k = 1 + uniform_index(rng, 6),
                      n = 1 + uniform_index(rng, 6), q = 1 + uniform_index(rng, 6);
    const Mat a = random_mat(m, k, rng), b = random_mat(k, n, rng), c = random_mat(n, q, rng);
    const Mat ab = matmul(a, b);
    const Mat oracle = naive_product(a, b);
    for (std::size_t i = 0; i < ab.data.size(); ++i) CHECK(ab.data[i] == doctest::Approx(oracle.data[i]).epsilon(1e-14));
    const Mat left = matmul(ab, c), right = matmul(a, matmul(b, c));
    for (std::size_t i = 0; i < left.data.size(); ++i) {
      CHECK(std::abs(left.data[i] - right.data[i]) <= 1e-9 * std::max(1.0, std::abs(right.data[i])));
    }
  }
}

TEST_CASE("matvec, transposed matvec and outer-product accumulation agree with matmul") {
  Rng rng(3);
  const Mat a = random_mat(4, 3, rng);
  Vec x(3), y(4);
  testing::fill_uniform(x.data, 1.0, rng);
  testing::fill_uniform(y.data, 1.0, rng);
  const Mat ax = matmul(a, Mat(3, 1, x.data));
  const Vec got = matvec(a, x);
  for (std::size_t i = 0; i < 4; ++i) CHECK(got[i] == doctest::Approx(ax.data[i]).epsilon(1e-14));
  const Mat aty = matmul(transpose(a), Mat(4, 1, y.data));
  const Vec got_t = matvec_t(a, y);
  for (std::size_t i = 0; i < 3; ++i) CHECK(got_t[i] == doctest::Approx(aty.data[i]).epsilon(1e-14));

  Mat m(4, 3);
  add_outer(m, y, x, 2.0);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 3; ++j) CHECK(m(i, j) == 2.0 * y[i] * x[j]);
  CHECK_THROWS_AS(matvec(a, y), InvalidShape);
}

TEST_CASE("softmax, sigmoid and tanh") {
  const Vec u = softmax(Vec{0, 0, 0});
  for (double p : u.data) CHECK(p == doctest::Approx(1.0 / 3).epsilon(1e-15));
  const Vec big = softmax(Vec{1000, 0});
  CHECK(big[0] == 1.0);
  CHECK(big[1] == doctest::Approx(0.0));
  CHECK(all_finite(big));
  CHECK(sigmoid(0.0) == 0.5);
  CHECK(sigmoid(-800.0) >= 0.0);
  CHECK(sigmoid(800.0) == 1.0);
  CHECK(tanh(Vec{0.0, 1.0})[1] == std::tanh(1.0));
}

TEST_CASE("softmax output is a probability vector for inputs up to magnitude 1e3") {
  Rng rng(4);
  for (int trial = 0; trial < 200; ++trial) {
    Vec v(1 + uniform_index(rng, 10));
    testing::fill_uniform(v.data, 1000.0, rng);
    const Vec p = softmax(v);
    double sum = 0;
    for (double x : p.data) {
      CHECK(x >= 0.0);
      CHECK(x <= 1.0);
      sum += x;
    }
    CHECK(std::abs(sum - 1.0) <= 1e-12);
  }
}

TEST_CASE("frobenius norm") {
  CHECK(frobenius_norm(Mat(3, 3)) == 0.0);
  CHECK(frobenius_norm(Mat{{3, 4}}) == 5.0);
  Rng rng(5);
  const Mat m = random_mat(5, 5, rng);
  double s = 0;
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 0; j < 5; ++j) s += m(i, j) * m(i, j);
  CHECK(std::abs(frobenius_norm(m) - std::sqrt(s)) <= 1e-12);

  for (int trial = 0; trial < 200; ++trial) {
    const Mat a = random_mat(3, 4, rng), b = random_mat(3, 4, rng);
    Mat sum = a;
    axpy(sum.data, 1.0, b.data);
    CHECK(frobenius_norm(sum) <= frobenius_norm(a) + frobenius_norm(b));
  }
}

TEST_CASE("spectral norm by power iteration") {
  CHECK(spectral_norm(Mat{{3, 0}, {0, -5}}) == doctest::Approx(5.0).epsilon(1e-10));
  CHECK(spectral_norm(Mat(2, 3)) == 0.0);
  // Closed form for 2x2: largest singular value from the eigenvalues of A^T A.
  Rng rng(6);
  for (int trial = 0; trial < 20; ++trial) {
    const Mat a = random_mat(2, 2, rng);
    const Mat ata = matmul(transpose(a), a);
    const double tr = ata(0, 0) + ata(1, 1);
    const double det = ata(0, 0) * ata(1, 1) - ata(0, 1) * ata(1, 0);
    const double lmax = tr / 2 + std::sqrt(std::max(0.0, tr * tr / 4 - det));
    CHECK(spectral_norm(a) == doctest::Approx(std::sqrt(lmax)).epsilon(1e-6));
    CHECK(spectral_norm(a) <= frobenius_norm(a) + 1e-12);
  }
  CHECK(matrix_norm(Mat{{3, 4}}, NormKind::frobenius) == 5.0);
  CHECK(parse_norm_kind("spectral") == NormKind::spectral);
  CHECK_THROWS_AS(parse_norm_kind("nuclear"), ConfigError);
}
