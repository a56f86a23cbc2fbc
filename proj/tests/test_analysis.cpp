#include <doctest.h>

#include <cmath>
#include <numeric>

#include "gradmine/analysis.hpp"
#include "gradmine/error.hpp"
#include "gradmine/rng.hpp"
#include "support.hpp"

using namespace gradmine;
using namespace gradmine::analysis;

namespace {

double norm2(const Vec& v) { return std::sqrt(dot(v.data, v.data)); }

Vec random_vec(Rng& rng, std::size_t n, double scale) {
  Vec v(n);
  testing::fill_uniform(v.data, scale, rng);
  return v;
}

ConvexProblem random_problem(Rng& rng, std::size_t n, std::size_t dim, double reg) {
  ConvexProblem p;
  p.reg = reg;
  for (std::size_t i = 0; i < n; ++i) {
    p.points.push_back(random_vec(rng, dim, 2.0));
    p.labels.push_back(bernoulli(rng, 0.5) ? 1 : -1);
  }
  return p;
}

std::vector<Vec> random_grads(Rng& rng, std::size_t n, std::size_t dim) {
  std::vector<Vec> g;
  for (std::size_t i = 0; i < n; ++i) g.push_back(random_vec(rng, dim, 1.0 + 3.0 * uniform01(rng)));
  return g;
}

std::vector<double> random_probs(Rng& rng, std::size_t n) {
  std::vector<double> p(n);
  for (auto& x : p) x = 1e-3 + uniform01(rng);
  const double s = std::accumulate(p.begin(), p.end(), 0.0);
  for (auto& x : p) x /= s;
  return p;
}

// Closed forms: uniform gives (1/N) sum ||g_i||^2 - ||gbar||^2 and the
// norm-proportional distribution gives (1/N^2) (sum ||g_i||)^2 - ||gbar||^2.
double uniform_variance_closed(const std::vector<Vec>& g) {
  const double n = static_cast<double>(g.size());
  double sq = 0;
  for (const auto& v : g) sq += dot(v.data, v.data);
  const Vec m = mean_gradient(g);
  return sq / n - dot(m.data, m.data);
}

double optimal_variance_closed(const std::vector<Vec>& g) {
  const double n = static_cast<double>(g.size());
  double s = 0;
  for (const auto& v : g) s += norm2(v);
  const Vec m = mean_gradient(g);
  return s * s / (n * n) - dot(m.data, m.data);
}

}  // namespace

TEST_CASE("svm loss and gradient special cases") {
  ConvexProblem p;
  p.reg = 0.5;
  p.points = {Vec{1.0, 2.0}, Vec{-1.0, 0.5}};
  p.labels = {1, -1};

  const Vec w{2.0, 1.0};  // y x.w = 4 and 1.5, both margins satisfied
  for (std::size_t i = 0; i < 2; ++i) {
    const auto r = svm_loss_grad(p, i, w);
    CHECK(r.grad.data == std::vector<double>{1.0, 0.5});
    CHECK(r.loss == doctest::Approx(0.25 * 5.0).epsilon(1e-15));
  }
  const Vec zero(2);
  for (std::size_t i = 0; i < 2; ++i) {
    const auto r = svm_loss_grad(p, i, zero);
    CHECK(r.loss == 1.0);
    for (std::size_t k = 0; k < 2; ++k) CHECK(r.grad[k] == -2.0 * p.labels[i] * p.points[i][k]);
  }
}

TEST_CASE("svm gradient matches finite differences") {
  Rng rng(1);
  const auto p = random_problem(rng, 10, 5, 0.3);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t i = uniform_index(rng, p.size());
    Vec w = random_vec(rng, 5, 1.0);
    const auto r = svm_loss_grad(p, i, w);
    for (std::size_t k = 0; k < 5; ++k) {
      const double saved = w[k];
      w[k] = saved + 1e-6;
      const double up = svm_loss_grad(p, i, w).loss;
      w[k] = saved - 1e-6;
      const double down = svm_loss_grad(p, i, w).loss;
      w[k] = saved;
      CHECK(std::abs((up - down) / 2e-6 - r.grad[k]) <= 1e-6);
    }
  }
}

TEST_CASE("full objective is the mean of the per-sample terms") {
  Rng rng(2);
  const auto p = random_problem(rng, 7, 3, 1.0);
  const Vec w = random_vec(rng, 3, 0.5);
  const auto full = svm_full_loss_grad(p, w);
  double loss = 0;
  Vec g(3);
  for (std::size_t i = 0; i < p.size(); ++i) {
    const auto r = svm_loss_grad(p, i, w);
    loss += r.loss / 7.0;
    axpy(g.data, 1.0 / 7.0, r.grad.data);
  }
  CHECK(full.loss == doctest::Approx(loss).epsilon(1e-14));
  for (std::size_t k = 0; k < 3; ++k) CHECK(full.grad[k] == doctest::Approx(g[k]).epsilon(1e-13));
}

TEST_CASE("problem validation") {
  ConvexProblem p;
  p.points = {Vec{1.0}, Vec{1.0, 2.0}};
  p.labels = {1, -1};
  CHECK_THROWS_AS(p.validate(), InvalidShape);
  p.points = {Vec{1.0}, Vec{2.0}};
  p.labels = {1, 0};
  CHECK_THROWS_AS(p.validate(), InvalidInput);
  p.labels = {1, -1};
  p.reg = 0.0;
  CHECK_THROWS_AS(p.validate(), ConfigError);
  p.reg = 1.0;
  CHECK_THROWS_AS(svm_loss_grad(p, 0, Vec{1.0, 1.0}), InvalidShape);
}

TEST_CASE("lipschitz bound arithmetic") {
  CHECK(svm_lipschitz_bound(Vec(3), 0.25) == 0.5);
  CHECK(svm_lipschitz_bound(Vec{1.0, 0.0}, 1.0) == 5.0);
  CHECK(svm_lipschitz_bound(Vec{0.6, 0.8}, 4.0) == doctest::Approx(2.0 * 1.5 + 2.0).epsilon(1e-15));
  CHECK_THROWS_AS(svm_lipschitz_bound(Vec{1.0}, 0.0), ConfigError);
}

TEST_CASE("gradient norms never exceed the bound inside the ball") {
  Rng rng(3);
  for (int trial = 0; trial < 10000; ++trial) {
    const double reg = std::pow(10.0, -2.0 + 3.0 * uniform01(rng));
    ConvexProblem p;
    p.reg = reg;
    p.points = {random_vec(rng, 4, 3.0)};
    p.labels = {bernoulli(rng, 0.5) ? 1 : -1};
    Vec w = random_vec(rng, 4, 1.0);
    const double radius = uniform01(rng) / std::sqrt(reg);
    const double wn = norm2(w);
    if (wn > 0)
      for (auto& x : w.data) x *= radius / wn;
    const double g = norm2(svm_loss_grad(p, 0, w).grad);
    CHECK(g <= svm_lipschitz_bound(p.points[0], reg) * (1 + 1e-12));
  }
}

TEST_CASE("svm minimizer has a vanishing full gradient") {
  Rng rng(4);
  const auto p = random_problem(rng, 12, 3, 0.5);
  const Vec w = svm_minimize(p);
  CHECK(norm2(svm_full_loss_grad(p, w).grad) <= 1e-8);
  CHECK(svm_strong_convexity(p) == 0.5);
  // sigma^2 at the optimum equals the uniform estimator variance there, since the mean is zero
  std::vector<Vec> g;
  for (std::size_t i = 0; i < p.size(); ++i) g.push_back(svm_loss_grad(p, i, w).grad);
  CHECK(svm_sigma2(p) == doctest::Approx(uniform_variance_closed(g)).epsilon(1e-8));
}

TEST_CASE("lipschitz distribution") {
  const auto p = lipschitz_distribution(std::vector<double>{1, 2, 3});
  CHECK(p[0] == doctest::Approx(1.0 / 6).epsilon(1e-15));
  CHECK(p[1] == doctest::Approx(1.0 / 3).epsilon(1e-15));
  CHECK(p[2] == doctest::Approx(0.5).epsilon(1e-15));
  for (double x : lipschitz_distribution(std::vector<double>(5, 2.5))) CHECK(x == 0.2);
  Rng rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> l(1 + uniform_index(rng, 50));
    for (auto& x : l) x = 10 * uniform01(rng);
    const auto q = lipschitz_distribution(l);
    CHECK(std::abs(std::accumulate(q.begin(), q.end(), 0.0) - 1.0) <= 1e-12);
  }
  CHECK_THROWS_AS(lipschitz_distribution(std::vector<double>{0, 0}), DegenerateDistribution);
}

TEST_CASE("optimal distribution") {
  const std::vector<Vec> g{Vec{1.0, 0.0}, Vec{0.0, -3.0}};
  const auto p = optimal_distribution(g);
  CHECK(p == std::vector<double>{0.25, 0.75});
  const std::vector<Vec> eq{Vec{1.0, 0.0}, Vec{0.0, 1.0}, Vec{-0.6, 0.8}};
  for (double x : optimal_distribution(eq)) CHECK(x == doctest::Approx(1.0 / 3).epsilon(1e-15));
  CHECK_THROWS_AS(optimal_distribution(std::vector<Vec>{Vec(2), Vec(2)}), DegenerateDistribution);
}

TEST_CASE("gradient variance examples") {
  const std::vector<Vec> same(4, Vec{1.0, -2.0});
  CHECK(gradient_variance(same, std::vector<double>(4, 0.25)) == 0.0);
  const std::vector<Vec> pm{Vec{1.0, 0.0}, Vec{-1.0, 0.0}};
  CHECK(gradient_variance(pm, std::vector<double>{0.5, 0.5}) == 1.0);
  CHECK_THROWS_AS(gradient_variance(pm, std::vector<double>{1.0, 0.0}), InvalidProbability);
  // a zero probability is fine where the gradient is zero
  const std::vector<Vec> with_zero{Vec{1.0}, Vec{0.0}};
  CHECK(gradient_variance(with_zero, std::vector<double>{1.0, 0.0}) == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("enumerated variance matches the closed forms") {
  Rng rng(6);
  for (int trial = 0; trial < 50; ++trial) {
    const auto g = random_grads(rng, 2 + uniform_index(rng, 20), 4);
    const auto u = std::vector<double>(g.size(), 1.0 / static_cast<double>(g.size()));
    CHECK(gradient_variance(g, u) == doctest::Approx(uniform_variance_closed(g)).epsilon(1e-10));
    CHECK(gradient_variance(g, optimal_distribution(g)) ==
          doctest::Approx(optimal_variance_closed(g)).epsilon(1e-10));
  }
}

TEST_CASE("enumerated variance agrees with a Monte-Carlo estimate within 1%") {
  Rng rng(7);
  const auto g = random_grads(rng, 6, 3);
  const auto p = random_probs(rng, 6);
  const Vec m = mean_gradient(g);
  const std::size_t draws = 1000000;
  double acc = 0;
  std::vector<double> cdf(6);
  std::partial_sum(p.begin(), p.end(), cdf.begin());
  for (std::size_t d = 0; d < draws; ++d) {
    const double u = uniform01(rng);
    std::size_t i = 0;
    while (i < 5 && u >= cdf[i]) ++i;
    const double w = 1.0 / (6.0 * p[i]);
    double sq = 0;
    for (std::size_t k = 0; k < 3; ++k) sq += std::pow(w * g[i][k] - m[k], 2);
    acc += sq;
  }
  const double mc = acc / static_cast<double>(draws);
  const double exact = gradient_variance(g, p);
  CHECK(std::abs(mc - exact) <= 0.01 * exact);
}

TEST_CASE("expected reweighted update is the mean gradient") {
  Rng rng(8);
  const auto g = random_grads(rng, 9, 5);
  const auto p = random_probs(rng, 9);
  const Vec e = expected_update(g, p);
  const Vec m = mean_gradient(g);
  for (std::size_t k = 0; k < 5; ++k) CHECK(std::abs(e[k] - m[k]) <= 1e-12);
}

TEST_CASE("norm-proportional probabilities minimize the variance") {
  Rng rng(9);
  const auto g = random_grads(rng, 16, 3);
  const auto opt = optimal_distribution(g);
  const double best = gradient_variance(g, opt);
  for (int trial = 0; trial < 1000; ++trial) CHECK(best <= gradient_variance(g, random_probs(rng, 16)) + 1e-12);
  const auto u = std::vector<double>(16, 1.0 / 16);
  CHECK(gradient_variance(g, u) - best > 0.0);
  // only equal norms make uniform optimal
  std::vector<Vec> eq;
  for (int i = 0; i < 8; ++i) {
    Vec v = random_vec(rng, 3, 1.0);
    const double n = norm2(v);
    for (auto& x : v.data) x /= n;
    eq.push_back(v);
  }
  const auto u8 = std::vector<double>(8, 1.0 / 8);
  CHECK(std::abs(gradient_variance(eq, u8) - gradient_variance(eq, optimal_distribution(eq))) <= 1e-10);
}

TEST_CASE("bound ratio") {
  CHECK(bound_ratio(std::vector<double>{1, 1, 1, 1}) == 1.0);
  CHECK(bound_ratio(std::vector<double>{1, 0, 0, 0}) == 4.0);
  CHECK(bound_ratio(std::vector<double>(7, 0.3)) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK_THROWS_AS(bound_ratio(std::vector<double>{0, 0}), DegenerateDistribution);
  Rng rng(10);
  for (int trial = 0; trial < 10000; ++trial) {
    std::vector<double> l(1 + uniform_index(rng, 30));
    for (auto& x : l) x = uniform01(rng) * (bernoulli(rng, 0.2) ? 0.0 : 5.0);
    if (std::accumulate(l.begin(), l.end(), 0.0) == 0.0) l[0] = 1.0;
    CHECK(bound_ratio(l) >= 1.0 - 1e-12);
  }
}
