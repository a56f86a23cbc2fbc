#include <doctest.h>

#include <cmath>

#include "gradmine/lstm.hpp"
#include "support.hpp"

using namespace gradmine;

namespace {

double sig(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Per-step recurrence over raw arrays, sharing no code with the library.
double oracle_loss(const lstm::Params& p, const SequenceSample& s) {
  const std::size_t H = p.b_z.size(), E = p.w_emb.cols, K = p.b_cls.size(), T = s.tokens.size();
  auto affine = [&](const Mat& w, const Mat& u, const Vec& b, const double* x, const std::vector<double>& h,
                    std::size_t i) {
    double a = b[i];
    for (std::size_t j = 0; j < E; ++j) a += w.data[i * E + j] * x[j];
    for (std::size_t j = 0; j < H; ++j) a += u.data[i * H + j] * h[j];
    return a;
  };
  std::vector<double> h = p.h0.data, c = p.c0.data, pooled(H, 0.0);
  for (std::size_t t = 0; t < T; ++t) {
    const double* x = &p.w_emb.data[s.tokens[t] * E];
    std::vector<double> nh(H), nc(H);
    for (std::size_t i = 0; i < H; ++i) {
      const double z = sig(affine(p.w_z, p.u_z, p.b_z, x, h, i));
      const double f = sig(affine(p.w_f, p.u_f, p.b_f, x, h, i));
      const double g = std::tanh(affine(p.w_c, p.u_c, p.b_c, x, h, i));
      const double o = sig(affine(p.w_o, p.u_o, p.b_o, x, h, i));
      nc[i] = z * g + f * c[i];
      nh[i] = o * std::tanh(nc[i]);
    }
    h = nh;
    c = nc;
    for (std::size_t i = 0; i < H; ++i) pooled[i] += h[i] / static_cast<double>(T);
  }
  std::vector<double> logits(K);
  for (std::size_t k = 0; k < K; ++k) {
    logits[k] = p.b_cls[k];
    for (std::size_t j = 0; j < H; ++j) logits[k] += p.w_cls.data[k * H + j] * pooled[j];
  }
  double norm = 0;
  for (double z : logits) norm += std::exp(z);
  return -(logits[s.targets[0]] - std::log(norm));
}

lstm::Params random_params(Rng& rng, const lstm::Dims& d = {4, 5, 6, 2}) {
  auto p = lstm::Params::zeros(d);
  testing::randomize(p, 0.8, rng);
  return p;
}

double loss_of(const lstm::Params& p, const SequenceSample& s) { return lstm::forward(p, s).loss; }

}  // namespace

TEST_CASE("zero parameters: gates at one half, empty memory, loss ln K") {
  const auto p = lstm::Params::zeros({4, 5, 6, 3});
  const auto tr = lstm::forward(p, {{0, 1, 2, 5}, {1}});
  for (std::size_t t = 0; t < 4; ++t) {
    for (double v : tr.z[t].data) CHECK(v == 0.5);
    for (double v : tr.f[t].data) CHECK(v == 0.5);
    for (double v : tr.o[t].data) CHECK(v == 0.5);
    CHECK(tr.c[t + 1] == Vec(5));
    CHECK(tr.h[t + 1] == Vec(5));
  }
  for (double v : tr.probs.data) CHECK(v == doctest::Approx(1.0 / 3).epsilon(1e-15));
  CHECK(tr.loss == doctest::Approx(std::log(3.0)).epsilon(1e-15));
}

TEST_CASE("non-finite parameters surface as divergence") {
  auto p = lstm::Params::zeros({4, 5, 6, 3});
  p.b_z[0] = std::nan("");
  CHECK_THROWS_AS(lstm::forward(p, {{0, 1}, {1}}), DivergenceError);
}

TEST_CASE("forget gate open and input gate closed carry the initial memory through") {
  Rng rng(1);
  auto p = random_params(rng);
  p.b_f = Vec(5, 60.0);
  p.b_z = Vec(5, -60.0);
  const auto tr = lstm::forward(p, {{1, 2, 3, 4, 5}, {0}});
  for (std::size_t i = 0; i < 5; ++i) CHECK(tr.c.back()[i] == doctest::Approx(p.c0[i]).epsilon(1e-12));
}

TEST_CASE("forward loss matches the per-step oracle") {
  const auto p = lstm::init({4, 5, 6, 2}, 0);
  const SequenceSample s{{4, 1, 3}, {1}};
  CHECK(std::abs(loss_of(p, s) - oracle_loss(p, s)) <= 1e-10);
  Rng rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const auto q = random_params(rng);
    const auto r = testing::random_sequence(rng, 6, 6, true, 2);
    CHECK(std::abs(loss_of(q, r) - oracle_loss(q, r)) <= 1e-10);
  }
}

TEST_CASE("init biases: zero except the forget gate") {
  const auto p = lstm::init({4, 5, 6, 2}, 0);
  CHECK(p.b_f == Vec(5, 1.0));
  CHECK(p.b_z == Vec(5));
  CHECK(p.b_c == Vec(5));
  CHECK(p.b_o == Vec(5));
  CHECK(p.b_cls == Vec(2));
}

TEST_CASE("gates stay in the unit interval and the candidate in (-1, 1)") {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    auto p = lstm::Params::zeros({4, 5, 6, 2});
    testing::randomize(p, 3.0, rng);
    const auto tr = lstm::forward(p, testing::random_sequence(rng, 6, 8, true, 2));
    for (std::size_t t = 0; t < tr.z.size(); ++t) {
      for (const auto* gate : {&tr.z[t], &tr.f[t], &tr.o[t]})
        for (double v : gate->data) CHECK((v >= 0.0 && v <= 1.0));
      for (double v : tr.g[t].data) CHECK((v >= -1.0 && v <= 1.0));
    }
  }
}

TEST_CASE("invalid samples are rejected") {
  const auto p = lstm::init({4, 5, 6, 2}, 0);
  CHECK_THROWS_AS(lstm::forward(p, {{6}, {0}}), InvalidInput);
  CHECK_THROWS_AS(lstm::forward(p, {{1, 2}, {0, 1}}), InvalidInput);
  CHECK_THROWS_AS(lstm::forward(p, {{1, 2}, {2}}), InvalidInput);
  CHECK_THROWS_AS(lstm::forward(p, {{}, {0}}), InvalidInput);
}

TEST_CASE("backward matches central finite differences on every block") {
  Rng rng(4);
  for (int trial = 0; trial < 24; ++trial) {
    const auto p = random_params(rng);
    const auto s = testing::random_sequence(rng, 6, 4, true, 2);
    const auto g = lstm::backward(p, s, lstm::forward(p, s));
    const auto rep = testing::fd_check(p, g, [&](const lstm::Params& q) { return loss_of(q, s); });
    CHECK(rep.checked == param_count(p));
    CHECK_MESSAGE(rep.violations == 0, "worst ", rep.worst_at, " rel ", rep.worst_rel);
  }
}

TEST_CASE("an already-certain prediction has gradient norms below 1e-6") {
  Rng rng(5);
  auto p = random_params(rng);
  p.b_cls = Vec{0.0, 40.0};
  const SequenceSample s{{2, 3, 1}, {1}};
  const auto g = lstm::backward(p, s, lstm::forward(p, s));
  for (const auto& b : g.blocks()) CHECK(frobenius_norm(b.values) < 1e-6);
  const auto rep = testing::fd_check(p, g, [&](const lstm::Params& q) { return loss_of(q, s); });
  CHECK(rep.violations == 0);
}

TEST_CASE("repeated backward calls are bitwise equal; foreign traces are rejected") {
  const auto p = lstm::init({4, 5, 6, 2}, 6);
  const SequenceSample s{{1, 2, 3}, {0}};
  CHECK(lstm::backward(p, s, lstm::forward(p, s)) == lstm::backward(p, s, lstm::forward(p, s)));
  CHECK_THROWS_AS(lstm::backward(p, {{3, 2, 1}, {0}}, lstm::forward(p, s)), InvalidInput);
}

TEST_CASE("w_c is the default base block") {
  const auto p = lstm::init({4, 5, 6, 2}, 6);
  CHECK(lstm::Model::default_base == "w_c");
  CHECK(find_block(p, "w_c").rows == 5);
  CHECK(block_names(p).size() == 17);
}
