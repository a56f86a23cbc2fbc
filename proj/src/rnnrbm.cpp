#include "gradmine/rnnrbm.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace gradmine::rnnrbm {

namespace {

void fill_uniform(std::span<double> values, double scale, Rng& rng) {
  for (auto& x : values) x = (2.0 * uniform01(rng) - 1.0) * scale;
}

double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

Vec hidden_prob(const Mat& w, const Vec& bh, const Vec& v) {
  Vec a = bh;
  add_matvec_t(a.span(), w, v);
  return sigmoid(a);
}

void check_sequence(const Params& p, const FrameSequence& s) {
  if (s.frames.empty()) throw InvalidInput("empty frame sequence");
  for (const auto& f : s.frames) {
    if (f.size() != p.b_v.size()) throw InvalidInput("frame width differs from visible layer");
    for (double x : f.data)
      if (x != 0.0 && x != 1.0) throw InvalidInput("frames must be binary");
  }
}

struct Biases {
  std::vector<Vec> bv, bh, u;
};

Biases run_recurrence(const Params& p, const FrameSequence& s) {
  Biases r;
  r.u.push_back(p.u0);
  for (const auto& v : s.frames) {
    const Vec& u_prev = r.u.back();
    Vec bv = p.b_v;
    add_matvec(bv.span(), p.w_uv, u_prev);
    Vec bh = p.b_h;
    add_matvec(bh.span(), p.w_uh, u_prev);
    Vec a = p.b_u;
    add_matvec(a.span(), p.w_uu, u_prev);
    add_matvec(a.span(), p.w_vu, v);
    r.bv.push_back(std::move(bv));
    r.bh.push_back(std::move(bh));
    r.u.push_back(tanh(a));
  }
  return r;
}

}  // namespace

Params Params::zeros(const Dims& d) {
  return Params{Mat(d.visible, d.hidden),    Vec(d.visible),
                Vec(d.hidden),               Mat(d.visible, d.recurrent),
                Mat(d.hidden, d.recurrent),  Mat(d.recurrent, d.recurrent),
                Mat(d.recurrent, d.visible), Vec(d.recurrent),
                Vec(d.recurrent)};
}

Dims Params::dims() const { return Dims{w.rows, w.cols, b_u.size()}; }

void Params::validate() const {
  const auto d = dims();
  const bool ok = b_v.size() == d.visible && b_h.size() == d.hidden &&
                  w_uv.rows == d.visible && w_uv.cols == d.recurrent &&
                  w_uh.rows == d.hidden && w_uh.cols == d.recurrent &&
                  w_uu.rows == d.recurrent && w_uu.cols == d.recurrent &&
                  w_vu.rows == d.recurrent && w_vu.cols == d.visible && u0.size() == d.recurrent;
  if (!ok) throw InvalidShape("inconsistent RNN-RBM parameter shapes");
}

std::vector<BlockRef> Params::blocks() {
  return {block("w", w),       block("b_v", b_v),   block("b_h", b_h),
          block("w_uv", w_uv), block("w_uh", w_uh), block("w_uu", w_uu),
          block("w_vu", w_vu), block("b_u", b_u),   block("u0", u0)};
}

std::vector<ConstBlockRef> Params::blocks() const {
  return {block("w", w),       block("b_v", b_v),   block("b_h", b_h),
          block("w_uv", w_uv), block("w_uh", w_uh), block("w_uu", w_uu),
          block("w_vu", w_vu), block("b_u", b_u),   block("u0", u0)};
}

Params init(const Dims& d, std::uint64_t seed) {
  Rng rng(seed);
  Params p = Params::zeros(d);
  const double su = 1.0 / std::sqrt(static_cast<double>(std::max<std::size_t>(d.recurrent, 1)));
  const double sv = 1.0 / std::sqrt(static_cast<double>(std::max<std::size_t>(d.visible, 1)));
  fill_uniform(p.w.data, 0.01, rng);
  fill_uniform(p.w_uv.data, 0.01, rng);
  fill_uniform(p.w_uh.data, 0.01, rng);
  fill_uniform(p.w_uu.data, su, rng);
  fill_uniform(p.w_vu.data, sv, rng);
  return p;
}

GibbsStep gibbs_step(const Mat& w, const Vec& bv, const Vec& bh, const Vec& v, Rng& rng) {
  if (w.rows != bv.size() || w.cols != bh.size() || v.size() != bv.size()) {
    throw InvalidShape("gibbs step shape mismatch");
  }
  GibbsStep out;
  const Vec ph = hidden_prob(w, bh, v);
  out.h_sample = Vec(ph.size());
  for (std::size_t j = 0; j < ph.size(); ++j) out.h_sample[j] = bernoulli(rng, ph[j]) ? 1.0 : 0.0;
  Vec av = bv;
  add_matvec(av.span(), w, out.h_sample);
  out.v_prob = sigmoid(av);
  out.v_sample = Vec(out.v_prob.size());
  for (std::size_t i = 0; i < out.v_prob.size(); ++i) {
    out.v_sample[i] = bernoulli(rng, out.v_prob[i]) ? 1.0 : 0.0;
  }
  return out;
}

double free_energy(const Mat& w, const Vec& bv, const Vec& bh, const Vec& v) {
  Vec a = bh;
  add_matvec_t(a.span(), w, v);
  double fe = -dot(bv, v);
  for (double x : a.data) fe -= softplus(x);
  return fe;
}

ForwardResult forward(const Params& p, const FrameSequence& s, int k, Rng& rng) {
  if (k < 1) throw ConfigError("CD step count must be at least 1");
  p.validate();
  check_sequence(p, s);
  auto rec = run_recurrence(p, s);
  ForwardResult fr;
  fr.bv = std::move(rec.bv);
  fr.bh = std::move(rec.bh);
  fr.u = std::move(rec.u);

  const double eps = 1e-15;
  double bce = 0.0;
  for (std::size_t t = 0; t < s.length(); ++t) {
    Vec v = s.frames[t];
    GibbsStep step;
    for (int i = 0; i < k; ++i) {
      step = gibbs_step(p.w, fr.bv[t], fr.bh[t], v, rng);
      v = step.v_sample;
    }
    const Vec& data = s.frames[t];
    for (std::size_t i = 0; i < data.size(); ++i) {
      const double q = std::clamp(step.v_prob[i], eps, 1.0 - eps);
      bce -= data[i] == 1.0 ? std::log(q) : std::log(1.0 - q);
    }
    fr.recon_prob.push_back(std::move(step.v_prob));
    fr.negatives.push_back(std::move(v));
  }
  fr.cost = bce / static_cast<double>(s.length() * p.b_v.size());
  return fr;
}

double surrogate_objective(const Params& p, const FrameSequence& s,
                           const std::vector<Vec>& negatives) {
  p.validate();
  check_sequence(p, s);
  if (negatives.size() != s.length()) throw InvalidInput("one negative sample per frame required");
  const auto rec = run_recurrence(p, s);
  double j = 0.0;
  for (std::size_t t = 0; t < s.length(); ++t) {
    j += free_energy(p.w, rec.bv[t], rec.bh[t], s.frames[t]) -
         free_energy(p.w, rec.bv[t], rec.bh[t], negatives[t]);
  }
  return j / static_cast<double>(s.length());
}

Gradients surrogate_gradient(const Params& p, const FrameSequence& s,
                             const std::vector<Vec>& negatives) {
  p.validate();
  check_sequence(p, s);
  if (negatives.size() != s.length()) throw InvalidInput("one negative sample per frame required");
  const auto rec = run_recurrence(p, s);
  const std::size_t T = s.length();
  const double inv_t = 1.0 / static_cast<double>(T);
  Gradients g = Params::zeros(p.dims());

  // du[t] accumulates dJ/du_t for t = 0..T.
  std::vector<Vec> du(T + 1, Vec(p.b_u.size()));
  for (std::size_t t = 0; t < T; ++t) {
    const Vec& v = s.frames[t];
    const Vec& n = negatives[t];
    const Vec h_pos = hidden_prob(p.w, rec.bh[t], v);
    const Vec h_neg = hidden_prob(p.w, rec.bh[t], n);
    add_outer(g.w, v, h_pos, -inv_t);
    add_outer(g.w, n, h_neg, inv_t);

    Vec dbv(v.size()), dbh(h_pos.size());
    for (std::size_t i = 0; i < dbv.size(); ++i) dbv[i] = (n[i] - v[i]) * inv_t;
    for (std::size_t j = 0; j < dbh.size(); ++j) dbh[j] = (h_neg[j] - h_pos[j]) * inv_t;
    axpy(g.b_v.span(), 1.0, dbv);
    axpy(g.b_h.span(), 1.0, dbh);
    add_outer(g.w_uv, dbv, rec.u[t]);
    add_outer(g.w_uh, dbh, rec.u[t]);
    add_matvec_t(du[t].span(), p.w_uv, dbv);
    add_matvec_t(du[t].span(), p.w_uh, dbh);
  }
  for (std::size_t t = T; t >= 1; --t) {
    const Vec& u = rec.u[t];
    Vec da(u.size());
    for (std::size_t j = 0; j < u.size(); ++j) da[j] = du[t][j] * (1.0 - u[j] * u[j]);
    add_outer(g.w_uu, da, rec.u[t - 1]);
    add_outer(g.w_vu, da, s.frames[t - 1]);
    axpy(g.b_u.span(), 1.0, da);
    add_matvec_t(du[t - 1].span(), p.w_uu, da);
  }
  g.u0 = du[0];
  return g;
}

Gradients cd_gradient(const Params& p, const FrameSequence& s, int k, Rng& rng) {
  const auto fr = forward(p, s, k, rng);
  return surrogate_gradient(p, s, fr.negatives);
}

double reconstruction_error(const ForwardResult& fr, const FrameSequence& s) {
  std::size_t wrong = 0, total = 0;
  for (std::size_t t = 0; t < s.length(); ++t) {
    for (std::size_t i = 0; i < s.frames[t].size(); ++i) {
      const double pred = fr.recon_prob[t][i] >= 0.5 ? 1.0 : 0.0;
      wrong += pred != s.frames[t][i];
      ++total;
    }
  }
  return total == 0 ? 0.0 : static_cast<double>(wrong) / static_cast<double>(total);
}

}  // namespace gradmine::rnnrbm
