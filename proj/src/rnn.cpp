#include "gradmine/rnn.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace gradmine::rnn {

namespace {

void fill_uniform(std::span<double> values, double scale, Rng& rng) {
  for (auto& x : values) x = (2.0 * uniform01(rng) - 1.0) * scale;
}

void check_sample(const Params& p, const SequenceSample& s) {
  if (s.tokens.empty()) throw InvalidInput("empty sequence");
  const std::size_t nv = p.w_emb.rows;
  for (auto t : s.tokens)
    if (t >= nv) throw InvalidInput("token " + std::to_string(t) + " outside vocabulary");
  if (s.targets.size() != 1 && s.targets.size() != s.tokens.size()) {
    throw InvalidInput("targets must be one label or one per token");
  }
  for (auto t : s.targets)
    if (t >= p.w_s.rows) throw InvalidInput("target " + std::to_string(t) + " outside output range");
}

// Step index that carries target k (for single labels only the last step).
std::size_t scored_step(const SequenceSample& s, std::size_t k) {
  return s.single_label() ? s.length() - 1 : k;
}

}  // namespace

Params Params::zeros(const Dims& d) {
  return Params{Mat(d.vocab, d.embed), Mat(d.hidden, d.embed), Mat(d.hidden, d.hidden),
                Mat(d.vocab, d.hidden), Vec(d.hidden),          Vec(d.vocab),
                Vec(d.hidden)};
}

Dims Params::dims() const { return Dims{w_emb.cols, w_x.rows, w_emb.rows}; }

void Params::validate() const {
  const auto d = dims();
  const bool ok = w_x.cols == d.embed && w_h.rows == d.hidden && w_h.cols == d.hidden &&
                  w_s.rows == d.vocab && w_s.cols == d.hidden && b_h.size() == d.hidden &&
                  b_y.size() == d.vocab && h0.size() == d.hidden;
  if (!ok) throw InvalidShape("inconsistent RNN parameter shapes");
}

std::vector<BlockRef> Params::blocks() {
  return {block("w_emb", w_emb), block("w_x", w_x), block("w_h", w_h), block("w_s", w_s),
          block("b_h", b_h),     block("b_y", b_y), block("h0", h0)};
}

std::vector<ConstBlockRef> Params::blocks() const {
  return {block("w_emb", w_emb), block("w_x", w_x), block("w_h", w_h), block("w_s", w_s),
          block("b_h", b_h),     block("b_y", b_y), block("h0", h0)};
}

Params init(const Dims& d, std::uint64_t seed) {
  Rng rng(seed);
  Params p = Params::zeros(d);
  fill_uniform(p.w_emb.data, 0.5, rng);
  fill_uniform(p.w_x.data, 1.0 / std::sqrt(static_cast<double>(d.embed)), rng);
  fill_uniform(p.w_h.data, 1.0 / std::sqrt(static_cast<double>(d.hidden)), rng);
  fill_uniform(p.w_s.data, 1.0 / std::sqrt(static_cast<double>(d.hidden)), rng);
  return p;
}

ForwardTrace forward(const Params& p, const SequenceSample& s) {
  p.validate();
  check_sample(p, s);
  const std::size_t T = s.length();
  ForwardTrace tr;
  tr.tokens = s.tokens;
  tr.xs.reserve(T);
  tr.hs.reserve(T + 1);
  tr.ys.reserve(T);
  tr.hs.push_back(p.h0);
  for (std::size_t t = 0; t < T; ++t) {
    const auto x = p.w_emb.row(s.tokens[t]);
    tr.xs.emplace_back(std::vector<double>(x.begin(), x.end()));
    Vec a = p.b_h;
    add_matvec(a.span(), p.w_h, tr.hs.back());
    add_matvec(a.span(), p.w_x, x);
    tr.hs.push_back(tanh(a));
    Vec logits = p.b_y;
    add_matvec(logits.span(), p.w_s, tr.hs.back());
    tr.ys.push_back(softmax(logits));
  }
  double nll = 0.0;
  for (std::size_t k = 0; k < s.targets.size(); ++k) {
    nll -= std::log(tr.ys[scored_step(s, k)][s.targets[k]]);
  }
  tr.loss = nll / static_cast<double>(s.targets.size());
  return tr;
}

Gradients backward(const Params& p, const SequenceSample& s, const ForwardTrace& tr) {
  const std::size_t T = s.length();
  if (tr.tokens != s.tokens || tr.hs.size() != T + 1 || tr.ys.size() != T) {
    throw InvalidInput("forward trace does not belong to this sample");
  }
  if (tr.hs[0].size() != p.b_h.size() || tr.ys[0].size() != p.b_y.size()) {
    throw InvalidInput("forward trace does not belong to these parameters");
  }
  Gradients g = Params::zeros(p.dims());
  const double scale = 1.0 / static_cast<double>(s.targets.size());

  // dL/dlogits_t = scale * (y_t - onehot(target_t)) on scored steps.
  std::vector<Vec> dlogits(T, Vec(p.b_y.size()));
  for (std::size_t k = 0; k < s.targets.size(); ++k) {
    const std::size_t t = scored_step(s, k);
    for (std::size_t j = 0; j < dlogits[t].size(); ++j) dlogits[t][j] = scale * tr.ys[t][j];
    dlogits[t][s.targets[k]] -= scale;
  }

  Vec dh_next(p.b_h.size());
  for (std::size_t step = T; step-- > 0;) {
    const Vec& h = tr.hs[step + 1];
    const Vec& h_prev = tr.hs[step];
    add_outer(g.w_s, dlogits[step], h);
    axpy(g.b_y.span(), 1.0, dlogits[step]);

    Vec dh = dh_next;
    add_matvec_t(dh.span(), p.w_s, dlogits[step]);
    Vec da(dh.size());
    for (std::size_t j = 0; j < da.size(); ++j) da[j] = dh[j] * (1.0 - h[j] * h[j]);

    add_outer(g.w_x, da, tr.xs[step]);
    add_outer(g.w_h, da, h_prev);
    axpy(g.b_h.span(), 1.0, da);
    add_matvec_t(g.w_emb.row(s.tokens[step]), p.w_x, da);

    std::fill(dh_next.data.begin(), dh_next.data.end(), 0.0);
    add_matvec_t(dh_next.span(), p.w_h, da);
  }
  g.h0 = dh_next;
  return g;
}

double error_rate(const ForwardTrace& tr, const SequenceSample& s) {
  std::size_t wrong = 0;
  for (std::size_t k = 0; k < s.targets.size(); ++k) {
    const auto& y = tr.ys[scored_step(s, k)].data;
    const auto pred = static_cast<std::size_t>(std::max_element(y.begin(), y.end()) - y.begin());
    if (pred != s.targets[k]) ++wrong;
  }
  return static_cast<double>(wrong) / static_cast<double>(s.targets.size());
}

}  // namespace gradmine::rnn
