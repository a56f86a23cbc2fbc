#include "gradmine/lstm.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace gradmine::lstm {

namespace {

void fill_uniform(std::span<double> values, double scale, Rng& rng) {
  for (auto& x : values) x = (2.0 * uniform01(rng) - 1.0) * scale;
}

Vec preactivation(const Mat& w, const Mat& u, const Vec& b, std::span<const double> x,
                  const Vec& h_prev) {
  Vec a = b;
  add_matvec(a.span(), w, x);
  add_matvec(a.span(), u, h_prev);
  return a;
}

void check_unit_interval(const Vec& v, const char* what) {
  for (double x : v.data) {
    // a sigmoid only leaves [0,1] through NaN, i.e. non-finite parameters
    if (!std::isfinite(x)) throw DivergenceError(std::string(what) + " is not finite");
    if (x < 0.0 || x > 1.0) throw InvalidInput(std::string(what) + " left [0,1]");
  }
}

}  // namespace

Params Params::zeros(const Dims& d) {
  const Mat wx(d.hidden, d.embed);
  const Mat uh(d.hidden, d.hidden);
  const Vec b(d.hidden);
  return Params{Mat(d.vocab, d.embed),
                wx, wx, wx, wx,
                uh, uh, uh, uh,
                b,  b,  b,  b,
                Mat(d.classes, d.hidden),
                Vec(d.classes),
                b,  b};
}

Dims Params::dims() const { return Dims{w_emb.cols, w_z.rows, w_emb.rows, w_cls.rows}; }

void Params::validate() const {
  const auto d = dims();
  auto wx_ok = [&](const Mat& m) { return m.rows == d.hidden && m.cols == d.embed; };
  auto uh_ok = [&](const Mat& m) { return m.rows == d.hidden && m.cols == d.hidden; };
  auto b_ok = [&](const Vec& v) { return v.size() == d.hidden; };
  const bool ok = wx_ok(w_z) && wx_ok(w_f) && wx_ok(w_c) && wx_ok(w_o) && uh_ok(u_z) &&
                  uh_ok(u_f) && uh_ok(u_c) && uh_ok(u_o) && b_ok(b_z) && b_ok(b_f) &&
                  b_ok(b_c) && b_ok(b_o) && w_cls.cols == d.hidden &&
                  b_cls.size() == d.classes && b_ok(h0) && b_ok(c0);
  if (!ok) throw InvalidShape("inconsistent LSTM parameter shapes");
}

std::vector<BlockRef> Params::blocks() {
  return {block("w_emb", w_emb), block("w_z", w_z), block("w_f", w_f),     block("w_c", w_c),
          block("w_o", w_o),     block("u_z", u_z), block("u_f", u_f),     block("u_c", u_c),
          block("u_o", u_o),     block("b_z", b_z), block("b_f", b_f),     block("b_c", b_c),
          block("b_o", b_o),     block("w_cls", w_cls), block("b_cls", b_cls),
          block("h0", h0),       block("c0", c0)};
}

std::vector<ConstBlockRef> Params::blocks() const {
  return {block("w_emb", w_emb), block("w_z", w_z), block("w_f", w_f),     block("w_c", w_c),
          block("w_o", w_o),     block("u_z", u_z), block("u_f", u_f),     block("u_c", u_c),
          block("u_o", u_o),     block("b_z", b_z), block("b_f", b_f),     block("b_c", b_c),
          block("b_o", b_o),     block("w_cls", w_cls), block("b_cls", b_cls),
          block("h0", h0),       block("c0", c0)};
}

Params init(const Dims& d, std::uint64_t seed) {
  Rng rng(seed);
  Params p = Params::zeros(d);
  const double sx = 1.0 / std::sqrt(static_cast<double>(d.embed));
  const double sh = 1.0 / std::sqrt(static_cast<double>(d.hidden));
  fill_uniform(p.w_emb.data, 0.5, rng);
  for (Mat* m : {&p.w_z, &p.w_f, &p.w_c, &p.w_o}) fill_uniform(m->data, sx, rng);
  for (Mat* m : {&p.u_z, &p.u_f, &p.u_c, &p.u_o}) fill_uniform(m->data, sh, rng);
  fill_uniform(p.w_cls.data, sh, rng);
  std::fill(p.b_f.data.begin(), p.b_f.data.end(), 1.0);
  return p;
}

ForwardTrace forward(const Params& p, const SequenceSample& s) {
  p.validate();
  if (s.tokens.empty()) throw InvalidInput("empty sequence");
  if (!s.single_label()) throw InvalidInput("LSTM classifier needs exactly one label");
  for (auto t : s.tokens)
    if (t >= p.w_emb.rows) throw InvalidInput("token " + std::to_string(t) + " outside vocabulary");
  if (s.targets[0] >= p.w_cls.rows) throw InvalidInput("label outside class range");

  const std::size_t T = s.length();
  const std::size_t H = p.b_z.size();
  ForwardTrace tr;
  tr.tokens = s.tokens;
  tr.h.push_back(p.h0);
  tr.c.push_back(p.c0);
  tr.pooled = Vec(H);
  for (std::size_t t = 0; t < T; ++t) {
    const auto x = p.w_emb.row(s.tokens[t]);
    tr.xs.emplace_back(std::vector<double>(x.begin(), x.end()));
    const Vec& h_prev = tr.h.back();
    Vec z = sigmoid(preactivation(p.w_z, p.u_z, p.b_z, x, h_prev));
    Vec f = sigmoid(preactivation(p.w_f, p.u_f, p.b_f, x, h_prev));
    Vec g = tanh(preactivation(p.w_c, p.u_c, p.b_c, x, h_prev));
    Vec o = sigmoid(preactivation(p.w_o, p.u_o, p.b_o, x, h_prev));
    check_unit_interval(z, "input gate");
    check_unit_interval(f, "forget gate");
    check_unit_interval(o, "output gate");
    Vec c(H), h(H);
    for (std::size_t j = 0; j < H; ++j) {
      c[j] = z[j] * g[j] + f[j] * tr.c.back()[j];
      h[j] = o[j] * std::tanh(c[j]);
    }
    axpy(tr.pooled.span(), 1.0 / static_cast<double>(T), h);
    tr.z.push_back(std::move(z));
    tr.f.push_back(std::move(f));
    tr.g.push_back(std::move(g));
    tr.o.push_back(std::move(o));
    tr.c.push_back(std::move(c));
    tr.h.push_back(std::move(h));
  }
  Vec logits = p.b_cls;
  add_matvec(logits.span(), p.w_cls, tr.pooled);
  tr.probs = softmax(logits);
  tr.loss = -std::log(tr.probs[s.targets[0]]);
  return tr;
}

Gradients backward(const Params& p, const SequenceSample& s, const ForwardTrace& tr) {
  const std::size_t T = s.length();
  if (tr.tokens != s.tokens || tr.h.size() != T + 1 || tr.z.size() != T) {
    throw InvalidInput("forward trace does not belong to this sample");
  }
  if (tr.probs.size() != p.b_cls.size() || tr.pooled.size() != p.b_z.size()) {
    throw InvalidInput("forward trace does not belong to these parameters");
  }
  const std::size_t H = p.b_z.size();
  Gradients g = Params::zeros(p.dims());

  Vec dlogits = tr.probs;
  dlogits[s.targets[0]] -= 1.0;
  add_outer(g.w_cls, dlogits, tr.pooled);
  g.b_cls = dlogits;
  Vec dpool = matvec_t(p.w_cls, dlogits);
  const double inv_t = 1.0 / static_cast<double>(T);

  Vec dh_next(H), dc_next(H);
  Vec da_z(H), da_f(H), da_g(H), da_o(H);
  for (std::size_t t = T; t-- > 0;) {
    const Vec& z = tr.z[t];
    const Vec& f = tr.f[t];
    const Vec& gc = tr.g[t];
    const Vec& o = tr.o[t];
    const Vec& c = tr.c[t + 1];
    const Vec& c_prev = tr.c[t];
    const Vec& h_prev = tr.h[t];
    for (std::size_t j = 0; j < H; ++j) {
      const double dh = dh_next[j] + dpool[j] * inv_t;
      const double tc = std::tanh(c[j]);
      const double dc = dc_next[j] + dh * o[j] * (1.0 - tc * tc);
      da_o[j] = dh * tc * o[j] * (1.0 - o[j]);
      da_z[j] = dc * gc[j] * z[j] * (1.0 - z[j]);
      da_g[j] = dc * z[j] * (1.0 - gc[j] * gc[j]);
      da_f[j] = dc * c_prev[j] * f[j] * (1.0 - f[j]);
      dc_next[j] = dc * f[j];
    }
    const Vec& x = tr.xs[t];
    add_outer(g.w_z, da_z, x);
    add_outer(g.w_f, da_f, x);
    add_outer(g.w_c, da_g, x);
    add_outer(g.w_o, da_o, x);
    add_outer(g.u_z, da_z, h_prev);
    add_outer(g.u_f, da_f, h_prev);
    add_outer(g.u_c, da_g, h_prev);
    add_outer(g.u_o, da_o, h_prev);
    axpy(g.b_z.span(), 1.0, da_z);
    axpy(g.b_f.span(), 1.0, da_f);
    axpy(g.b_c.span(), 1.0, da_g);
    axpy(g.b_o.span(), 1.0, da_o);

    auto demb = g.w_emb.row(s.tokens[t]);
    add_matvec_t(demb, p.w_z, da_z);
    add_matvec_t(demb, p.w_f, da_f);
    add_matvec_t(demb, p.w_c, da_g);
    add_matvec_t(demb, p.w_o, da_o);

    std::fill(dh_next.data.begin(), dh_next.data.end(), 0.0);
    add_matvec_t(dh_next.span(), p.u_z, da_z);
    add_matvec_t(dh_next.span(), p.u_f, da_f);
    add_matvec_t(dh_next.span(), p.u_c, da_g);
    add_matvec_t(dh_next.span(), p.u_o, da_o);
  }
  g.h0 = dh_next;
  g.c0 = dc_next;
  return g;
}

double error_rate(const ForwardTrace& tr, const SequenceSample& s) {
  const auto& p = tr.probs.data;
  const auto pred = static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin());
  return pred == s.targets[0] ? 0.0 : 1.0;
}

}  // namespace gradmine::lstm
