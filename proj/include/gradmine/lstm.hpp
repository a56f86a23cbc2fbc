#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "gradmine/params.hpp"
#include "gradmine/rng.hpp"
#include "gradmine/sequence.hpp"
#include "gradmine/tensor.hpp"

namespace gradmine::lstm {

struct Dims {
  std::size_t embed = 4;
  std::size_t hidden = 5;
  std::size_t vocab = 6;
  std::size_t classes = 2;
};

// LSTM cell without peepholes, read out by mean-pooling the hidden states:
//   z_t = sig(w_z x_t + u_z h_{t-1} + b_z)      input gate
//   f_t = sig(w_f x_t + u_f h_{t-1} + b_f)      forget gate
//   g_t = tanh(w_c x_t + u_c h_{t-1} + b_c)     candidate cell
//   c_t = z_t * g_t + f_t * c_{t-1}
//   o_t = sig(w_o x_t + u_o h_{t-1} + b_o)
//   h_t = o_t * tanh(c_t)
//   p   = softmax(w_cls mean(h_1..h_T) + b_cls)
struct Params {
  Mat w_emb;
  Mat w_z, w_f, w_c, w_o;  // hidden x embed
  Mat u_z, u_f, u_c, u_o;  // hidden x hidden
  Vec b_z, b_f, b_c, b_o;
  Mat w_cls;  // classes x hidden
  Vec b_cls;
  Vec h0, c0;

  static Params zeros(const Dims& dims);
  Dims dims() const;
  void validate() const;

  std::vector<BlockRef> blocks();
  std::vector<ConstBlockRef> blocks() const;

  bool operator==(const Params&) const = default;
};

using Gradients = Params;

// Uniform +-1/sqrt(fan_in) weights, embeddings in +-0.5; zero biases except b_f = 1.
Params init(const Dims& dims, std::uint64_t seed);

struct ForwardTrace {
  std::vector<std::size_t> tokens;
  std::vector<Vec> xs;
  std::vector<Vec> z, f, g, o;  // per step
  std::vector<Vec> c;           // c_0 .. c_T
  std::vector<Vec> h;           // h_0 .. h_T
  Vec pooled;
  Vec probs;
  double loss = 0.0;
};

// Throws InvalidInput when the sample is not single-labelled or a token is out of range.
ForwardTrace forward(const Params& p, const SequenceSample& s);
Gradients backward(const Params& p, const SequenceSample& s, const ForwardTrace& tr);

double error_rate(const ForwardTrace& tr, const SequenceSample& s);

inline constexpr std::string_view kDefaultBase = "w_c";

struct Model {
  using Params = lstm::Params;
  using Sample = SequenceSample;
  static constexpr std::string_view kind = "lstm";
  static constexpr std::string_view default_base = kDefaultBase;

  double loss(const Params& p, const Sample& s, Rng&) const { return forward(p, s).loss; }

  std::pair<double, Gradients> loss_and_grad(const Params& p, const Sample& s, Rng&) const {
    auto tr = forward(p, s);
    auto g = backward(p, s, tr);
    return {tr.loss, std::move(g)};
  }

  double error(const Params& p, const Sample& s, Rng&) const {
    return error_rate(forward(p, s), s);
  }
};

}  // namespace gradmine::lstm
