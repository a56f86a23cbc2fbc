#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "gradmine/params.hpp"
#include "gradmine/rng.hpp"
#include "gradmine/sequence.hpp"
#include "gradmine/tensor.hpp"

namespace gradmine::rnn {

struct Dims {
  std::size_t embed = 4;   // d
  std::size_t hidden = 5;  // D_h
  std::size_t vocab = 6;   // N_v
};

// Vanilla recurrent net:
//   x_t = w_emb[token_t]
//   h_t = tanh(w_h h_{t-1} + w_x x_t + b_h)
//   y_t = softmax(w_s h_t + b_y)
struct Params {
  Mat w_emb;  // vocab x embed
  Mat w_x;    // hidden x embed
  Mat w_h;    // hidden x hidden
  Mat w_s;    // vocab x hidden
  Vec b_h;
  Vec b_y;
  Vec h0;

  static Params zeros(const Dims& dims);
  Dims dims() const;
  // Throws InvalidShape when blocks disagree with each other.
  void validate() const;

  std::vector<BlockRef> blocks();
  std::vector<ConstBlockRef> blocks() const;

  bool operator==(const Params&) const = default;
};

using Gradients = Params;

// Weights uniform in +-1/sqrt(fan_in), embeddings in +-0.5. Biases and h0 start at zero.
Params init(const Dims& dims, std::uint64_t seed);

struct ForwardTrace {
  std::vector<std::size_t> tokens;  // copy, to detect mismatched traces
  std::vector<Vec> xs;              // embedded inputs, one per step
  std::vector<Vec> hs;              // h_0 .. h_T (hs[0] = h0)
  std::vector<Vec> ys;              // y_1 .. y_T
  double loss = 0.0;
};

ForwardTrace forward(const Params& p, const SequenceSample& s);

// Full backpropagation through time; no truncation.
Gradients backward(const Params& p, const SequenceSample& s, const ForwardTrace& tr);

// Fraction of scored steps whose argmax output differs from the target.
double error_rate(const ForwardTrace& tr, const SequenceSample& s);

inline constexpr std::string_view kDefaultBase = "w_x";

// Adapter used by the generic miner and trainer.
struct Model {
  using Params = rnn::Params;
  using Sample = SequenceSample;
  static constexpr std::string_view kind = "rnn";
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

}  // namespace gradmine::rnn
