#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "gradmine/params.hpp"
#include "gradmine/rng.hpp"
#include "gradmine/tensor.hpp"

namespace gradmine::rnnrbm {

struct Dims {
  std::size_t visible = 88;  // n_v
  std::size_t hidden = 150;  // n_h
  std::size_t recurrent = 100;  // D_u
};

// RBM whose biases are driven by a tanh recurrence over the visible frames:
//   bv_t = b_v + w_uv u_{t-1}
//   bh_t = b_h + w_uh u_{t-1}
//   u_t  = tanh(b_u + w_uu u_{t-1} + w_vu v_t)
struct Params {
  Mat w;     // visible x hidden, shared RBM weights
  Vec b_v;
  Vec b_h;
  Mat w_uv;  // visible x recurrent
  Mat w_uh;  // hidden x recurrent
  Mat w_uu;  // recurrent x recurrent
  Mat w_vu;  // recurrent x visible
  Vec b_u;
  Vec u0;

  static Params zeros(const Dims& dims);
  Dims dims() const;
  void validate() const;

  std::vector<BlockRef> blocks();
  std::vector<ConstBlockRef> blocks() const;

  bool operator==(const Params&) const = default;
};

using Gradients = Params;

// Small uniform weights (+-0.01 for w, +-1/sqrt(fan_in) for the recurrence), zero biases.
Params init(const Dims& dims, std::uint64_t seed);

// Binary piano-roll slices, all of the same width.
struct FrameSequence {
  std::vector<Vec> frames;

  std::size_t length() const noexcept { return frames.size(); }
  std::size_t width() const noexcept { return frames.empty() ? 0 : frames[0].size(); }

  bool operator==(const FrameSequence&) const = default;
};

struct GibbsStep {
  Vec h_sample;
  Vec v_prob;
  Vec v_sample;
};

// One alternating step v -> h -> v'. Draws n_h uniforms for h, then n_v for v'.
GibbsStep gibbs_step(const Mat& w, const Vec& bv, const Vec& bh, const Vec& v, Rng& rng);

// -b_v.v - sum_j softplus((w^T v + b_h)_j)
double free_energy(const Mat& w, const Vec& bv, const Vec& bh, const Vec& v);

struct ForwardResult {
  std::vector<Vec> bv;          // per step
  std::vector<Vec> bh;          // per step
  std::vector<Vec> u;           // u_0 .. u_T
  std::vector<Vec> recon_prob;  // last v' probability of each k-step chain
  std::vector<Vec> negatives;   // chain end samples v_k
  double cost = 0.0;            // mean per-unit binary cross-entropy of the reconstruction
};

// Runs the recurrence and a k-step Gibbs chain from every data frame.
ForwardResult forward(const Params& p, const FrameSequence& s, int k, Rng& rng);

// CD surrogate (1/T) sum_t [F(v_t) - F(neg_t)] with biases from the recurrence.
double surrogate_objective(const Params& p, const FrameSequence& s,
                           const std::vector<Vec>& negatives);

// Exact gradient of surrogate_objective with the negatives held constant.
Gradients surrogate_gradient(const Params& p, const FrameSequence& s,
                             const std::vector<Vec>& negatives);

// CD-k estimate: forward() for the negatives, then surrogate_gradient().
Gradients cd_gradient(const Params& p, const FrameSequence& s, int k, Rng& rng);

// Fraction of visible bits whose thresholded reconstruction disagrees with the data.
double reconstruction_error(const ForwardResult& fr, const FrameSequence& s);

inline constexpr std::string_view kDefaultBase = "w";

struct Model {
  using Params = rnnrbm::Params;
  using Sample = FrameSequence;
  static constexpr std::string_view kind = "rnnrbm";
  static constexpr std::string_view default_base = kDefaultBase;

  int cd_steps = 1;

  double loss(const Params& p, const Sample& s, Rng& rng) const {
    return forward(p, s, cd_steps, rng).cost;
  }

  std::pair<double, Gradients> loss_and_grad(const Params& p, const Sample& s, Rng& rng) const {
    auto fr = forward(p, s, cd_steps, rng);
    return {fr.cost, surrogate_gradient(p, s, fr.negatives)};
  }

  double error(const Params& p, const Sample& s, Rng& rng) const {
    return reconstruction_error(forward(p, s, cd_steps, rng), s);
  }
};

}  // namespace gradmine::rnnrbm
