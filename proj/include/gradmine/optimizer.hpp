#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gradmine/error.hpp"
#include "gradmine/params.hpp"
#include "gradmine/rng.hpp"
#include "gradmine/sampling.hpp"

namespace gradmine {

// w - lr * g, block by block.
template <ParamSet P>
P sgd_step(P params, const P& grads, double lr) {
  require_same_shape(params, grads);
  auto pb = params.blocks();
  const auto gb = grads.blocks();
  for (std::size_t b = 0; b < pb.size(); ++b) {
    auto w = pb[b].values;
    const auto g = gb[b].values;
    for (std::size_t k = 0; k < w.size(); ++k) w[k] -= lr * g[k];
  }
  return params;
}

// Effective step lr / (n * p_i), written as lr * ((1/n) / p_i) so that
// p_i == 1.0/n yields exactly lr. Optionally capped at lr * clip.
double is_step_size(double lr, std::size_t n, double p_i, std::optional<double> clip = {});

template <ParamSet P>
P is_sgd_step(P params, const P& grads, double lr, std::size_t n, double p_i,
              std::optional<double> clip = {}) {
  return sgd_step(std::move(params), grads, is_step_size(lr, n, p_i, clip));
}

enum class SamplerKind { uniform, importance };

SamplerKind parse_sampler(std::string_view name);
std::string_view to_string(SamplerKind kind);

struct TrainConfig {
  double lr = 0.1;
  std::size_t epochs = 10;
  SamplerKind sampler = SamplerKind::uniform;
  std::vector<double> importance_probs;  // required when sampler == importance
  std::uint64_t seed = 0;
  std::size_t eval_every = 1;
  std::optional<double> clip;  // cap on (N p_i)^{-1}
  bool track_grad_var = true;

  void validate(std::size_t n) const;
  std::uint64_t hash() const;
};

struct EpochRecord {
  std::size_t epoch = 0;
  std::string split;
  double loss = 0.0;
  double error_rate = 0.0;
  double grad_var = 0.0;
  double wall_ms = 0.0;

  bool operator==(const EpochRecord&) const = default;
};

struct MetricsLog {
  std::vector<EpochRecord> records;
  std::uint64_t config_hash = 0;
  std::uint64_t seed = 0;

  // Loss series of one split, in epoch order.
  std::vector<double> losses(std::string_view split = "train") const;
  // First epoch whose loss on the split is <= target, if any.
  std::optional<std::size_t> first_epoch_at_or_below(double target,
                                                     std::string_view split = "train") const;
};

struct StreamingVariance {
  // sum_i ||g_i||^2 / (N^2 p_i) - ||mean g||^2, the exact variance of the
  // reweighted estimator, accumulated without storing per-sample gradients.
  std::vector<double> grad_sum;
  double weighted_sq = 0.0;
  std::size_t count = 0;

  void add(std::span<const double> g, double p_i, std::size_t n);
  double value() const;
};

template <class M>
struct TrainResult {
  typename M::Params params;
  MetricsLog log;
};

namespace detail {

template <class M>
EpochRecord evaluate(const M& model, const typename M::Params& p,
                     std::span<const typename M::Sample> data, std::span<const double> probs,
                     bool with_grad_var, std::uint64_t seed) {
  EpochRecord rec;
  Rng rng(seed);
  StreamingVariance var;
  double loss = 0.0, err = 0.0;
  const std::size_t n = data.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (with_grad_var) {
      auto [l, g] = model.loss_and_grad(p, data[i], rng);
      loss += l;
      var.add(flatten(g), probs[i], n);
    } else {
      loss += model.loss(p, data[i], rng);
    }
    err += model.error(p, data[i], rng);
  }
  rec.loss = loss / static_cast<double>(n);
  rec.error_rate = err / static_cast<double>(n);
  rec.grad_var = with_grad_var ? var.value() : 0.0;
  return rec;
}

}  // namespace detail

// Epoch-based SGD over a pre-generated index sequence. An epoch is N draws.
// Uniform and importance modes share the sampler machinery; they differ only
// in the distribution and the (N p_i)^{-1} step correction.
template <class M>
TrainResult<M> train(const M& model, std::span<const typename M::Sample> train_set,
                     std::span<const typename M::Sample> eval_set, typename M::Params params0,
                     const TrainConfig& cfg) {
  const std::size_t n = train_set.size();
  if (n == 0) throw InvalidInput("empty training set");
  cfg.validate(n);
  TrainResult<M> out{std::move(params0), {}};
  out.log.config_hash = cfg.hash();
  out.log.seed = cfg.seed;
  if (cfg.epochs == 0) return out;

  const bool importance = cfg.sampler == SamplerKind::importance;
  const std::vector<double> probs = importance ? cfg.importance_probs : uniform_probs(n);
  const SamplingDistribution dist(probs);
  Rng sampler_rng(derive_seed(cfg.seed, 1));
  Rng model_rng(derive_seed(cfg.seed, 2));
  const auto order = generate_sequence(dist, cfg.epochs * n, sampler_rng);
  const std::vector<double> eval_probs = uniform_probs(std::max<std::size_t>(eval_set.size(), 1));

  const auto start = std::chrono::steady_clock::now();
  auto& p = out.params;
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    for (std::size_t step = 0; step < n; ++step) {
      const std::size_t i = order[(epoch - 1) * n + step];
      auto [loss, g] = model.loss_and_grad(p, train_set[i], model_rng);
      if (!std::isfinite(loss) || !all_finite(g)) {
        throw DivergenceError("non-finite loss or gradient at epoch " + std::to_string(epoch) +
                              ", step " + std::to_string(step) + ", sample " + std::to_string(i));
      }
      if (importance) {
        p = is_sgd_step(std::move(p), g, cfg.lr, n, probs[i], cfg.clip);
      } else {
        p = sgd_step(std::move(p), g, cfg.lr);
      }
    }
    if (epoch % cfg.eval_every != 0 && epoch != cfg.epochs) continue;
    const double wall =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    auto rec = detail::evaluate(model, p, train_set, probs, cfg.track_grad_var,
                                derive_seed(cfg.seed, 1000 + epoch));
    rec.epoch = epoch;
    rec.split = "train";
    rec.wall_ms = wall;
    if (!std::isfinite(rec.loss)) {
      throw DivergenceError("non-finite training loss at end of epoch " + std::to_string(epoch));
    }
    out.log.records.push_back(rec);
    if (!eval_set.empty()) {
      auto ev = detail::evaluate(model, p, eval_set, eval_probs, cfg.track_grad_var,
                                 derive_seed(cfg.seed, 500000 + epoch));
      ev.epoch = epoch;
      ev.split = "eval";
      ev.wall_ms = wall;
      out.log.records.push_back(ev);
    }
  }
  return out;
}

template <class M>
TrainResult<M> train(const M& model, std::span<const typename M::Sample> train_set,
                     typename M::Params params0, const TrainConfig& cfg) {
  return train(model, train_set, std::span<const typename M::Sample>{}, std::move(params0), cfg);
}

}  // namespace gradmine
