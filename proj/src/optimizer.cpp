#include "gradmine/optimizer.hpp"

#include <algorithm>
#include <cstdio>

namespace gradmine {

double is_step_size(double lr, std::size_t n, double p_i, std::optional<double> clip) {
  if (!(p_i > 0.0) || !std::isfinite(p_i)) {
    throw InvalidProbability("sampling probability must be positive, got " + std::to_string(p_i));
  }
  double factor = (1.0 / static_cast<double>(n)) / p_i;
  if (clip) factor = std::min(factor, *clip);
  return lr * factor;
}

SamplerKind parse_sampler(std::string_view name) {
  if (name == "uniform") return SamplerKind::uniform;
  if (name == "importance") return SamplerKind::importance;
  throw ConfigError("unknown sampler '" + std::string(name) + "'");
}

std::string_view to_string(SamplerKind kind) {
  return kind == SamplerKind::uniform ? "uniform" : "importance";
}

void TrainConfig::validate(std::size_t n) const {
  if (!(lr > 0.0)) throw ConfigError("step size must be positive");
  if (eval_every == 0) throw ConfigError("eval cadence must be at least 1");
  if (clip && !(*clip > 0.0)) throw ConfigError("step clip must be positive");
  if (sampler == SamplerKind::importance) {
    if (importance_probs.size() != n) {
      throw ConfigError("importance table has " + std::to_string(importance_probs.size()) +
                        " entries for " + std::to_string(n) + " samples");
    }
    for (double p : importance_probs)
      if (!(p > 0.0)) throw InvalidProbability("importance probabilities must be positive");
  }
}

std::uint64_t TrainConfig::hash() const {
  char buf[256];
  std::snprintf(buf, sizeof buf, "lr=%.17g;epochs=%zu;sampler=%d;seed=%llu;eval=%zu;clip=%.17g",
                lr, epochs, static_cast<int>(sampler), static_cast<unsigned long long>(seed),
                eval_every, clip.value_or(-1.0));
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](const void* data, std::size_t len) {
    const auto* bytes = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
      h ^= bytes[i];
      h *= 0x100000001b3ULL;
    }
  };
  mix(buf, std::char_traits<char>::length(buf));
  mix(importance_probs.data(), importance_probs.size() * sizeof(double));
  return h;
}

std::vector<double> MetricsLog::losses(std::string_view split) const {
  std::vector<double> out;
  for (const auto& r : records)
    if (r.split == split) out.push_back(r.loss);
  return out;
}

std::optional<std::size_t> MetricsLog::first_epoch_at_or_below(double target,
                                                               std::string_view split) const {
  for (const auto& r : records)
    if (r.split == split && r.loss <= target) return r.epoch;
  return std::nullopt;
}

void StreamingVariance::add(std::span<const double> g, double p_i, std::size_t n) {
  if (grad_sum.empty()) grad_sum.assign(g.size(), 0.0);
  axpy(grad_sum, 1.0, g);
  const double nn = static_cast<double>(n);
  weighted_sq += dot(g, g) / (nn * nn * p_i);
  ++count;
}

double StreamingVariance::value() const {
  if (count == 0) return 0.0;
  const double inv = 1.0 / static_cast<double>(count);
  double mean_sq = 0.0;
  for (double s : grad_sum) mean_sq += (s * inv) * (s * inv);
  return std::max(0.0, weighted_sq - mean_sq);
}

}  // namespace gradmine
