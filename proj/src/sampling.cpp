#include "gradmine/sampling.hpp"

#include <cmath>
#include <deque>

#include "gradmine/error.hpp"

namespace gradmine {

SamplingDistribution::SamplingDistribution(std::span<const double> probs) {
  if (probs.empty()) throw InvalidDistribution("empty distribution");
  double total = 0.0;
  for (double p : probs) {
    if (!std::isfinite(p) || p < 0.0) throw InvalidDistribution("negative or non-finite probability");
    total += p;
  }
  if (total <= 0.0) throw InvalidDistribution("distribution has zero total mass");

  const std::size_t n = probs.size();
  probs_.resize(n);
  for (std::size_t i = 0; i < n; ++i) probs_[i] = probs[i] / total;

  alias_prob_.assign(n, 0.0);
  alias_idx_.resize(n);
  std::vector<double> scaled(n);
  std::deque<std::size_t> small, large;
  for (std::size_t i = 0; i < n; ++i) {
    alias_idx_[i] = i;
    scaled[i] = probs_[i] * static_cast<double>(n);
    (scaled[i] < 1.0 ? small : large).push_back(i);
  }
  // Both worklists are consumed front-first, so ties resolve in ascending index order.
  while (!small.empty() && !large.empty()) {
    const std::size_t s = small.front();
    small.pop_front();
    const std::size_t l = large.front();
    large.pop_front();
    alias_prob_[s] = scaled[s];
    alias_idx_[s] = l;
    scaled[l] = (scaled[l] + scaled[s]) - 1.0;
    (scaled[l] < 1.0 ? small : large).push_back(l);
  }
  // Leftovers are 1 up to rounding.
  for (auto i : large) alias_prob_[i] = 1.0;
  for (auto i : small) alias_prob_[i] = 1.0;
}

std::vector<double> SamplingDistribution::reconstructed_mass() const {
  const std::size_t n = size();
  std::vector<double> mass(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    mass[i] += alias_prob_[i];
    if (alias_idx_[i] != i) mass[alias_idx_[i]] += 1.0 - alias_prob_[i];
  }
  for (auto& m : mass) m /= static_cast<double>(n);
  return mass;
}

std::size_t SamplingDistribution::draw(Rng& rng) const {
  const std::size_t column = uniform_index(rng, size());
  return uniform01(rng) < alias_prob_[column] ? column : alias_idx_[column];
}

std::vector<std::size_t> generate_sequence(const SamplingDistribution& d, std::size_t length,
                                           Rng& rng) {
  std::vector<std::size_t> seq;
  seq.reserve(length);
  for (std::size_t t = 0; t < length; ++t) seq.push_back(d.draw(rng));
  return seq;
}

std::vector<double> uniform_probs(std::size_t n) {
  return std::vector<double>(n, 1.0 / static_cast<double>(n));
}

}  // namespace gradmine
