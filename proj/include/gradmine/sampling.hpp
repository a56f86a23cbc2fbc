#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "gradmine/rng.hpp"

namespace gradmine {

// Vose alias tables over indices 0..N-1. Immutable once built; share freely,
// but give every consumer its own Rng.
class SamplingDistribution {
 public:
  // Renormalizes probs. Throws InvalidDistribution on negative or non-finite
  // entries, an empty vector, or zero total mass.
  explicit SamplingDistribution(std::span<const double> probs);

  std::size_t size() const noexcept { return probs_.size(); }
  const std::vector<double>& probs() const noexcept { return probs_; }
  const std::vector<double>& alias_prob() const noexcept { return alias_prob_; }
  const std::vector<std::size_t>& alias_idx() const noexcept { return alias_idx_; }

  // Probability mass the tables assign to each index; equals probs() up to rounding.
  std::vector<double> reconstructed_mass() const;

  // One column draw then one coin flip.
  std::size_t draw(Rng& rng) const;

 private:
  std::vector<double> probs_;
  std::vector<double> alias_prob_;
  std::vector<std::size_t> alias_idx_;
};

inline SamplingDistribution build_alias(std::span<const double> probs) {
  return SamplingDistribution(probs);
}

inline std::size_t draw(const SamplingDistribution& d, Rng& rng) { return d.draw(rng); }

// T i.i.d. draws with replacement, materialized up front.
std::vector<std::size_t> generate_sequence(const SamplingDistribution& d, std::size_t length,
                                           Rng& rng);

std::vector<double> uniform_probs(std::size_t n);

}  // namespace gradmine
