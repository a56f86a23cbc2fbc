#include "gradmine/fim.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>

namespace gradmine {

void FimConfig::validate() const {
  if (!(epsilon > 0.0)) throw ConfigError("epsilon must be positive");
  if (!(lr > 0.0)) throw ConfigError("FIM step size must be positive");
  if (t_max < 1) throw ConfigError("t_max must be at least 1");
  if (!(smoothing >= 0.0)) throw ConfigError("smoothing must be non-negative");
}

std::size_t ImportanceTable::unconverged() const {
  return static_cast<std::size_t>(std::count(converged.begin(), converged.end(), false));
}

void ImportanceTable::validate(double tol) const {
  const std::size_t n = norms.size();
  if (n == 0) throw InvalidInput("importance table is empty");
  if (probs.size() != n || iterations.size() != n || converged.size() != n) {
    throw InvalidInput("importance table columns differ in length");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!(norms[i] >= 0.0) || !std::isfinite(norms[i])) throw InvalidInput("negative or non-finite norm");
    if (!(probs[i] > 0.0) || !std::isfinite(probs[i])) throw InvalidDistribution("non-positive probability");
    sum += probs[i];
  }
  if (std::abs(sum - 1.0) > tol) {
    throw InvalidDistribution("probabilities sum to " + std::to_string(sum));
  }
}

std::vector<double> importance_probs(std::span<const double> norms, double kappa) {
  if (norms.empty()) throw InvalidInput("no norms");
  if (!(kappa >= 0.0)) throw ConfigError("smoothing must be non-negative");
  double total = 0.0;
  for (double x : norms) {
    if (!(x >= 0.0) || !std::isfinite(x)) throw InvalidDistribution("norms must be non-negative");
    total += x;
  }
  const double n = static_cast<double>(norms.size());
  const double shift = kappa * (total / n);
  const double denom = total + n * shift;
  if (!(denom > 0.0)) throw DegenerateDistribution("all importance norms are zero");
  if (kappa == 0.0 && std::find(norms.begin(), norms.end(), 0.0) != norms.end()) {
    throw DegenerateDistribution("a zero norm gives a zero probability; use smoothing");
  }
  std::vector<double> p(norms.size());
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = (norms[i] + shift) / denom;
  return p;
}

SamplingDistribution build_distribution(const ImportanceTable& table, double kappa) {
  return SamplingDistribution(importance_probs(table.norms, kappa));
}

bool history_sum_check(const Mat& final_base, const Mat& init_base,
                       const std::optional<HistoryRecord>& record) {
  if (!record) throw UnsupportedOperation("mining ran without history recording");
  const auto& sum = record->step_sum;
  if (final_base.rows != init_base.rows || final_base.cols != init_base.cols ||
      sum.rows != init_base.rows || sum.cols != init_base.cols) {
    throw InvalidShape("history blocks differ in shape");
  }
  for (std::size_t k = 0; k < init_base.data.size(); ++k) {
    if (std::abs(final_base.data[k] - (init_base.data[k] - sum.data[k])) > 1e-9) return false;
  }
  const double bound = frobenius_norm(init_base) + record->step_norm_sum;
  // Rounding in the two norm evaluations can differ by a few ulps.
  return frobenius_norm(final_base) <= bound * (1.0 + 1e-12);
}

double mean_pairwise_distance(std::span<const Mat> blocks) {
  const std::size_t n = blocks.size();
  if (n < 2) return 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < blocks[i].data.size(); ++k) {
        const double d = blocks[i].data[k] - blocks[j].data[k];
        s += d * d;
      }
      total += std::sqrt(s);
    }
  }
  return total / static_cast<double>(n * (n - 1) / 2);
}

std::size_t resolve_workers(std::size_t requested) {
  if (const char* env = std::getenv("GRADMINE_WORKERS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<std::size_t>(v);
  }
  if (requested > 0) return requested;
  return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(std::size_t n, std::size_t workers,
                  const std::function<void(std::size_t)>& body) {
  workers = std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(n, 1));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr first;
  std::mutex mu;
  auto run = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n || failed.load()) return;
      try {
        body(i);
      } catch (...) {
        std::lock_guard lock(mu);
        if (!first) first = std::current_exception();
        failed = true;
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(run);
  for (auto& th : pool) th.join();
  if (first) std::rethrow_exception(first);
}

}  // namespace gradmine
