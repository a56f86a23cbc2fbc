#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gradmine/error.hpp"
#include "gradmine/optimizer.hpp"
#include "gradmine/params.hpp"
#include "gradmine/rng.hpp"
#include "gradmine/sampling.hpp"
#include "gradmine/tensor.hpp"

namespace gradmine {

struct FimConfig {
  double epsilon = 3e-3;      // stop once the private loss is <= epsilon
  double lr = 0.1;            // plain SGD step for private training
  std::size_t t_max = 5000;   // per-sample iteration cap
  std::uint64_t seed = 0;
  std::string base_selector;  // empty: the model's default base block
  NormKind norm_kind = NormKind::frobenius;
  double smoothing = 0.0;     // kappa in build_distribution
  std::size_t workers = 1;
  bool record_history = false;
  std::string keep_block;     // optional block kept per sample, e.g. "w_emb"

  void validate() const;
};

// Per-sample importance proxies and the derived sampling probabilities.
struct ImportanceTable {
  std::vector<double> norms;
  std::vector<double> probs;
  std::vector<std::size_t> iterations;
  std::vector<bool> converged;
  // provenance
  std::string model;
  std::string base_selector;
  double epsilon = 0.0;
  std::uint64_t seed = 0;
  std::string norm_kind = "frobenius";

  std::size_t size() const noexcept { return norms.size(); }
  std::size_t unconverged() const;
  // Equal lengths, non-negative norms, positive probs summing to one within tol.
  void validate(double tol = 1e-12) const;

  bool operator==(const ImportanceTable&) const = default;
};

// Accumulated private-training history of the base block.
struct HistoryRecord {
  Mat step_sum;              // sum_t lr * g(t)
  double step_norm_sum = 0;  // sum_t lr * ||g(t)||
  std::vector<double> losses;
};

// p_i = (norm_i + kappa * mean) / sum_j (norm_j + kappa * mean); kappa = 0 is the plain ratio.
std::vector<double> importance_probs(std::span<const double> norms, double kappa = 0.0);
SamplingDistribution build_distribution(const ImportanceTable& table, double kappa = 0.0);

// final == init - step_sum within 1e-9 elementwise, and
// ||final|| <= ||init|| + step_norm_sum. Throws UnsupportedOperation without a record.
bool history_sum_check(const Mat& final_base, const Mat& init_base,
                       const std::optional<HistoryRecord>& record);

// Mean pairwise Frobenius distance; diagnostic only.
double mean_pairwise_distance(std::span<const Mat> blocks);

// GRADMINE_WORKERS wins; otherwise requested, or hardware concurrency when 0.
std::size_t resolve_workers(std::size_t requested);

// Runs body(i) for i in [0, n) across workers. Each index runs exactly once;
// the first exception is rethrown after all workers stop.
void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& body);

struct MiningResult {
  ImportanceTable table;
  std::vector<std::optional<HistoryRecord>> history;  // filled when record_history
  std::vector<Mat> final_base;                        // per-sample trained base block
  std::vector<Mat> kept;                              // per-sample keep_block, if requested
};

// Trains one private copy of params0 per sample until its loss is <= epsilon
// (or t_max steps) and takes the norm of the trained base block as importance.
// Each sample owns an Rng seeded from (seed, index), so the result does not
// depend on worker count or scheduling.
template <class M>
MiningResult mine_importance(const M& model, std::span<const typename M::Sample> data,
                             const typename M::Params& params0, const FimConfig& cfg) {
  cfg.validate();
  if (data.empty()) throw InvalidInput("cannot mine importance of an empty dataset");
  const std::string selector =
      cfg.base_selector.empty() ? std::string(M::default_base) : cfg.base_selector;
  const Mat init_base = block_matrix(params0, selector);
  if (!cfg.keep_block.empty()) (void)find_block(params0, cfg.keep_block);

  const std::size_t n = data.size();
  MiningResult out;
  auto& t = out.table;
  t.norms.assign(n, 0.0);
  t.iterations.assign(n, 0);
  std::vector<char> converged(n, 0);
  out.history.resize(n);
  out.final_base.resize(n);
  if (!cfg.keep_block.empty()) out.kept.resize(n);

  parallel_for(n, cfg.workers, [&](std::size_t i) {
    Rng rng(derive_seed(cfg.seed, i));
    auto p = params0;
    std::optional<HistoryRecord> hist;
    if (cfg.record_history) hist = HistoryRecord{Mat(init_base.rows, init_base.cols), 0.0, {}};
    std::size_t steps = 0;
    bool done = false;
    for (;;) {
      auto [loss, g] = model.loss_and_grad(p, data[i], rng);
      if (!std::isfinite(loss)) {
        throw DivergenceError("private training of sample " + std::to_string(i) + " diverged");
      }
      if (hist) hist->losses.push_back(loss);
      if (loss <= cfg.epsilon) {
        done = true;
        break;
      }
      if (steps == cfg.t_max) break;
      if (hist) {
        const auto gb = find_block(g, selector);
        axpy(hist->step_sum.data, cfg.lr, gb.values);
        hist->step_norm_sum += cfg.lr * frobenius_norm(gb.values);
      }
      p = sgd_step(std::move(p), g, cfg.lr);
      ++steps;
    }
    out.final_base[i] = block_matrix(p, selector);
    t.norms[i] = matrix_norm(out.final_base[i], cfg.norm_kind);
    t.iterations[i] = steps;
    converged[i] = done ? 1 : 0;
    out.history[i] = std::move(hist);
    if (!cfg.keep_block.empty()) out.kept[i] = block_matrix(p, cfg.keep_block);
  });

  t.converged.assign(converged.begin(), converged.end());
  t.probs = importance_probs(t.norms, cfg.smoothing);
  t.model = std::string(M::kind);
  t.base_selector = selector;
  t.epsilon = cfg.epsilon;
  t.seed = cfg.seed;
  t.norm_kind = std::string(to_string(cfg.norm_kind));
  return out;
}

}  // namespace gradmine
