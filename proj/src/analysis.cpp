#include "gradmine/analysis.hpp"

#include <algorithm>
#include <cmath>

#include "gradmine/error.hpp"

namespace gradmine::analysis {

void ConvexProblem::validate() const {
  if (points.size() != labels.size()) throw InvalidInput("points and labels differ in count");
  if (!(reg > 0.0)) throw ConfigError("regularization must be positive");
  for (const auto& x : points)
    if (x.size() != dim()) throw InvalidShape("points differ in dimension");
  for (int y : labels)
    if (y != -1 && y != 1) throw InvalidInput("labels must be -1 or +1");
}

LossGrad svm_loss_grad(const ConvexProblem& prob, std::size_t i, const Vec& w) {
  if (i >= prob.size()) throw InvalidInput("sample index out of range");
  const Vec& x = prob.points[i];
  if (w.size() != x.size()) throw InvalidShape("weight and point dimensions differ");
  const double y = prob.labels[i];
  const double slack = std::max(0.0, 1.0 - y * dot(w, x));
  LossGrad out;
  out.loss = slack * slack + 0.5 * prob.reg * dot(w, w);
  out.grad = Vec(w.size());
  for (std::size_t k = 0; k < w.size(); ++k) out.grad[k] = -2.0 * slack * y * x[k] + prob.reg * w[k];
  return out;
}

LossGrad svm_full_loss_grad(const ConvexProblem& prob, const Vec& w) {
  LossGrad out{0.0, Vec(w.size())};
  const double inv = 1.0 / static_cast<double>(prob.size());
  for (std::size_t i = 0; i < prob.size(); ++i) {
    auto lg = svm_loss_grad(prob, i, w);
    out.loss += inv * lg.loss;
    axpy(out.grad.span(), inv, lg.grad);
  }
  return out;
}

double svm_lipschitz_bound(const Vec& x, double reg) {
  if (!(reg > 0.0)) throw ConfigError("regularization must be positive");
  const double nx = frobenius_norm(x.data);
  const double sr = std::sqrt(reg);
  return 2.0 * (1.0 + nx / sr) * nx + sr;
}

Vec svm_minimize(const ConvexProblem& prob, int max_iter, double tol) {
  prob.validate();
  // Gradient Lipschitz constant of F: 2 * mean ||x||^2 + reg.
  double smooth = prob.reg;
  for (const auto& x : prob.points) smooth += 2.0 * dot(x, x) / static_cast<double>(prob.size());
  Vec w(prob.dim());
  for (int it = 0; it < max_iter; ++it) {
    auto lg = svm_full_loss_grad(prob, w);
    if (frobenius_norm(lg.grad.data) <= tol) break;
    axpy(w.span(), -1.0 / smooth, lg.grad);
  }
  return w;
}

double svm_sigma2(const ConvexProblem& prob) {
  const Vec w = svm_minimize(prob);
  double s = 0.0;
  for (std::size_t i = 0; i < prob.size(); ++i) {
    const auto g = svm_loss_grad(prob, i, w).grad;
    s += dot(g, g);
  }
  return s / static_cast<double>(prob.size());
}

std::vector<double> lipschitz_distribution(std::span<const double> bounds) {
  if (bounds.empty()) throw InvalidInput("no bounds");
  double total = 0.0;
  for (double l : bounds) {
    if (!(l >= 0.0) || !std::isfinite(l)) throw InvalidDistribution("bounds must be non-negative");
    total += l;
  }
  if (!(total > 0.0)) throw DegenerateDistribution("all bounds are zero");
  std::vector<double> p(bounds.size());
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = bounds[i] / total;
  return p;
}

std::vector<double> optimal_distribution(std::span<const Vec> grads) {
  std::vector<double> norms;
  norms.reserve(grads.size());
  for (const auto& g : grads) norms.push_back(frobenius_norm(g.data));
  try {
    return lipschitz_distribution(norms);
  } catch (const DegenerateDistribution&) {
    throw DegenerateDistribution("all gradients are zero");
  }
}

Vec mean_gradient(std::span<const Vec> grads) {
  if (grads.empty()) throw InvalidInput("no gradients");
  Vec m(grads[0].size());
  const double inv = 1.0 / static_cast<double>(grads.size());
  for (const auto& g : grads) axpy(m.span(), inv, g);
  return m;
}

Vec expected_update(std::span<const Vec> grads, std::span<const double> probs) {
  if (grads.size() != probs.size() || grads.empty()) throw InvalidInput("gradients and probabilities differ in count");
  const double n = static_cast<double>(grads.size());
  Vec e(grads[0].size());
  for (std::size_t i = 0; i < grads.size(); ++i) {
    if (!(probs[i] > 0.0)) throw InvalidProbability("probabilities must be positive");
    axpy(e.span(), probs[i] / (n * probs[i]), grads[i]);
  }
  return e;
}

double gradient_variance(std::span<const Vec> grads, std::span<const double> probs) {
  if (grads.size() != probs.size() || grads.empty()) throw InvalidInput("gradients and probabilities differ in count");
  const Vec mean = mean_gradient(grads);
  const double n = static_cast<double>(grads.size());
  double var = 0.0;
  for (std::size_t i = 0; i < grads.size(); ++i) {
    const double p = probs[i];
    if (p < 0.0 || !std::isfinite(p)) throw InvalidProbability("negative probability");
    if (p == 0.0) {
      if (frobenius_norm(grads[i].data) != 0.0) {
        throw InvalidProbability("zero probability on a sample with nonzero gradient");
      }
      continue;
    }
    const double scale = 1.0 / (n * p);
    double s = 0.0;
    for (std::size_t k = 0; k < mean.size(); ++k) {
      const double d = scale * grads[i][k] - mean[k];
      s += d * d;
    }
    var += p * s;
  }
  return var;
}

double bound_ratio(std::span<const double> bounds) {
  if (bounds.empty()) throw InvalidInput("no bounds");
  double sum = 0.0, sq = 0.0;
  for (double l : bounds) {
    if (!(l >= 0.0)) throw InvalidInput("bounds must be non-negative");
    sum += l;
    sq += l * l;
  }
  if (!(sum > 0.0)) throw DegenerateDistribution("all bounds are zero");
  return static_cast<double>(bounds.size()) * sq / (sum * sum);
}

}  // namespace gradmine::analysis
