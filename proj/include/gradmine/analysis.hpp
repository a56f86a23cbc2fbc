#pragma once

#include <span>
#include <vector>

#include "gradmine/tensor.hpp"

namespace gradmine::analysis {

// L2-regularized squared-hinge SVM:
//   f_i(w) = max(0, 1 - y_i w.x_i)^2 + (reg/2) ||w||^2
struct ConvexProblem {
  std::vector<Vec> points;
  std::vector<int> labels;  // -1 or +1
  double reg = 1.0;

  std::size_t size() const noexcept { return points.size(); }
  std::size_t dim() const noexcept { return points.empty() ? 0 : points[0].size(); }
  void validate() const;
};

struct LossGrad {
  double loss = 0.0;
  Vec grad;
};

LossGrad svm_loss_grad(const ConvexProblem& prob, std::size_t i, const Vec& w);

// F(w) = (1/N) sum_i f_i(w) and its gradient.
LossGrad svm_full_loss_grad(const ConvexProblem& prob, const Vec& w);

// 2 (1 + ||x|| / sqrt(reg)) ||x|| + sqrt(reg). Dominates ||grad f_i(w)|| on the
// ball ||w|| <= 1/sqrt(reg).
double svm_lipschitz_bound(const Vec& x, double reg);

// Strong-convexity modulus of every f_i.
inline double svm_strong_convexity(const ConvexProblem& prob) { return prob.reg; }

// Minimizer of F by full-batch gradient descent with step 1/L_F.
Vec svm_minimize(const ConvexProblem& prob, int max_iter = 20000, double tol = 1e-12);

// E_uniform ||grad f_i(w*)||^2 at the numerically located minimizer.
double svm_sigma2(const ConvexProblem& prob);

// p_i = L_i / sum_j L_j. Throws DegenerateDistribution when all are zero.
std::vector<double> lipschitz_distribution(std::span<const double> bounds);

// p_i proportional to ||g_i||, the variance-minimizing distribution.
std::vector<double> optimal_distribution(std::span<const Vec> grads);

Vec mean_gradient(std::span<const Vec> grads);

// sum_i p_i (N p_i)^{-1} g_i, the expectation of the reweighted estimator.
Vec expected_update(std::span<const Vec> grads, std::span<const double> probs);

// sum_i p_i ||(N p_i)^{-1} g_i - mean g||^2 by exact enumeration.
// A zero probability is allowed only where the gradient is zero.
double gradient_variance(std::span<const Vec> grads, std::span<const double> probs);

// N sum L_i^2 / (sum L_i)^2, >= 1 by Cauchy-Schwarz.
double bound_ratio(std::span<const double> bounds);

}  // namespace gradmine::analysis
