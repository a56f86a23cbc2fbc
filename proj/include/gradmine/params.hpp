#pragma once

#include <concepts>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gradmine/error.hpp"
#include "gradmine/tensor.hpp"

namespace gradmine {

// Named view of one learned block. Vectors appear as n x 1.
template <class T>
struct BasicBlockRef {
  std::string_view name;
  std::span<T> values;
  std::size_t rows;
  std::size_t cols;
};

using BlockRef = BasicBlockRef<double>;
using ConstBlockRef = BasicBlockRef<const double>;

inline BlockRef block(std::string_view name, Mat& m) { return {name, m.data, m.rows, m.cols}; }
inline BlockRef block(std::string_view name, Vec& v) { return {name, v.data, v.size(), 1}; }
inline ConstBlockRef block(std::string_view name, const Mat& m) {
  return {name, m.data, m.rows, m.cols};
}
inline ConstBlockRef block(std::string_view name, const Vec& v) {
  return {name, v.data, v.size(), 1};
}

// Parameter sets double as gradient sets: a gradient has the parameter's type
// and one block per parameter, shape-matched.
template <class P>
concept ParamSet = std::copyable<P> && requires(P& p, const P& cp) {
  { p.blocks() } -> std::same_as<std::vector<BlockRef>>;
  { cp.blocks() } -> std::same_as<std::vector<ConstBlockRef>>;
};

template <ParamSet P>
ConstBlockRef find_block(const P& p, std::string_view name) {
  for (const auto& b : p.blocks())
    if (b.name == name) return b;
  throw ConfigError("unknown parameter block '" + std::string(name) + "'");
}

template <ParamSet P>
Mat block_matrix(const P& p, std::string_view name) {
  const auto b = find_block(p, name);
  return Mat(b.rows, b.cols, std::vector<double>(b.values.begin(), b.values.end()));
}

template <ParamSet P>
std::vector<std::string> block_names(const P& p) {
  std::vector<std::string> names;
  for (const auto& b : p.blocks()) names.emplace_back(b.name);
  return names;
}

template <ParamSet P>
P zeros_like(const P& p) {
  P z = p;
  for (auto& b : z.blocks())
    for (auto& x : b.values) x = 0.0;
  return z;
}

template <ParamSet P>
std::size_t param_count(const P& p) {
  std::size_t n = 0;
  for (const auto& b : p.blocks()) n += b.values.size();
  return n;
}

template <ParamSet P>
std::vector<double> flatten(const P& p) {
  std::vector<double> out;
  out.reserve(param_count(p));
  for (const auto& b : p.blocks()) out.insert(out.end(), b.values.begin(), b.values.end());
  return out;
}

template <ParamSet P>
bool all_finite(const P& p) {
  for (const auto& b : p.blocks())
    if (!all_finite(b.values)) return false;
  return true;
}

template <ParamSet P>
void require_same_shape(const P& a, const P& b) {
  const auto ab = a.blocks();
  const auto bb = b.blocks();
  if (ab.size() != bb.size()) throw InvalidShape("parameter sets differ in block count");
  for (std::size_t i = 0; i < ab.size(); ++i) {
    if (ab[i].rows != bb[i].rows || ab[i].cols != bb[i].cols) {
      throw InvalidShape("block '" + std::string(ab[i].name) + "' shape mismatch");
    }
  }
}

// Norm of the selected gradient block; the importance signal of a sample.
template <ParamSet P>
double grad_norm(const P& grads, std::string_view selector, NormKind kind = NormKind::frobenius) {
  const auto b = find_block(grads, selector);
  if (kind == NormKind::frobenius) return frobenius_norm(b.values);
  return spectral_norm(block_matrix(grads, selector));
}

}  // namespace gradmine
