#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "gradmine/params.hpp"
#include "gradmine/rng.hpp"
#include "gradmine/sequence.hpp"
#include "gradmine/tensor.hpp"

namespace testing {

struct FdReport {
  std::size_t checked = 0;
  std::size_t violations = 0;
  double worst_rel = 0.0;  // largest |a - fd| / max(|a|, |fd|) among violations
  std::string worst_at;
};

// Central differences of `loss` against the analytic gradient `g`, coordinate
// by coordinate. A coordinate passes when |a - fd| <= abs_tol or
// |a - fd| <= rel_tol * max(|a|, |fd|).
template <gradmine::ParamSet P, class F>
FdReport fd_check(const P& p, const P& g, F&& loss, double h = 1e-5, double rel_tol = 1e-4,
                  double abs_tol = 1e-7) {
  FdReport rep;
  P probe = p;
  auto pb = probe.blocks();
  const auto gb = g.blocks();
  for (std::size_t b = 0; b < pb.size(); ++b) {
    for (std::size_t k = 0; k < pb[b].values.size(); ++k) {
      double& x = pb[b].values[k];
      const double saved = x;
      x = saved + h;
      const double up = loss(probe);
      x = saved - h;
      const double down = loss(probe);
      x = saved;
      const double fd = (up - down) / (2 * h);
      const double a = gb[b].values[k];
      const double diff = std::abs(a - fd);
      const double scale = std::max(std::abs(a), std::abs(fd));
      ++rep.checked;
      if (diff > abs_tol && diff > rel_tol * scale) {
        ++rep.violations;
        const double r = scale > 0 ? diff / scale : diff;
        if (r > rep.worst_rel) {
          rep.worst_rel = r;
          rep.worst_at = std::string(pb[b].name) + "[" + std::to_string(k) + "]";
        }
      }
    }
  }
  return rep;
}

inline void fill_uniform(std::span<double> xs, double scale, gradmine::Rng& rng) {
  for (auto& x : xs) x = scale * (2.0 * gradmine::uniform01(rng) - 1.0);
}

// Every block uniform in +-scale.
template <gradmine::ParamSet P>
void randomize(P& p, double scale, gradmine::Rng& rng) {
  for (auto& b : p.blocks()) fill_uniform(b.values, scale, rng);
}

inline gradmine::SequenceSample random_sequence(gradmine::Rng& rng, std::size_t vocab,
                                                std::size_t max_len, bool single_label,
                                                std::size_t classes = 0) {
  gradmine::SequenceSample s;
  const std::size_t len = 1 + gradmine::uniform_index(rng, max_len);
  for (std::size_t t = 0; t < len; ++t) s.tokens.push_back(gradmine::uniform_index(rng, vocab));
  if (single_label) {
    s.targets = {gradmine::uniform_index(rng, classes ? classes : vocab)};
  } else {
    for (std::size_t t = 0; t < len; ++t) s.targets.push_back(gradmine::uniform_index(rng, vocab));
  }
  return s;
}

inline gradmine::Vec random_binary(gradmine::Rng& rng, std::size_t n, double p = 0.5) {
  gradmine::Vec v(n);
  for (auto& x : v.data) x = gradmine::bernoulli(rng, p) ? 1.0 : 0.0;
  return v;
}

// Fresh scratch directory under the system temp dir, removed on destruction.
struct TempDir {
  std::filesystem::path path;

  explicit TempDir(const std::string& tag) {
    gradmine::Rng rng(std::random_device{}());
    path = std::filesystem::temp_directory_path() /
           ("gradmine_" + tag + "_" + std::to_string(rng() % 1000000000));
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  std::filesystem::path operator/(const std::string& name) const { return path / name; }
};

}  // namespace testing
