#pragma once

#include <cstddef>
#include <vector>

namespace gradmine {

// One raw training sequence. targets is either one index per token (sequence
// labelling) or a single class label (classification, scored at the last step).
struct SequenceSample {
  std::vector<std::size_t> tokens;
  std::vector<std::size_t> targets;

  std::size_t length() const noexcept { return tokens.size(); }
  bool single_label() const noexcept { return targets.size() == 1; }

  bool operator==(const SequenceSample&) const = default;
};

}  // namespace gradmine
