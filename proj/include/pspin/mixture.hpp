#pragma once

#include <utility>
#include <vector>

#include "pspin/errors.hpp"

namespace pspin {

/// Mixture coefficients (c_p) with sum c_p^2 = 1, degrees p >= 2 sorted ascending.
struct MixtureSpec {
  std::vector<std::pair<int, double>> coefficients;  // (p, c_p), sorted by p

  int p_max() const { return coefficients.back().first; }
  bool all_even() const {
    for (auto& [p, c] : coefficients)
      if (p % 2 != 0) return false;
    return true;
  }
  bool operator==(const MixtureSpec&) const = default;
};

// Validates and returns the spec; rejects malformed input instead of renormalizing.
MixtureSpec validate_mixture(const std::vector<std::pair<int, double>>& raw);

// xi(s) = sum_p c_p^2 s^p, |s| <= 1.
double xi(const MixtureSpec& spec, double s);

// Convenience: the SK mixture {(2, 1.0)}.
MixtureSpec sk_mixture();

}  // namespace pspin
