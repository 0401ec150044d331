#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "pspin/energy.hpp"
#include "pspin/tensor.hpp"

namespace pspin {

inline constexpr int kDefaultExactCap = 26;

/// Per-magnetization-level maxima of H over the hypercube, from one Gray-code
/// sweep. Levels are indexed by (m + N)/2 for m in {-N, -N+2, ..., N}.
struct LevelRecord {
  int m = 0;
  double value = 0.0;
  SpinVector sigma;
  std::uint64_t count = 0;  // states visited at this level
};

struct MagnetizationProfile {
  int N = 0;
  std::vector<LevelRecord> levels;
  double global_value = 0.0;  // first-visited argmax in sweep order
  SpinVector global_sigma;

  const LevelRecord& level_for(int m) const { return levels[size_t(m + N) / 2]; }
};

struct GroundState {
  SpinVector sigma_star;
  double value = 0.0;
  bool exact = false;
};

// Full reflected Gray-code sweep starting from sigma = (1,...,1); ties broken
// by first-visited state.
MagnetizationProfile magnetization_profile(const TensorStack& g,
                                           int exact_cap = kDefaultExactCap);

GroundState ground_state_exact(const TensorStack& g, int exact_cap = kDefaultExactCap);
GroundState ground_state_exact(const MagnetizationProfile& profile);

// Max over levels with |m|/N in [eps, 2 eps].
std::pair<double, SpinVector> slice_max(const MagnetizationProfile& profile, double eps);

// Max over m of (level value + h*m); convex in h per realization.
std::pair<double, SpinVector> field_max(const MagnetizationProfile& profile, double h);

// Like field_max but also reports the achieving magnetization level.
struct FieldMaxResult {
  double value;
  int m;
};
FieldMaxResult field_max_level(const MagnetizationProfile& profile, double h);

// Max over levels with |m|/N >= delta.
std::pair<double, SpinVector> threshold_max(const MagnetizationProfile& profile,
                                            double delta);

// Negates every magnetization level, keeping values (bookkeeping involution).
MagnetizationProfile mirror(const MagnetizationProfile& profile);

struct AnnealSchedule {
  std::int64_t steps = 100000;
  double t_start = 2.0;
  double t_end = 0.01;
};

// Simulated annealing with geometric cooling and single-flip proposals,
// followed by a greedy descent from the best visited state. exact = false.
GroundState anneal(const TensorStack& g, const AnnealSchedule& schedule,
                   std::uint64_t seed);

}  // namespace pspin
