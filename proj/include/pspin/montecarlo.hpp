#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "pspin/errors.hpp"

namespace pspin {

// SplitMix64-style finalizer over (master XOR index). Bijective in the mixed
// word, so distinct indices under one master never collide.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  std::uint64_t z = (master ^ index) + 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Deterministic 64-bit stream (SplitMix64 sequence).
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}
  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }
  // uniform in (0,1]
  double next_unit() { return double((next_u64() >> 11) + 1) * 0x1.0p-53; }

 private:
  std::uint64_t state_;
};

/// Standard Gaussian stream via Box-Muller over a SplitMix64 sequence.
/// Output depends only on the seed, never on scheduling.
class GaussianStream {
 public:
  explicit GaussianStream(std::uint64_t seed) : rng_(seed) {}
  double next();

 private:
  SplitMix64 rng_;
  double cached_ = 0.0;
  bool has_cached_ = false;
};

struct Histogram {
  std::vector<double> edges;  // size bins+1, ascending
  std::vector<std::int64_t> counts;
  bool operator==(const Histogram&) const = default;
};

struct SummaryStats {
  std::int64_t n = 0;
  double mean = 0.0;
  double variance = 0.0;  // unbiased
  double stderror = 0.0;  // sqrt(variance / n)
  std::optional<Histogram> histogram;
};

struct EstimatorConfig {
  std::int64_t n_samples = 0;
  std::uint64_t master_seed = 0;
  int worker_count_hint = 1;  // scheduling only, never affects results
};

struct EstimatorResult {
  Eigen::MatrixXd samples;  // n_samples x n_fields, row i from derive_seed(master, i)
  std::vector<SummaryStats> stats;
};

// Index-ordered two-pass stats over a column; bit-exact regardless of workers.
SummaryStats summarize(const Eigen::Ref<const Eigen::VectorXd>& column);

// Counts clamp into the end bins so they always sum to the sample count.
Histogram make_histogram(const Eigen::Ref<const Eigen::VectorXd>& column,
                         const std::vector<double>& edges);

using SampleKernel =
    std::function<void(std::int64_t index, std::uint64_t seed, double* out)>;

// Runs kernel(i, derive_seed(master, i), out_row) for i in [0, n_samples);
// rows land at fixed positions and reduction is index-ordered, so the result
// is bitwise identical for any worker count.
EstimatorResult run_estimator(const EstimatorConfig& config, int n_fields,
                              const SampleKernel& kernel);

}  // namespace pspin
