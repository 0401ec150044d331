#pragma once

#include <cstdint>
#include <vector>

#include "pspin/tensor.hpp"

namespace pspin {

// H(sigma; g) = sum_p c_p N^{-(p-1)/2} sum_{i1..ip} g_{i1..ip} sigma_{i1}..sigma_{ip}.
// Summation order fixed: degree-major, tuple row-major.
double energy(const TensorStack& g, const SpinVector& sigma);

/// Incremental single-spin-flip energy state. p=2 flips use cached local
/// fields (O(N) per flip); p>=3 flips re-evaluate exactly the tuples that
/// contain the flipped index. Single-threaded mutable state.
class FlipEngine {
 public:
  FlipEngine(const TensorStack& g, const SpinVector& sigma0);

  double flip(int k);            // negate sigma_k, return new energy
  double peek_delta(int k) const;  // energy change a flip of k would cause

  double value() const { return energy_; }
  int magnetization() const { return m_; }
  const SpinVector& sigma() const { return sigma_; }
  int n() const { return N_; }

  // tuples touched by p>=3 flip deltas so far (complexity instrumentation)
  std::uint64_t tuples_touched() const { return tuples_touched_; }

  void resync();  // recompute energy and local fields from scratch

 private:
  const TensorStack* g_;
  int N_;
  SpinVector sigma_;
  std::vector<double> sv_;  // sigma as doubles
  double energy_ = 0.0;
  int m_ = 0;

  // p=2 block (if present): coefficient, symmetrized matrix A_kj = g_kj + g_jk,
  // diagonal copy, local fields L_k = sum_j A_kj sigma_j
  int deg2_block_ = -1;
  double a2_ = 0.0;
  std::vector<double> sym2_;
  std::vector<double> diag2_;
  std::vector<double> local_;

  std::uint64_t flips_since_sync_ = 0;
  mutable std::uint64_t tuples_touched_ = 0;

  static constexpr std::uint64_t kResyncInterval = std::uint64_t(1) << 22;

  double high_degree_delta(int k) const;
};

}  // namespace pspin
