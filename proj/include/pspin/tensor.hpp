#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include <Eigen/Dense>

#include "pspin/errors.hpp"
#include "pspin/mixture.hpp"

namespace pspin {

using SpinVector = Eigen::VectorXi;  // entries in {-1, +1}

// Default cap on total stored entries across degree blocks.
inline constexpr std::uint64_t kDefaultEntryCap = std::uint64_t(1) << 27;

inline std::uint64_t ipow(std::uint64_t base, int exp) {
  std::uint64_t r = 1;
  for (int i = 0; i < exp; ++i) r *= base;
  return r;
}

/// Dense stack of order-p tensors over R^N, one block per mixture degree.
/// Represents disorder g, features J(sigma), and barycenter estimates alike.
/// Blocks are unsymmetrized, row-major tuple order. Immutable by convention
/// after creation.
struct TensorStack {
  MixtureSpec spec;
  int N = 0;
  std::vector<Eigen::VectorXd> blocks;  // blocks[d] has N^p_d entries

  bool same_shape(const TensorStack& other) const {
    return N == other.N && spec == other.spec;
  }
  static std::uint64_t total_entries(const MixtureSpec& spec, int N);
  static TensorStack zero(const MixtureSpec& spec, int N,
                          std::uint64_t cap = kDefaultEntryCap);
};

struct CoupleParams {
  double t = 0.0;  // noise time, >= 0
};

// Every entry i.i.d. standard Gaussian; pure function of (spec, N, seed) via
// the derive_seed contract (per-degree stream seeded with derive_seed(seed, p)).
TensorStack sample_disorder(const MixtureSpec& spec, int N, std::uint64_t seed,
                            std::uint64_t cap = kDefaultEntryCap);

// g^t = e^{-t} g + sqrt(1 - e^{-2t}) g', entrywise.
TensorStack ou_couple(const TensorStack& g, const TensorStack& g_prime,
                      const CoupleParams& params);

// (eps . g)_{i1..ip} = g_{i1..ip} eps_{i1} ... eps_{ip}; an involution that
// preserves the Gaussian law and satisfies H(sigma o eps; eps.g) = H(sigma; g).
TensorStack gauge_transform(const TensorStack& g, const SpinVector& eps);

// J(sigma): degree-p block is c_p N^{-(p-1)/2} sigma^{tensor p}.
TensorStack featurize(const MixtureSpec& spec, int N, const SpinVector& sigma,
                      std::uint64_t cap = kDefaultEntryCap);

// Hilbert-space inner product: degree-major, row-major summation order.
double inner(const TensorStack& a, const TensorStack& b);

// Binary format: magic "PSPN" | version u16 LE | N u32 LE | degree count u16 LE
// | per degree (p u16 LE, c_p f64 LE) | per degree N^p f64 LE row-major
// | CRC32 of everything after magic+version.
void save_stack(const TensorStack& g, const std::filesystem::path& path);
TensorStack load_stack(const std::filesystem::path& path,
                       std::uint64_t cap = kDefaultEntryCap);

}  // namespace pspin
