#include "pspin/energy.hpp"

#include <cmath>

namespace pspin {

double energy(const TensorStack& g, const SpinVector& sigma) {
  if (sigma.size() != g.N) throw ShapeMismatch("energy: sigma length != N");
  const int N = g.N;
  std::vector<double> sv(N);
  for (int i = 0; i < N; ++i) sv[i] = double(sigma[i]);
  double total = 0.0;
  for (size_t d = 0; d < g.blocks.size(); ++d) {
    auto [p, c] = g.spec.coefficients[d];
    const auto& block = g.blocks[d];
    double acc = 0.0;
    std::vector<int> digit(p, 0);
    std::vector<double> prefix(p + 1, 1.0);
    for (int j = 0; j < p; ++j) prefix[j + 1] = prefix[j] * sv[0];
    const Eigen::Index total_entries = block.size();
    for (Eigen::Index f = 0;; ++f) {
      acc += block[f] * prefix[p];
      if (f + 1 == total_entries) break;
      int j = p - 1;
      while (digit[j] == N - 1) digit[j--] = 0;
      ++digit[j];
      for (int q = j; q < p; ++q) prefix[q + 1] = prefix[q] * sv[digit[q]];
    }
    total += c * std::pow(double(N), -0.5 * (p - 1)) * acc;
  }
  return total;
}

FlipEngine::FlipEngine(const TensorStack& g, const SpinVector& sigma0)
    : g_(&g), N_(g.N), sigma_(sigma0) {
  if (sigma0.size() != N_) throw ShapeMismatch("engine_new: sigma length != N");
  sv_.resize(N_);
  for (size_t d = 0; d < g.spec.coefficients.size(); ++d) {
    if (g.spec.coefficients[d].first == 2) {
      deg2_block_ = int(d);
      a2_ = g.spec.coefficients[d].second / std::sqrt(double(N_));
      const auto& block = g.blocks[d];
      sym2_.resize(size_t(N_) * N_);
      diag2_.resize(N_);
      for (int i = 0; i < N_; ++i) {
        diag2_[i] = block[Eigen::Index(i) * N_ + i];
        for (int j = 0; j < N_; ++j)
          sym2_[size_t(i) * N_ + j] =
              block[Eigen::Index(i) * N_ + j] + block[Eigen::Index(j) * N_ + i];
      }
      local_.resize(N_);
    }
  }
  resync();
}

void FlipEngine::resync() {
  m_ = 0;
  for (int i = 0; i < N_; ++i) {
    sv_[i] = double(sigma_[i]);
    m_ += sigma_[i];
  }
  energy_ = energy(*g_, sigma_);
  if (deg2_block_ >= 0) {
    for (int k = 0; k < N_; ++k) {
      double acc = 0.0;
      const double* row = &sym2_[size_t(k) * N_];
      for (int j = 0; j < N_; ++j) acc += row[j] * sv_[j];
      local_[k] = acc;
    }
  }
  flips_since_sync_ = 0;
}

double FlipEngine::high_degree_delta(int k) const {
  // delta_p = -2 a_p * sum over tuples containing k an odd number of times of
  // g_tuple * prod sigma (at the current state). Tuples are enumerated by the
  // first position where k occurs, so each k-containing tuple is visited once.
  double total = 0.0;
  const int N = N_;
  for (size_t d = 0; d < g_->spec.coefficients.size(); ++d) {
    auto [p, c] = g_->spec.coefficients[d];
    if (p < 3) continue;
    const double* t = g_->blocks[d].data();
    double acc = 0.0;
    auto rec = [&](auto&& self, int pos, std::uint64_t flat, double prod, int kpar,
                   bool seen_k) -> void {
      if (pos == p) {
        ++tuples_touched_;
        if (kpar & 1) acc += t[flat] * prod;
        return;
      }
      if (seen_k) {
        for (int i = 0; i < N; ++i)
          self(self, pos + 1, flat * N + i, prod * sv_[i], kpar + (i == k), true);
      } else {
        self(self, pos + 1, flat * std::uint64_t(N) + k, prod * sv_[k], 1, true);
        if (pos < p - 1)
          for (int i = 0; i < N; ++i)
            if (i != k) self(self, pos + 1, flat * N + i, prod * sv_[i], 0, false);
      }
    };
    rec(rec, 0, 0, 1.0, 0, false);
    total += -2.0 * c * std::pow(double(N), -0.5 * (p - 1)) * acc;
  }
  return total;
}

double FlipEngine::peek_delta(int k) const {
  if (k < 0 || k >= N_) throw IndexOutOfRange("flip index " + std::to_string(k));
  double delta = 0.0;
  if (deg2_block_ >= 0)
    delta += -2.0 * a2_ * sv_[k] * (local_[k] - 2.0 * diag2_[k] * sv_[k]);
  if (g_->spec.p_max() >= 3) delta += high_degree_delta(k);
  return delta;
}

double FlipEngine::flip(int k) {
  double delta = peek_delta(k);
  sigma_[k] = -sigma_[k];
  sv_[k] = -sv_[k];
  m_ += 2 * sigma_[k];
  energy_ += delta;
  if (deg2_block_ >= 0) {
    const double d = 2.0 * sv_[k];
    const double* row = &sym2_[size_t(k) * N_];
    for (int j = 0; j < N_; ++j) local_[j] += d * row[j];
  }
  if (++flips_since_sync_ >= kResyncInterval) resync();
  return energy_;
}

}  // namespace pspin
