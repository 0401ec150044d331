#include "pspin/solve.hpp"

#include <bit>
#include <cmath>

#include "pspin/montecarlo.hpp"

namespace pspin {

namespace {

SpinVector sigma_from_mask(int N, std::uint32_t mask) {
  SpinVector s(N);
  for (int i = 0; i < N; ++i) s[i] = (mask >> i) & 1 ? -1 : 1;
  return s;
}

// position of a state in the reflected Gray sweep (inverse Gray code)
std::uint32_t gray_rank(std::uint32_t mask) {
  for (int s = 1; s < 32; s <<= 1) mask ^= mask >> s;
  return mask;
}

}  // namespace

MagnetizationProfile magnetization_profile(const TensorStack& g, int exact_cap) {
  const int N = g.N;
  if (N > exact_cap)
    throw CapExceeded("exact search: N = " + std::to_string(N) + " exceeds cap " +
                      std::to_string(exact_cap));

  FlipEngine engine(g, SpinVector::Ones(N));

  struct Best {
    double value;
    std::uint32_t mask;
    std::uint64_t count;
    bool seen;
  };
  std::vector<Best> best(N + 1, {0.0, 0, 0, false});
  Best global{0.0, 0, 0, false};

  const std::uint64_t n_states = std::uint64_t(1) << N;
  std::uint32_t gray = 0;  // bit i set <=> sigma_i == -1
  for (std::uint64_t j = 0;; ++j) {
    const double v = engine.value();
    const size_t lvl = size_t(engine.magnetization() + N) / 2;
    Best& b = best[lvl];
    ++b.count;
    if (!b.seen || v > b.value) {
      b.value = v;
      b.mask = gray;
      b.seen = true;
    }
    if (!global.seen || v > global.value) {
      global.value = v;
      global.mask = gray;
      global.seen = true;
    }
    if (j + 1 == n_states) break;
    const int k = std::countr_zero(j + 1);
    gray ^= std::uint32_t(1) << k;
    engine.flip(k);
  }

  // All-even mixtures satisfy H(-sigma) == H(sigma) exactly, so sigma and its
  // negation are genuinely tied; the incremental sweep accumulates ~1e-15 of
  // drift between the two visits and would order the pair arbitrarily. Pin the
  // tie-break to the twin visited first, matching a from-scratch enumeration.
  if (g.spec.all_even()) {
    const std::uint32_t full = N == 32 ? ~std::uint32_t(0)
                                       : (std::uint32_t(1) << N) - 1;
    auto canonical = [&](std::uint32_t mask) {
      std::uint32_t twin = ~mask & full;
      return gray_rank(twin) < gray_rank(mask) ? twin : mask;
    };
    global.mask = canonical(global.mask);
    if (N % 2 == 0) best[size_t(N) / 2].mask = canonical(best[size_t(N) / 2].mask);
  }

  MagnetizationProfile profile;
  profile.N = N;
  profile.levels.resize(N + 1);
  for (int lvl = 0; lvl <= N; ++lvl) {
    profile.levels[lvl].m = 2 * lvl - N;
    profile.levels[lvl].value = best[lvl].value;
    profile.levels[lvl].sigma = sigma_from_mask(N, best[lvl].mask);
    profile.levels[lvl].count = best[lvl].count;
  }
  profile.global_value = global.value;
  profile.global_sigma = sigma_from_mask(N, global.mask);
  return profile;
}

GroundState ground_state_exact(const TensorStack& g, int exact_cap) {
  return ground_state_exact(magnetization_profile(g, exact_cap));
}

GroundState ground_state_exact(const MagnetizationProfile& profile) {
  return GroundState{profile.global_sigma, profile.global_value, true};
}

std::pair<double, SpinVector> slice_max(const MagnetizationProfile& profile,
                                        double eps) {
  const int N = profile.N;
  const LevelRecord* best = nullptr;
  for (const auto& lvl : profile.levels) {
    double frac = std::abs(double(lvl.m)) / double(N);
    if (frac < eps || frac > 2.0 * eps) continue;
    if (!best || lvl.value > best->value) best = &lvl;
  }
  if (!best)
    throw EmptyBand("no magnetization level with |m|/N in [" + std::to_string(eps) +
                    ", " + std::to_string(2 * eps) + "] for N = " + std::to_string(N));
  return {best->value, best->sigma};
}

FieldMaxResult field_max_level(const MagnetizationProfile& profile, double h) {
  const LevelRecord* best = nullptr;
  double best_v = 0.0;
  for (const auto& lvl : profile.levels) {
    double v = lvl.value + h * double(lvl.m);
    if (!best || v > best_v) {
      best = &lvl;
      best_v = v;
    }
  }
  return {best_v, best->m};
}

std::pair<double, SpinVector> field_max(const MagnetizationProfile& profile, double h) {
  auto r = field_max_level(profile, h);
  return {r.value, profile.level_for(r.m).sigma};
}

std::pair<double, SpinVector> threshold_max(const MagnetizationProfile& profile,
                                            double delta) {
  const int N = profile.N;
  const LevelRecord* best = nullptr;
  for (const auto& lvl : profile.levels) {
    if (std::abs(double(lvl.m)) / double(N) < delta) continue;
    if (!best || lvl.value > best->value) best = &lvl;
  }
  if (!best)
    throw EmptyBand("no magnetization level with |m|/N >= " + std::to_string(delta) +
                    " for N = " + std::to_string(N));
  return {best->value, best->sigma};
}

MagnetizationProfile mirror(const MagnetizationProfile& profile) {
  MagnetizationProfile out = profile;
  for (size_t i = 0; i < profile.levels.size(); ++i) {
    out.levels[i] = profile.levels[profile.levels.size() - 1 - i];
    out.levels[i].m = -out.levels[i].m;
    out.levels[i].sigma = -out.levels[i].sigma;
  }
  out.global_sigma = -out.global_sigma;
  return out;
}

GroundState anneal(const TensorStack& g, const AnnealSchedule& schedule,
                   std::uint64_t seed) {
  const int N = g.N;
  SplitMix64 rng(seed);
  SpinVector start(N);
  for (int i = 0; i < N; ++i) start[i] = (rng.next_u64() & 1) ? 1 : -1;
  FlipEngine engine(g, start);

  double best_value = engine.value();
  SpinVector best_sigma = engine.sigma();

  const double ratio = schedule.t_end / schedule.t_start;
  for (std::int64_t step = 0; step < schedule.steps; ++step) {
    double frac = schedule.steps > 1 ? double(step) / double(schedule.steps - 1) : 1.0;
    double temp = schedule.t_start * std::pow(ratio, frac);
    int k = int(rng.next_u64() % std::uint64_t(N));
    double delta = engine.peek_delta(k);
    if (delta >= 0.0 || rng.next_unit() <= std::exp(delta / temp)) {
      engine.flip(k);
      if (engine.value() > best_value) {
        best_value = engine.value();
        best_sigma = engine.sigma();
      }
    }
  }

  // greedy polish from the best visited state
  FlipEngine polish(g, best_sigma);
  bool improved = true;
  while (improved) {
    improved = false;
    for (int k = 0; k < N; ++k) {
      if (polish.peek_delta(k) > 0.0) {
        polish.flip(k);
        improved = true;
      }
    }
  }
  return GroundState{polish.sigma(), polish.value(), false};
}

}  // namespace pspin
