#include <doctest.h>

#include <bit>
#include <cmath>
#include <vector>

#include "pspin/energy.hpp"
#include "pspin/montecarlo.hpp"

using namespace pspin;

namespace {

SpinVector random_spins(int N, SplitMix64& rng) {
  SpinVector s(N);
  for (int i = 0; i < N; ++i) s[i] = (rng.next_u64() & 1) ? 1 : -1;
  return s;
}

}  // namespace

TEST_CASE("energy degenerate N=1 SK") {
  MixtureSpec sk = sk_mixture();
  TensorStack g = TensorStack::zero(sk, 1);
  g.blocks[0][0] = 1.7;
  SpinVector plus(1), minus(1);
  plus << 1;
  minus << -1;
  CHECK(energy(g, plus) == doctest::Approx(1.7).epsilon(1e-14));
  CHECK(energy(g, minus) == doctest::Approx(1.7).epsilon(1e-14));
}

TEST_CASE("energy N=2 SK off-diagonal pair") {
  MixtureSpec sk = sk_mixture();
  TensorStack g = TensorStack::zero(sk, 2);
  g.blocks[0][1] = 1.0;  // g_01
  g.blocks[0][2] = 1.0;  // g_10
  for (unsigned b = 0; b < 4; ++b) {
    SpinVector s(2);
    s << (b & 1 ? -1 : 1), (b & 2 ? -1 : 1);
    CHECK(energy(g, s) ==
          doctest::Approx(std::sqrt(2.0) * s[0] * s[1]).epsilon(1e-12));
  }
}

TEST_CASE("energy equals inner(featurize, g)") {
  MixtureSpec mixed = validate_mixture({{2, 0.5}, {3, 0.5}, {4, std::sqrt(0.5)}});
  SplitMix64 rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    TensorStack g = sample_disorder(mixed, 6, derive_seed(1, trial));
    SpinVector s = random_spins(6, rng);
    CHECK(energy(g, s) ==
          doctest::Approx(inner(featurize(mixed, 6, s), g)).epsilon(1e-9));
  }
}

TEST_CASE("engine construction matches energy") {
  MixtureSpec mixed = validate_mixture({{2, 0.6}, {3, 0.8}});
  TensorStack g = sample_disorder(mixed, 7, 5);
  FlipEngine engine(g, SpinVector::Ones(7));
  CHECK(engine.value() == doctest::Approx(energy(g, SpinVector::Ones(7))).epsilon(1e-12));
  CHECK(engine.magnetization() == 7);

  FlipEngine zero_engine(TensorStack::zero(mixed, 7), SpinVector::Ones(7));
  CHECK(zero_engine.value() == 0.0);
}

TEST_CASE("flip twice returns to original energy") {
  MixtureSpec mixed = validate_mixture({{2, 0.6}, {3, 0.8}});
  TensorStack g = sample_disorder(mixed, 6, 8);
  SplitMix64 rng(4);
  FlipEngine engine(g, random_spins(6, rng));
  double before = engine.value();
  engine.flip(2);
  engine.flip(2);
  CHECK(engine.value() == doctest::Approx(before).epsilon(1e-9));
  CHECK_THROWS_AS(engine.flip(6), IndexOutOfRange);
  CHECK_THROWS_AS(engine.flip(-1), IndexOutOfRange);
}

TEST_CASE("flip deltas match the naive oracle, N <= 8, p <= 4") {
  MixtureSpec mixed = validate_mixture({{2, 0.5}, {3, 0.5}, {4, std::sqrt(0.5)}});
  SplitMix64 rng(17);
  for (int trial = 0; trial < 5; ++trial) {
    const int N = 4 + int(rng.next_u64() % 5);
    TensorStack g = sample_disorder(mixed, N, derive_seed(2, trial));
    SpinVector s = random_spins(N, rng);
    FlipEngine engine(g, s);
    for (int step = 0; step < 50; ++step) {
      int k = int(rng.next_u64() % N);
      double before = energy(g, s);
      s[k] = -s[k];
      double after = energy(g, s);
      double got = engine.flip(k);
      CHECK(engine.peek_delta(k) == doctest::Approx(before - after).epsilon(1e-9));
      CHECK(got == doctest::Approx(after).epsilon(1e-9));
      CHECK(engine.magnetization() == s.sum());
    }
  }
}

TEST_CASE("engine drift stays within 1e-9 * N over 1e4 random flips") {
  MixtureSpec mixed = validate_mixture({{2, 0.6}, {3, 0.8}});
  const int N = 10;
  TensorStack g = sample_disorder(mixed, N, 23);
  FlipEngine engine(g, SpinVector::Ones(N));
  SplitMix64 rng(29);
  for (int step = 0; step < 10000; ++step) engine.flip(int(rng.next_u64() % N));
  CHECK(std::abs(engine.value() - energy(g, engine.sigma())) <= 1e-9 * N);
}

TEST_CASE("gray-code sweep visits 2^N states and lands on the naive value") {
  MixtureSpec mixed = validate_mixture({{2, 0.6}, {3, 0.8}});
  const int N = 8;
  TensorStack g = sample_disorder(mixed, N, 31);
  FlipEngine engine(g, SpinVector::Ones(N));
  std::vector<bool> seen(1u << N, false);
  unsigned gray = 0;
  seen[0] = true;
  for (unsigned j = 1; j < (1u << N); ++j) {
    int k = std::countr_zero(j);
    gray ^= 1u << k;
    engine.flip(k);
    CHECK(!seen[gray]);
    seen[gray] = true;
  }
  CHECK(engine.value() == doctest::Approx(energy(g, engine.sigma())).epsilon(1e-9));
}

TEST_CASE("p>=3 flips touch exactly N^p - (N-1)^p tuples") {
  MixtureSpec pure3 = validate_mixture({{3, 1.0}});
  const int N = 6;
  TensorStack g = sample_disorder(pure3, N, 41);
  FlipEngine engine(g, SpinVector::Ones(N));
  std::uint64_t before = engine.tuples_touched();
  engine.flip(3);
  std::uint64_t per_flip = ipow(N, 3) - ipow(N - 1, 3);
  CHECK(engine.tuples_touched() - before == per_flip);
}
