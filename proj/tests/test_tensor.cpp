#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "pspin/energy.hpp"
#include "pspin/montecarlo.hpp"
#include "pspin/tensor.hpp"

using namespace pspin;

namespace {

SpinVector spins_from_bits(int N, unsigned bits) {
  SpinVector s(N);
  for (int i = 0; i < N; ++i) s[i] = (bits >> i) & 1 ? -1 : 1;
  return s;
}

SpinVector random_spins(int N, SplitMix64& rng) {
  SpinVector s(N);
  for (int i = 0; i < N; ++i) s[i] = (rng.next_u64() & 1) ? 1 : -1;
  return s;
}

}  // namespace

TEST_CASE("sample_disorder is deterministic and shape-correct") {
  MixtureSpec mixed = validate_mixture({{2, 0.6}, {3, 0.8}});
  TensorStack a = sample_disorder(mixed, 5, 42);
  TensorStack b = sample_disorder(mixed, 5, 42);
  REQUIRE(a.blocks.size() == 2);
  CHECK(a.blocks[0].size() == 25);
  CHECK(a.blocks[1].size() == 125);
  CHECK(a.blocks[0] == b.blocks[0]);
  CHECK(a.blocks[1] == b.blocks[1]);
  TensorStack c = sample_disorder(mixed, 5, 43);
  CHECK(a.blocks[0] != c.blocks[0]);
}

TEST_CASE("sample_disorder honors the entry cap") {
  CHECK_THROWS_AS(sample_disorder(sk_mixture(), 1 << 14, 0), CapExceeded);
}

TEST_CASE("disorder entries are standard Gaussian per entry") {
  MixtureSpec sk = sk_mixture();
  const int N = 8, n_samples = 200000;
  const int entries = N * N;
  Eigen::VectorXd s1 = Eigen::VectorXd::Zero(entries);
  Eigen::VectorXd s2 = Eigen::VectorXd::Zero(entries);
  for (int i = 0; i < n_samples; ++i) {
    TensorStack g = sample_disorder(sk, N, derive_seed(7, i));
    s1 += g.blocks[0];
    s2 += g.blocks[0].cwiseProduct(g.blocks[0]);
  }
  double se_mean = 1.0 / std::sqrt(double(n_samples));
  double se_var = std::sqrt(2.0 / double(n_samples));
  for (int e = 0; e < entries; ++e) {
    double mean = s1[e] / n_samples;
    double var = s2[e] / n_samples - mean * mean;
    CHECK(std::abs(mean) < 4.0 * se_mean);  // 64 entries, allow a wider band
    CHECK(std::abs(var - 1.0) < 4.0 * se_var);
  }
}

TEST_CASE("energy covariance matches N xi(R)") {
  MixtureSpec sk = sk_mixture();
  const int N = 8, n_samples = 20000;
  SpinVector s1 = SpinVector::Ones(N);
  SpinVector s2 = s1;
  s2.head(2).array() = -1;  // overlap (8-4)/8 = 1/2
  REQUIRE(double(s1.dot(s2)) / N == 0.5);
  double sx = 0, sy = 0, sxy = 0, sx2 = 0, sy2 = 0;
  for (int i = 0; i < n_samples; ++i) {
    TensorStack g = sample_disorder(sk, N, derive_seed(11, i));
    double x = energy(g, s1), y = energy(g, s2);
    sx += x; sy += y; sxy += x * y; sx2 += x * x; sy2 += y * y;
  }
  double n = n_samples;
  double cov = sxy / n - (sx / n) * (sy / n);
  // SE of sample covariance of a bivariate Gaussian: sqrt((vx vy + cov^2)/n)
  double vx = sx2 / n - (sx / n) * (sx / n);
  double vy = sy2 / n - (sy / n) * (sy / n);
  double se = std::sqrt((vx * vy + cov * cov) / n);
  CHECK(std::abs(cov - N * xi(sk, 0.5)) < 3.0 * se);
}

TEST_CASE("ou_couple endpoints") {
  MixtureSpec sk = sk_mixture();
  TensorStack g = sample_disorder(sk, 6, 1);
  TensorStack gp = sample_disorder(sk, 6, 2);
  TensorStack at0 = ou_couple(g, gp, {0.0});
  CHECK(at0.blocks[0] == g.blocks[0]);
  TensorStack far = ou_couple(g, gp, {50.0});
  CHECK((far.blocks[0] - gp.blocks[0]).cwiseAbs().maxCoeff() < 1e-9);
  CHECK_THROWS_AS(ou_couple(g, sample_disorder(sk, 7, 3), {1.0}), ShapeMismatch);
}

TEST_CASE("ou_couple empirical correlation and marginal variance") {
  MixtureSpec sk = sk_mixture();
  const int N = 320;  // 102400 entries
  TensorStack g = sample_disorder(sk, N, 5);
  TensorStack gp = sample_disorder(sk, N, 6);
  TensorStack gt = ou_couple(g, gp, {0.5});
  const auto& x = g.blocks[0];
  const auto& y = gt.blocks[0];
  double n = double(x.size());
  double corr = (x.dot(y) / n - x.mean() * y.mean()) /
                std::sqrt((x.squaredNorm() / n - x.mean() * x.mean()) *
                          (y.squaredNorm() / n - y.mean() * y.mean()));
  CHECK(std::abs(corr - std::exp(-0.5)) < 3.0 / std::sqrt(n));
  double var = y.squaredNorm() / n - y.mean() * y.mean();
  CHECK(std::abs(var - 1.0) < 3.0 * std::sqrt(2.0 / n));
}

TEST_CASE("gauge transform identity, involution, and H-invariance") {
  MixtureSpec mixed = validate_mixture({{2, 0.6}, {3, 0.8}});
  const int N = 6;
  TensorStack g = sample_disorder(mixed, N, 9);

  TensorStack same = gauge_transform(g, SpinVector::Ones(N));
  CHECK(same.blocks[0] == g.blocks[0]);
  CHECK(same.blocks[1] == g.blocks[1]);

  SplitMix64 rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    SpinVector eps = random_spins(N, rng);
    SpinVector sigma = random_spins(N, rng);
    TensorStack ge = gauge_transform(g, eps);
    TensorStack back = gauge_transform(ge, eps);
    CHECK(back.blocks[0] == g.blocks[0]);
    CHECK(back.blocks[1] == g.blocks[1]);
    SpinVector prod = sigma.cwiseProduct(eps);
    CHECK(std::abs(energy(ge, prod) - energy(g, sigma)) <= 1e-10);
  }
  CHECK_THROWS_AS(gauge_transform(g, SpinVector::Ones(N + 1)), ShapeMismatch);
}

TEST_CASE("featurize identities") {
  MixtureSpec mixed = validate_mixture({{2, 0.6}, {3, 0.8}});
  const int N = 8;
  SplitMix64 rng(77);
  SpinVector sigma = random_spins(N, rng);
  TensorStack j = featurize(mixed, N, sigma);
  CHECK(inner(j, j) == doctest::Approx(double(N)).epsilon(1e-9));

  TensorStack g = sample_disorder(mixed, N, 13);
  CHECK(energy(g, sigma) == doctest::Approx(inner(j, g)).epsilon(1e-9));

  for (int trial = 0; trial < 10; ++trial) {
    SpinVector s1 = random_spins(N, rng);
    SpinVector s2 = random_spins(N, rng);
    double r = double(s1.dot(s2)) / N;
    double expected = N * xi(mixed, r);
    double got = inner(featurize(mixed, N, s1), featurize(mixed, N, s2));
    CHECK(got == doctest::Approx(expected).epsilon(1e-9));
  }
}

TEST_CASE("feature kernel holds exhaustively for N = 4") {
  MixtureSpec mixed = validate_mixture({{2, 0.6}, {3, 0.8}});
  const int N = 4;
  std::vector<TensorStack> features;
  for (unsigned b = 0; b < (1u << N); ++b)
    features.push_back(featurize(mixed, N, spins_from_bits(N, b)));
  for (unsigned b1 = 0; b1 < (1u << N); ++b1)
    for (unsigned b2 = 0; b2 < (1u << N); ++b2) {
      double r = double(spins_from_bits(N, b1).dot(spins_from_bits(N, b2))) / N;
      CHECK(inner(features[b1], features[b2]) ==
            doctest::Approx(N * xi(mixed, r)).epsilon(1e-9));
    }
}

TEST_CASE("inner product basics") {
  MixtureSpec sk = sk_mixture();
  TensorStack a = sample_disorder(sk, 5, 1);
  TensorStack b = sample_disorder(sk, 5, 2);
  CHECK(inner(a, a) >= 0.0);
  CHECK(inner(a, b) == inner(b, a));
  CHECK(inner(TensorStack::zero(sk, 5), b) == 0.0);
}

TEST_CASE("stack file roundtrip and corruption detection") {
  namespace fs = std::filesystem;
  MixtureSpec mixed = validate_mixture({{2, 0.6}, {3, 0.8}});
  TensorStack g = sample_disorder(mixed, 4, 21);
  fs::path path = fs::temp_directory_path() / "pspin_test_stack.pspn";
  save_stack(g, path);
  TensorStack loaded = load_stack(path);
  CHECK(loaded.N == g.N);
  CHECK(loaded.spec == g.spec);
  CHECK(loaded.blocks[0] == g.blocks[0]);
  CHECK(loaded.blocks[1] == g.blocks[1]);

  auto flip_byte = [&](size_t offset) {
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.seekg(std::streamoff(offset));
    char c = char(f.get());
    f.seekp(std::streamoff(offset));
    f.put(char(c ^ 0x5A));
  };
  flip_byte(0);
  CHECK_THROWS_AS(load_stack(path), BadMagic);
  save_stack(g, path);
  flip_byte(4);
  CHECK_THROWS_AS(load_stack(path), VersionMismatch);
  save_stack(g, path);
  flip_byte(20);  // inside the payload
  CHECK_THROWS_AS(load_stack(path), ChecksumMismatch);
  save_stack(g, path);

  CHECK_THROWS_AS(load_stack(fs::temp_directory_path() / "missing.pspn"), IoError);
  fs::remove(path);
}
