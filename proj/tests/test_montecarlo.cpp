#include <doctest.h>

#include <unordered_set>

#include "pspin/montecarlo.hpp"

using namespace pspin;

TEST_CASE("derive_seed is deterministic and collision-free over 1e6 indices") {
  CHECK(derive_seed(42, 7) == derive_seed(42, 7));
  CHECK(derive_seed(42, 7) != derive_seed(42, 8));
  CHECK(derive_seed(42, 7) != derive_seed(43, 7));

  std::unordered_set<std::uint64_t> seen;
  seen.reserve(1 << 21);
  for (std::uint64_t i = 0; i < 1000000; ++i)
    CHECK_MESSAGE(seen.insert(derive_seed(0xDEADBEEF, i)).second, "collision at ", i);
}

TEST_CASE("gaussian stream moments") {
  GaussianStream stream(123);
  const int n = 200000;
  double s1 = 0, s2 = 0;
  for (int i = 0; i < n; ++i) {
    double x = stream.next();
    s1 += x;
    s2 += x * x;
  }
  double mean = s1 / n;
  double var = s2 / n - mean * mean;
  CHECK(std::abs(mean) < 3.0 / std::sqrt(double(n)));
  CHECK(std::abs(var - 1.0) < 3.0 * std::sqrt(2.0 / double(n)));
}

TEST_CASE("run_estimator constant kernel") {
  EstimatorConfig config{1000, 7, 1};
  auto result = run_estimator(config, 1, [](std::int64_t, std::uint64_t, double* out) {
    out[0] = 3.5;
  });
  CHECK(result.stats[0].mean == 3.5);
  CHECK(result.stats[0].variance == 0.0);
  CHECK(result.stats[0].stderror == 0.0);
}

TEST_CASE("run_estimator normal kernel mean near zero") {
  EstimatorConfig config{100000, 99, 4};
  auto result = run_estimator(config, 1, [](std::int64_t, std::uint64_t seed,
                                            double* out) {
    GaussianStream g(seed);
    out[0] = g.next();
  });
  CHECK(std::abs(result.stats[0].mean) <= 3.0 * result.stats[0].stderror);
  CHECK(result.stats[0].stderror ==
        doctest::Approx(std::sqrt(result.stats[0].variance / 100000)).epsilon(1e-12));
}

TEST_CASE("worker count never changes results (bitwise)") {
  auto kernel = [](std::int64_t i, std::uint64_t seed, double* out) {
    GaussianStream g(seed);
    out[0] = g.next() + double(i) * 1e-9;
    out[1] = g.next() * g.next();
  };
  EstimatorConfig serial{5000, 2024, 1};
  EstimatorConfig parallel{5000, 2024, 8};
  auto a = run_estimator(serial, 2, kernel);
  auto b = run_estimator(parallel, 2, kernel);
  CHECK(a.samples == b.samples);
  for (int j = 0; j < 2; ++j) {
    CHECK(a.stats[j].mean == b.stats[j].mean);
    CHECK(a.stats[j].variance == b.stats[j].variance);
    CHECK(a.stats[j].stderror == b.stats[j].stderror);
  }
}

TEST_CASE("kernel errors carry the failing index") {
  EstimatorConfig config{100, 1, 4};
  try {
    run_estimator(config, 1, [](std::int64_t i, std::uint64_t, double* out) {
      if (i == 37) throw std::runtime_error("boom");
      out[0] = 0.0;
    });
    FAIL("expected KernelError");
  } catch (const KernelError& e) {
    CHECK(e.failing_index == 37);
  }
}

TEST_CASE("histogram counts sum to n and clamp outliers") {
  Eigen::VectorXd v(5);
  v << -2.0, 0.1, 0.5, 0.9, 3.0;
  Histogram h = make_histogram(v, {0.0, 0.5, 1.0});
  CHECK(h.counts.size() == 2);
  CHECK(h.counts[0] + h.counts[1] == 5);
  CHECK(h.counts[0] == 2);  // -2.0 clamped down, 0.1
  CHECK(h.counts[1] == 3);  // 0.5, 0.9, 3.0 clamped up
}

TEST_CASE("run_estimator rejects n_samples < 2") {
  EstimatorConfig config{1, 0, 1};
  CHECK_THROWS_AS(run_estimator(config, 1, [](std::int64_t, std::uint64_t, double* o) {
                    o[0] = 0;
                  }),
                  ValidationError);
}
