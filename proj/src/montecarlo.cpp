#include "pspin/montecarlo.hpp"

#include <atomic>
#include <cmath>
#include <mutex>
#include <numbers>
#include <thread>

namespace pspin {

double GaussianStream::next() {
  if (has_cached_) {
    has_cached_ = false;
    return cached_;
  }
  double u1 = rng_.next_unit();
  double u2 = rng_.next_unit();
  double r = std::sqrt(-2.0 * std::log(u1));
  double a = 2.0 * std::numbers::pi * u2;
  cached_ = r * std::sin(a);
  has_cached_ = true;
  return r * std::cos(a);
}

SummaryStats summarize(const Eigen::Ref<const Eigen::VectorXd>& column) {
  const std::int64_t n = column.size();
  SummaryStats s;
  s.n = n;
  if (n == 0) return s;
  double sum = 0.0;
  for (std::int64_t i = 0; i < n; ++i) sum += column[i];
  s.mean = sum / double(n);
  if (n >= 2) {
    double ss = 0.0;
    for (std::int64_t i = 0; i < n; ++i) {
      double d = column[i] - s.mean;
      ss += d * d;
    }
    s.variance = ss / double(n - 1);
    s.stderror = std::sqrt(s.variance / double(n));
  }
  return s;
}

Histogram make_histogram(const Eigen::Ref<const Eigen::VectorXd>& column,
                         const std::vector<double>& edges) {
  Histogram h;
  h.edges = edges;
  const int bins = int(edges.size()) - 1;
  h.counts.assign(bins, 0);
  for (std::int64_t i = 0; i < column.size(); ++i) {
    double x = column[i];
    int b = int(std::upper_bound(edges.begin(), edges.end(), x) - edges.begin()) - 1;
    if (b < 0) b = 0;
    if (b >= bins) b = bins - 1;
    ++h.counts[b];
  }
  return h;
}

EstimatorResult run_estimator(const EstimatorConfig& config, int n_fields,
                              const SampleKernel& kernel) {
  const std::int64_t n = config.n_samples;
  if (n < 2) throw ValidationError("run_estimator: n_samples must be >= 2");
  EstimatorResult result;
  result.samples.resize(n, n_fields);

  int workers = std::max(1, config.worker_count_hint);
  workers = int(std::min<std::int64_t>(workers, n));

  std::atomic<std::int64_t> next{0};
  std::mutex err_mutex;
  std::optional<KernelError> first_error;

  auto work = [&]() {
    std::vector<double> row(n_fields);
    for (;;) {
      std::int64_t i = next.fetch_add(1);
      if (i >= n) return;
      {
        std::lock_guard<std::mutex> lk(err_mutex);
        if (first_error && first_error->failing_index < i) return;
      }
      try {
        kernel(i, derive_seed(config.master_seed, std::uint64_t(i)), row.data());
        for (int j = 0; j < n_fields; ++j) result.samples(i, j) = row[j];
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lk(err_mutex);
        if (!first_error || i < first_error->failing_index)
          first_error.emplace(i, e.what());
      }
    }
  };

  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (first_error) throw *first_error;

  result.stats.reserve(n_fields);
  for (int j = 0; j < n_fields; ++j) result.stats.push_back(summarize(result.samples.col(j)));
  return result;
}

}  // namespace pspin
