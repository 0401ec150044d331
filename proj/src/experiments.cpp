#include "pspin/experiments.hpp"

#include <algorithm>
#include <cmath>

namespace pspin {

namespace {

void require_sorted_grid(const std::vector<double>& grid, const char* name) {
  if (grid.empty()) throw ValidationError(std::string(name) + ": empty grid");
  for (size_t i = 1; i < grid.size(); ++i)
    if (!(grid[i] > grid[i - 1]))
      throw ValidationError(std::string(name) + ": grid must be strictly increasing");
}

// Does the band |m|/N in [eps, 2 eps] contain a magnetization level?
bool band_nonempty(int N, double eps) {
  for (int m = -N; m <= N; m += 2) {
    double frac = std::abs(double(m)) / double(N);
    if (frac >= eps && frac <= 2.0 * eps) return true;
  }
  return false;
}

void require_bands(int N, const std::vector<double>& eps_grid) {
  std::string bad;
  for (double e : eps_grid)
    if (!band_nonempty(N, e)) bad += (bad.empty() ? "" : ", ") + std::to_string(e);
  if (!bad.empty())
    throw EmptyBand("empty slice band(s) at eps = " + bad +
                    " for N = " + std::to_string(N));
}

std::vector<double> overlap_edges(int N) {
  std::vector<double> edges(N + 2);
  for (int i = 0; i <= N + 1; ++i)
    edges[i] = -1.0 - 1.0 / double(N) + 2.0 * double(i) / double(N);
  return edges;
}

std::optional<double> eps_schedule_value(double phi) {
  if (phi > 0.0 && phi < 1.0) return 1.0 / std::sqrt(std::log(1.0 / phi));
  return std::nullopt;
}

struct QuadFit {
  double c = 0.0;
  double r2 = 0.0;
};

// WLS fit of y(eps) = -c eps^2, weights 1/se^2.
QuadFit fit_neg_quadratic(const std::vector<double>& eps, const std::vector<double>& y,
                          const std::vector<double>& se) {
  double num = 0.0, den = 0.0, wsum = 0.0, wy = 0.0;
  std::vector<double> w(eps.size());
  for (size_t j = 0; j < eps.size(); ++j) {
    double s = std::max(se[j], 1e-15);
    w[j] = 1.0 / (s * s);
    double e2 = eps[j] * eps[j];
    num += w[j] * e2 * (-y[j]);
    den += w[j] * e2 * e2;
    wsum += w[j];
    wy += w[j] * y[j];
  }
  QuadFit fit;
  fit.c = den > 0 ? num / den : 0.0;
  double ybar = wy / wsum;
  double ss_res = 0.0, ss_tot = 0.0;
  for (size_t j = 0; j < eps.size(); ++j) {
    double r = y[j] + fit.c * eps[j] * eps[j];
    ss_res += w[j] * r * r;
    double d = y[j] - ybar;
    ss_tot += w[j] * d * d;
  }
  fit.r2 = ss_tot > 0 ? 1.0 - ss_res / ss_tot : 0.0;
  return fit;
}

double overlap(const SpinVector& a, const SpinVector& b) {
  return double(a.dot(b)) / double(a.size());
}

}  // namespace

ChaosCurve chaos_curve(const MixtureSpec& spec, int N, std::vector<double> t_grid,
                       const EstimatorConfig& config, int exact_cap) {
  require_sorted_grid(t_grid, "t_grid");
  if (t_grid.front() < 0) throw ValidationError("t_grid: t must be >= 0");
  const int T = int(t_grid.size());

  // fields per t: xi(R_t), |R_t|, R_t
  auto result = run_estimator(config, 3 * T, [&](std::int64_t, std::uint64_t seed,
                                                 double* out) {
    TensorStack g = sample_disorder(spec, N, derive_seed(seed, 0));
    TensorStack gp = sample_disorder(spec, N, derive_seed(seed, 1));
    GroundState base = ground_state_exact(g, exact_cap);
    for (int ti = 0; ti < T; ++ti) {
      double r;
      if (t_grid[ti] == 0.0) {
        r = 1.0;  // g^0 == g bitwise, same sweep, same argmax
      } else {
        TensorStack gt = ou_couple(g, gp, CoupleParams{t_grid[ti]});
        GroundState moved = ground_state_exact(gt, exact_cap);
        r = overlap(base.sigma_star, moved.sigma_star);
      }
      out[3 * ti] = xi(spec, r);
      out[3 * ti + 1] = std::abs(r);
      out[3 * ti + 2] = r;
    }
  });

  ChaosCurve curve;
  curve.spec = spec;
  curve.N = N;
  curve.t_grid = std::move(t_grid);
  auto edges = overlap_edges(N);
  for (int ti = 0; ti < T; ++ti) {
    curve.phi.push_back(result.stats[3 * ti]);
    curve.abs_overlap.push_back(result.stats[3 * ti + 1]);
    curve.overlap_hist.push_back(make_histogram(result.samples.col(3 * ti + 2), edges));
    curve.eps_schedule.push_back(eps_schedule_value(curve.phi.back().mean));
  }
  return curve;
}

LogConvexityReport log_convexity_report(const ChaosCurve& curve) {
  const int T = int(curve.t_grid.size());
  int positive = 0;
  for (auto& s : curve.phi)
    if (s.mean > 0) ++positive;
  if (positive < 3)
    throw DegenerateCurve("log-convexity report needs >= 3 grid points with phi > 0");

  LogConvexityReport report;
  report.eps_schedule = curve.eps_schedule;

  for (int i = 0; i + 1 < T; ++i) {
    double amount = curve.phi[i + 1].mean - curve.phi[i].mean;
    double se = std::sqrt(curve.phi[i].stderror * curve.phi[i].stderror +
                          curve.phi[i + 1].stderror * curve.phi[i + 1].stderror);
    double z = se > 0 ? amount / se : (amount > 0 ? INFINITY : 0.0);
    report.checks.push_back({"monotone", i + 1, amount, z, amount > 0});
  }
  for (int i = 1; i + 1 < T; ++i) {
    if (!(curve.phi[i - 1].mean > 0 && curve.phi[i].mean > 0 &&
          curve.phi[i + 1].mean > 0))
      continue;
    double mu = (curve.t_grid[i + 1] - curve.t_grid[i]) /
                (curve.t_grid[i + 1] - curve.t_grid[i - 1]);
    double bound = mu * std::log(curve.phi[i - 1].mean) +
                   (1.0 - mu) * std::log(curve.phi[i + 1].mean);
    double amount = std::log(curve.phi[i].mean) - bound;
    auto rel = [&](int j) { return curve.phi[j].stderror / curve.phi[j].mean; };
    double se = std::sqrt(mu * mu * rel(i - 1) * rel(i - 1) + rel(i) * rel(i) +
                          (1 - mu) * (1 - mu) * rel(i + 1) * rel(i + 1));
    double z = se > 0 ? amount / se : (amount > 0 ? INFINITY : 0.0);
    report.checks.push_back({"log-convexity", i, amount, z, amount > 0});
  }
  return report;
}

FieldCurve field_curve(const MixtureSpec& spec, int N, std::vector<double> h_grid,
                       const EstimatorConfig& config, int exact_cap) {
  require_sorted_grid(h_grid, "h_grid");
  const int H = int(h_grid.size());
  int zero_index = -1;
  for (int j = 0; j < H; ++j) {
    if (h_grid[j] == 0.0) zero_index = j;
    bool mirrored = false;
    for (int k = 0; k < H; ++k)
      if (h_grid[k] == -h_grid[j]) mirrored = true;
    if (!mirrored) throw ValidationError("h_grid must be symmetric about 0");
  }
  if (zero_index < 0) throw ValidationError("h_grid must contain 0");

  // fields: per h the value/N, then per h the argmax magnetization level
  auto result = run_estimator(config, 2 * H, [&](std::int64_t, std::uint64_t seed,
                                                 double* out) {
    TensorStack g = sample_disorder(spec, N, derive_seed(seed, 0));
    MagnetizationProfile profile = magnetization_profile(g, exact_cap);
    for (int j = 0; j < H; ++j) {
      auto r = field_max_level(profile, h_grid[j]);
      out[j] = r.value / double(N);
      out[H + j] = double(r.m);
    }
  });

  FieldCurve curve;
  curve.N = N;
  curve.h_grid = h_grid;
  for (int j = 0; j < H; ++j) curve.m_hat.push_back(result.stats[j]);
  curve.e_hat = curve.m_hat[zero_index].mean;

  // per-realization convexity: the argmax level must be non-decreasing in h
  for (std::int64_t i = 0; i < result.samples.rows(); ++i)
    for (int j = 0; j + 1 < H; ++j)
      if (result.samples(i, H + j + 1) < result.samples(i, H + j))
        ++curve.convexity_violations;

  double h1 = INFINITY;
  int h1_pos = -1, h1_neg = -1;
  for (int j = 0; j < H; ++j) {
    if (h_grid[j] <= 0.0) continue;
    int neg = -1;
    for (int k = 0; k < H; ++k)
      if (h_grid[k] == -h_grid[j]) neg = k;
    Eigen::VectorXd diff = result.samples.col(j) - result.samples.col(neg);
    curve.sym_h.push_back(h_grid[j]);
    curve.symmetry.push_back(summarize(diff));
    if (h_grid[j] < h1) {
      h1 = h_grid[j];
      h1_pos = j;
      h1_neg = neg;
    }
  }
  if (h1_pos >= 0) {
    Eigen::VectorXd slope =
        (result.samples.col(h1_pos) - result.samples.col(h1_neg)) / (2.0 * h1);
    curve.slope0 = summarize(slope);
  }
  return curve;
}

SliceDecayReport slice_decay(const MixtureSpec& spec, int N,
                             std::vector<double> eps_grid,
                             const EstimatorConfig& config, int exact_cap) {
  require_sorted_grid(eps_grid, "eps_grid");
  require_bands(N, eps_grid);
  const int E = int(eps_grid.size());

  auto result = run_estimator(config, E, [&](std::int64_t, std::uint64_t seed,
                                             double* out) {
    TensorStack g = sample_disorder(spec, N, derive_seed(seed, 0));
    MagnetizationProfile profile = magnetization_profile(g, exact_cap);
    for (int j = 0; j < E; ++j)
      out[j] = (slice_max(profile, eps_grid[j]).first - profile.global_value) /
               double(N);
  });

  SliceDecayReport report;
  report.N = N;
  report.eps_grid = eps_grid;
  std::vector<double> means, ses;
  for (int j = 0; j < E; ++j) {
    report.gap.push_back(result.stats[j]);
    means.push_back(result.stats[j].mean);
    ses.push_back(result.stats[j].stderror);
    for (std::int64_t i = 0; i < result.samples.rows(); ++i)
      if (result.samples(i, j) > 0.0) ++report.positive_gap_count;
  }
  for (int j = 0; j + 1 < E; ++j) {
    Eigen::VectorXd diff = result.samples.col(j + 1) - result.samples.col(j);
    SummaryStats s = summarize(diff);
    double z = s.stderror > 0 ? s.mean / s.stderror : 0.0;
    report.ordering.push_back({eps_grid[j], eps_grid[j + 1], s.mean, s.stderror, z});
  }
  auto fit = fit_neg_quadratic(eps_grid, means, ses);
  report.c_hat = fit.c;
  report.r2 = fit.r2;
  return report;
}

SuperconcReport superconcentration(const MixtureSpec& spec, std::vector<int> n_list,
                                   const EstimatorConfig& config, int exact_cap) {
  if (n_list.empty()) throw ValidationError("superconcentration: empty N list");
  SuperconcReport report;
  report.n_list = n_list;
  const std::vector<double> s_grid{1.0, 2.0, 3.0};

  for (size_t ni = 0; ni < n_list.size(); ++ni) {
    const int N = n_list[ni];
    EstimatorConfig sub = config;
    sub.master_seed = derive_seed(config.master_seed, std::uint64_t(N));
    auto result = run_estimator(sub, 1, [&](std::int64_t, std::uint64_t seed,
                                            double* out) {
      TensorStack g = sample_disorder(spec, N, derive_seed(seed, 0));
      out[0] = ground_state_exact(g, exact_cap).value;
    });
    const SummaryStats& fs = result.stats[0];
    report.f_stats.push_back(fs);
    report.var_over_n.push_back(fs.variance / double(N));

    // jackknife SE of Var/N from leave-one-out variances
    const std::int64_t n = fs.n;
    double s1 = 0.0, s2 = 0.0;
    for (std::int64_t i = 0; i < n; ++i) {
      double x = result.samples(i, 0);
      s1 += x;
      s2 += x * x;
    }
    std::vector<double> theta(n);
    double theta_bar = 0.0;
    for (std::int64_t i = 0; i < n; ++i) {
      double x = result.samples(i, 0);
      double r1 = s1 - x;
      double var_i = (s2 - x * x - r1 * r1 / double(n - 1)) / double(n - 2);
      theta[i] = var_i / double(N);
      theta_bar += theta[i];
    }
    theta_bar /= double(n);
    double ss = 0.0;
    for (double th : theta) ss += (th - theta_bar) * (th - theta_bar);
    report.var_over_n_se.push_back(std::sqrt(double(n - 1) / double(n) * ss));

    double e_hat = fs.mean / double(N);
    for (double s : s_grid) {
      std::int64_t hits = 0;
      for (std::int64_t i = 0; i < n; ++i)
        if (std::abs(result.samples(i, 0) / double(N) - e_hat) >
            s / std::sqrt(double(N)))
          ++hits;
      double freq = double(hits) / double(n);
      double se = std::sqrt(freq * (1.0 - freq) / double(n));
      report.tails.push_back({N, s, freq, se, 2.0 * std::exp(-s * s / 2.0)});
    }
  }

  double v0 = report.var_over_n.front(), v1 = report.var_over_n.back();
  double se0 = report.var_over_n_se.front(), se1 = report.var_over_n_se.back();
  double se = std::sqrt(se0 * se0 + se1 * se1);
  report.trend_z = se > 0 ? (v0 - v1) / se : 0.0;
  return report;
}

BarycenterReport barycenter_estimate(const MixtureSpec& spec, int N,
                                     std::vector<double> eps_grid,
                                     const EstimatorConfig& config, int exact_cap) {
  require_sorted_grid(eps_grid, "eps_grid");
  require_bands(N, eps_grid);
  const std::int64_t n = config.n_samples;

  bool has_deg2 = false;
  size_t deg2 = 0;
  for (size_t d = 0; d < spec.coefficients.size(); ++d)
    if (spec.coefficients[d].first == 2) {
      has_deg2 = true;
      deg2 = d;
    }
  const bool offdiag_probe = has_deg2 && N >= 2;

  auto gauged_sample = [&](std::uint64_t seed) {
    TensorStack g = sample_disorder(spec, N, derive_seed(seed, 0));
    GroundState gs = ground_state_exact(g, exact_cap);
    return gauge_transform(g, gs.sigma_star);
  };

  // pass 1 (parallel): per-sample scalars
  auto result = run_estimator(config, 3, [&](std::int64_t, std::uint64_t seed,
                                             double* out) {
    TensorStack x = gauged_sample(seed);
    out[0] = energy(x, SpinVector::Ones(N)) / double(N);  // = f(g)/N by gauge identity
    out[1] = out[2] = 0.0;
    if (offdiag_probe) {
      const auto& block = x.blocks[deg2];
      double up = 0.0, lo = 0.0;
      std::int64_t cnt = std::int64_t(N) * (N - 1) / 2;
      for (int i = 0; i < N; ++i)
        for (int j = i + 1; j < N; ++j) {
          up += block[Eigen::Index(i) * N + j];
          lo += block[Eigen::Index(j) * N + i];
        }
      out[1] = up / double(cnt);
      out[2] = lo / double(cnt);
    }
  });

  // pass 2 (serial, index order): mean stack
  TensorStack sum = TensorStack::zero(spec, N);
  for (std::int64_t i = 0; i < n; ++i) {
    TensorStack x = gauged_sample(derive_seed(config.master_seed, std::uint64_t(i)));
    for (size_t d = 0; d < sum.blocks.size(); ++d) sum.blocks[d] += x.blocks[d];
  }

  // pass 3 (serial): scalars against the full sum, for the norm jackknife
  double sum_norm_sq = inner(sum, sum);
  std::vector<double> theta(n);
  double theta_bar = 0.0;
  for (std::int64_t i = 0; i < n; ++i) {
    TensorStack x = gauged_sample(derive_seed(config.master_seed, std::uint64_t(i)));
    double dot = inner(sum, x);
    double sq = inner(x, x);
    theta[i] = std::sqrt(std::max(0.0, sum_norm_sq - 2.0 * dot + sq)) / double(n - 1);
    theta_bar += theta[i];
  }
  theta_bar /= double(n);
  double ss = 0.0;
  for (double th : theta) ss += (th - theta_bar) * (th - theta_bar);

  BarycenterReport report;
  report.N = N;
  report.n = n;
  report.b_hat = sum;
  for (auto& block : report.b_hat.blocks) block /= double(n);
  report.norm = std::sqrt(inner(report.b_hat, report.b_hat));
  report.norm_se = std::sqrt(double(n - 1) / double(n) * ss);
  report.level1_bound = std::sqrt(2.0 * double(N) * std::log(2.0));
  report.margin = report.level1_bound - report.norm;

  // <b_hat, J(sigma)> = H(sigma; b_hat), so one profile sweep of b_hat
  // yields every slice feature maximum
  MagnetizationProfile profile = magnetization_profile(report.b_hat, exact_cap);
  double num = 0.0, den = 0.0;
  report.eps_grid = eps_grid;
  for (double e : eps_grid) {
    double v = slice_max(profile, e).first;
    report.slice_feature_max.push_back(v);
    double x = double(N) * e * e;
    num += v * x;
    den += x * x;
  }
  report.quad_coeff = den > 0 ? num / den : 0.0;

  report.alignment = energy(report.b_hat, SpinVector::Ones(N)) / double(N);
  report.alignment_se = result.stats[0].stderror;
  if (offdiag_probe) {
    report.upper_offdiag = result.stats[1];
    report.lower_offdiag = result.stats[2];
  }

  // independent estimate of E_N on a disjoint index range
  EstimatorConfig indep = config;
  auto e_result = run_estimator(indep, 1, [&](std::int64_t i, std::uint64_t,
                                              double* out) {
    std::uint64_t seed = derive_seed(config.master_seed, std::uint64_t(n + i));
    TensorStack g = sample_disorder(spec, N, derive_seed(seed, 0));
    out[0] = ground_state_exact(g, exact_cap).value / double(N);
  });
  report.e_hat = e_result.stats[0].mean;
  report.e_hat_se = e_result.stats[0].stderror;
  return report;
}

ConditionalOverlapReport conditional_overlap(const MixtureSpec& spec, int N,
                                             double alpha,
                                             std::vector<double> delta_grid,
                                             const EstimatorConfig& config,
                                             int exact_cap) {
  if (alpha < 0) throw ValidationError("conditional_overlap: alpha must be >= 0");
  require_sorted_grid(delta_grid, "delta_grid");
  for (double d : delta_grid)
    if (d <= 0.0 || d > 1.0)
      throw ValidationError("conditional_overlap: delta must be in (0, 1]");

  std::vector<double> fit_eps;
  for (double e : kDefaultEpsGrid)
    if (band_nonempty(N, e)) fit_eps.push_back(e);

  // fields: R direct, R via explicit gauge, then the N+1 level maxima of g
  const int L = N + 1;
  auto result = run_estimator(config, 2 + L, [&](std::int64_t, std::uint64_t seed,
                                                 double* out) {
    TensorStack g = sample_disorder(spec, N, derive_seed(seed, 0));
    TensorStack gp = sample_disorder(spec, N, derive_seed(seed, 1));
    TensorStack ga = ou_couple(g, gp, CoupleParams{alpha});
    MagnetizationProfile prof_g = magnetization_profile(g, exact_cap);
    GroundState gs_g = ground_state_exact(prof_g);
    GroundState gs_a = ground_state_exact(ga, exact_cap);
    out[0] = overlap(gs_g.sigma_star, gs_a.sigma_star);

    // explicit-gauge route: push both copies through tau = sigma*(g^alpha);
    // then sigma*(g^alpha . tau) = (1,..,1) and the overlap against 1 must
    // reproduce the direct statistic bitwise
    TensorStack gt = gauge_transform(g, gs_a.sigma_star);
    TensorStack gat = gauge_transform(ga, gs_a.sigma_star);
    GroundState gs_gt = ground_state_exact(gt, exact_cap);
    GroundState gs_gat = ground_state_exact(gat, exact_cap);
    out[1] = overlap(gs_gt.sigma_star, gs_gat.sigma_star);

    for (int l = 0; l < L; ++l) out[2 + l] = prof_g.levels[l].value;
  });

  const std::int64_t n = config.n_samples;
  ConditionalOverlapReport report;
  report.N = N;
  report.alpha = alpha;
  report.c_fit_eps = fit_eps;

  Eigen::VectorXd xi_col(n), abs_col(n), f_col(n);
  bool bitwise = true;
  for (std::int64_t i = 0; i < n; ++i) {
    double r = result.samples(i, 0);
    if (r != result.samples(i, 1)) bitwise = false;
    xi_col[i] = xi(spec, r);
    abs_col[i] = std::abs(r);
    double fmax = result.samples(i, 2);
    for (int l = 1; l < L; ++l) fmax = std::max(fmax, result.samples(i, 2 + l));
    f_col[i] = fmax / double(N);
  }
  report.phi_hat = summarize(xi_col);
  report.abs_overlap = summarize(abs_col);
  report.gauge_check_bitwise = bitwise;
  report.e_hat = summarize(f_col).mean;

  // slice gaps from the stored levels, for the in-run c fit
  auto slice_from_levels = [&](std::int64_t i, double lo, double hi) {
    double best = -INFINITY;
    for (int l = 0; l < L; ++l) {
      double frac = std::abs(double(2 * l - N)) / double(N);
      if (frac >= lo && frac <= hi) best = std::max(best, result.samples(i, 2 + l));
    }
    return best;
  };
  if (fit_eps.size() >= 2) {
    std::vector<double> means, ses;
    for (double e : fit_eps) {
      Eigen::VectorXd gaps(n);
      for (std::int64_t i = 0; i < n; ++i)
        gaps[i] = (slice_from_levels(i, e, 2.0 * e) - f_col[i] * double(N)) / double(N);
      SummaryStats s = summarize(gaps);
      means.push_back(s.mean);
      ses.push_back(s.stderror);
    }
    auto fit = fit_neg_quadratic(fit_eps, means, ses);
    report.c_hat = fit.c;
  }

  auto sched = eps_schedule_value(report.phi_hat.mean);
  double fallback = std::pow(double(N), -0.2);
  report.default_delta = std::min(1.0, std::max(sched.value_or(0.0), fallback));

  std::vector<double> deltas = delta_grid;
  if (std::find(deltas.begin(), deltas.end(), report.default_delta) == deltas.end())
    deltas.push_back(report.default_delta);
  for (double d : deltas) {
    std::int64_t over = 0, a_hits = 0, b_hits = 0;
    double cut = report.e_hat - report.c_hat * d * d;
    for (std::int64_t i = 0; i < n; ++i) {
      if (abs_col[i] >= d) ++over;
      if (f_col[i] <= cut) ++a_hits;
      double thr = slice_from_levels(i, d, 1.0) / double(N);  // |m|/N >= d
      if (thr >= cut) ++b_hits;
    }
    double freq = double(over) / double(n);
    report.rows.push_back({d, freq, std::sqrt(freq * (1.0 - freq) / double(n)),
                           double(a_hits) / double(n), double(b_hits) / double(n)});
  }
  return report;
}

Eigen::VectorXd nnls(const Eigen::MatrixXd& A, const Eigen::VectorXd& b) {
  const int m = int(A.cols());
  Eigen::VectorXd x = Eigen::VectorXd::Zero(m);
  std::vector<bool> passive(m, false);
  const double tol = 1e-12 * A.cwiseAbs().maxCoeff() * double(A.rows());

  for (int outer = 0; outer < 10 * m + 10; ++outer) {
    Eigen::VectorXd w = A.transpose() * (b - A * x);
    int j = -1;
    double wmax = tol;
    for (int k = 0; k < m; ++k)
      if (!passive[k] && w[k] > wmax) {
        wmax = w[k];
        j = k;
      }
    if (j < 0) break;
    passive[j] = true;

    for (;;) {
      std::vector<int> idx;
      for (int k = 0; k < m; ++k)
        if (passive[k]) idx.push_back(k);
      Eigen::MatrixXd Ap(A.rows(), idx.size());
      for (size_t c = 0; c < idx.size(); ++c) Ap.col(c) = A.col(idx[c]);
      Eigen::VectorXd z = Ap.colPivHouseholderQr().solve(b);
      bool feasible = true;
      for (size_t c = 0; c < idx.size(); ++c)
        if (z[c] <= 0) feasible = false;
      if (feasible) {
        x.setZero();
        for (size_t c = 0; c < idx.size(); ++c) x[idx[c]] = z[c];
        break;
      }
      double step = INFINITY;
      for (size_t c = 0; c < idx.size(); ++c)
        if (z[c] <= 0) step = std::min(step, x[idx[c]] / (x[idx[c]] - z[c]));
      for (size_t c = 0; c < idx.size(); ++c) {
        double xv = x[idx[c]] + step * (z[c] - x[idx[c]]);
        x[idx[c]] = xv;
        if (xv <= 1e-14) {
          x[idx[c]] = 0.0;
          passive[idx[c]] = false;
        }
      }
    }
  }
  return x;
}

HermiteFit hermite_fit(const ChaosCurve& curve, int l_max) {
  if (l_max < 1) throw ValidationError("hermite_fit: l_max must be >= 1");
  int positive = 0;
  for (auto& s : curve.phi)
    if (s.mean > 0) ++positive;
  if (positive < l_max)
    throw DegenerateCurve("hermite_fit needs at least l_max grid points with phi > 0");

  const int T = int(curve.t_grid.size());
  Eigen::MatrixXd A(T, l_max);
  Eigen::VectorXd b(T);
  for (int i = 0; i < T; ++i) {
    b[i] = curve.phi[i].mean;
    for (int l = 1; l <= l_max; ++l)
      A(i, l - 1) = std::exp(-double(l - 1) * curve.t_grid[i]);
  }
  Eigen::VectorXd w = nnls(A, b);

  HermiteFit fit;
  fit.weights.assign(w.data(), w.data() + l_max);
  fit.residual_norm = (A * w - b).norm();
  fit.relative_residual = b.norm() > 0 ? fit.residual_norm / b.norm() : 0.0;
  fit.weight_sum = w.sum();
  return fit;
}

}  // namespace pspin
