#pragma once

#include <optional>
#include <string>
#include <vector>

#include "pspin/montecarlo.hpp"
#include "pspin/solve.hpp"

namespace pspin {

// Default grids; non-empty bands for N in {10..26} and sub-minute runs.
inline const std::vector<double> kDefaultTGrid{0.0, 0.125, 0.25, 0.5, 1.0, 2.0};
inline const std::vector<double> kDefaultHGrid{-1.0, -0.5, -0.25, 0.0, 0.25, 0.5, 1.0};
inline const std::vector<double> kDefaultEpsGrid{0.1, 0.2, 0.3, 0.4};

/// Monte Carlo estimate of the ground-state overlap decay under OU noise.
/// phi[t] estimates E[xi(R_t)] with R_t = <sigma*(g), sigma*(g^t)>/N; the same
/// per-sample disorder pair serves every t (common random numbers).
struct ChaosCurve {
  MixtureSpec spec;
  int N = 0;
  std::vector<double> t_grid;
  std::vector<SummaryStats> phi;          // xi(R_t)
  std::vector<SummaryStats> abs_overlap;  // |R_t|
  std::vector<Histogram> overlap_hist;
  // eps-schedule value 1/sqrt(log(1/phi)) per t treated as the reference
  // noise; defined only when phi is strictly inside (0,1)
  std::vector<std::optional<double>> eps_schedule;
};

ChaosCurve chaos_curve(const MixtureSpec& spec, int N, std::vector<double> t_grid,
                       const EstimatorConfig& config,
                       int exact_cap = kDefaultExactCap);

struct ConvexityCheck {
  std::string kind;  // "monotone" or "log-convexity"
  int index;         // grid index of the (right, resp. middle) point
  double amount;     // positive = violation
  double zscore;     // amount / propagated SE
  bool violated;
};

struct LogConvexityReport {
  std::vector<ConvexityCheck> checks;
  std::vector<std::optional<double>> eps_schedule;
};

LogConvexityReport log_convexity_report(const ChaosCurve& curve);

/// Empirical M_N(h) over an h grid, one profile sweep per sample serving all h.
struct FieldCurve {
  int N = 0;
  std::vector<double> h_grid;
  std::vector<SummaryStats> m_hat;  // (1/N) field max per h
  double e_hat = 0.0;               // M_hat(0)
  std::vector<double> sym_h;        // positive h values with a mirrored point
  std::vector<SummaryStats> symmetry;  // paired M(h) - M(-h) per sym_h entry
  SummaryStats slope0;              // per-sample central difference at 0
  std::int64_t convexity_violations = 0;  // argmax-level monotonicity failures
};

FieldCurve field_curve(const MixtureSpec& spec, int N, std::vector<double> h_grid,
                       const EstimatorConfig& config,
                       int exact_cap = kDefaultExactCap);

struct SliceDecayReport {
  int N = 0;
  std::vector<double> eps_grid;
  std::vector<SummaryStats> gap;  // per eps: (slice max - global max)/N, paired
  std::int64_t positive_gap_count = 0;
  struct Order {
    double eps_lo, eps_hi;
    double mean_diff, se, z;  // of gap(eps_hi) - gap(eps_lo), expected < 0
  };
  std::vector<Order> ordering;
  double c_hat = 0.0;  // WLS fit of gap(eps) = -c eps^2
  double r2 = 0.0;
};

SliceDecayReport slice_decay(const MixtureSpec& spec, int N,
                             std::vector<double> eps_grid,
                             const EstimatorConfig& config,
                             int exact_cap = kDefaultExactCap);

struct SuperconcReport {
  std::vector<int> n_list;
  std::vector<SummaryStats> f_stats;  // of f_N per N
  std::vector<double> var_over_n;
  std::vector<double> var_over_n_se;  // jackknife
  struct Tail {
    int n;
    double s, freq, se, bound;  // bound = 2 exp(-s^2/2)
  };
  std::vector<Tail> tails;
  double trend_z = 0.0;  // (v_smallestN - v_largestN)/combined SE
};

SuperconcReport superconcentration(const MixtureSpec& spec, std::vector<int> n_list,
                                   const EstimatorConfig& config,
                                   int exact_cap = kDefaultExactCap);

/// Empirical Gaussian barycenter of the event {sigma*(g) = (1,..,1)}, via the
/// gauge push-forward g -> sigma*(g).g (law equality by hypercube symmetry).
struct BarycenterReport {
  int N = 0;
  std::int64_t n = 0;
  TensorStack b_hat;
  double norm = 0.0;
  double norm_se = 0.0;  // jackknife
  double level1_bound = 0.0;  // sqrt(2 N log 2)
  double margin = 0.0;        // bound - norm
  std::vector<double> eps_grid;
  std::vector<double> slice_feature_max;  // max_{T(eps)} <b_hat, J(sigma)>
  double quad_coeff = 0.0;  // LS fit slice_feature_max ~ C * N eps^2
  double alignment = 0.0;   // <b_hat, J(1)>/N
  double alignment_se = 0.0;
  double e_hat = 0.0;  // independent estimate of E f_N / N
  double e_hat_se = 0.0;
  // permutation-symmetry probe on the degree-2 block (upper vs lower
  // off-diagonal means; empty when no degree-2 block or N < 2)
  SummaryStats upper_offdiag, lower_offdiag;
};

BarycenterReport barycenter_estimate(const MixtureSpec& spec, int N,
                                     std::vector<double> eps_grid,
                                     const EstimatorConfig& config,
                                     int exact_cap = kDefaultExactCap);

struct ConditionalOverlapReport {
  int N = 0;
  double alpha = 0.0;
  SummaryStats phi_hat;      // xi(R)
  SummaryStats abs_overlap;  // |R|
  bool gauge_check_bitwise = false;  // direct vs explicit-gauge estimators
  double e_hat = 0.0;  // mean f/N over the run
  double c_hat = 0.0;  // from the in-run slice-decay fit
  std::vector<double> c_fit_eps;
  double default_delta = 0.0;  // max(eps-schedule value, N^{-1/5})
  struct DeltaRow {
    double delta;
    double freq_overlap, freq_se;  // P(|R| >= delta)
    double freq_a;  // f/N <= e_hat - c delta^2
    double freq_b;  // threshold max / N >= e_hat - c delta^2
  };
  std::vector<DeltaRow> rows;  // delta_grid plus the default delta
};

ConditionalOverlapReport conditional_overlap(const MixtureSpec& spec, int N,
                                             double alpha,
                                             std::vector<double> delta_grid,
                                             const EstimatorConfig& config,
                                             int exact_cap = kDefaultExactCap);

/// Nonnegative sum-of-exponentials fit phi(t) ~ sum_l w_l e^{-(l-1) t}.
struct HermiteFit {
  std::vector<double> weights;  // w_1..w_L
  double residual_norm = 0.0;
  double relative_residual = 0.0;
  double weight_sum = 0.0;
};

HermiteFit hermite_fit(const ChaosCurve& curve, int l_max);

// Lawson-Hanson nonnegative least squares: argmin_{x >= 0} |A x - b|.
Eigen::VectorXd nnls(const Eigen::MatrixXd& A, const Eigen::VectorXd& b);

}  // namespace pspin
