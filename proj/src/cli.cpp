#include "pspin/cli.hpp"

#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace pspin::cli {

using ordered_json = nlohmann::ordered_json;

namespace {

// ---------- value parsing ----------

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(trim(item));
  return out;
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ValidationError(key + ": cannot parse '" + v + "' as a number");
  }
}

std::int64_t parse_int(const std::string& key, const std::string& v) {
  std::int64_t x = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc{} || p != v.data() + v.size())
    throw ValidationError(key + ": cannot parse '" + v + "' as an integer");
  return x;
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
  std::uint64_t x = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc{} || p != v.data() + v.size())
    throw ValidationError(key + ": cannot parse '" + v + "' as an unsigned integer");
  return x;
}

std::vector<double> parse_double_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  for (auto& item : split(v, ',')) out.push_back(parse_double(key, item));
  if (out.empty()) throw ValidationError(key + ": empty list");
  return out;
}

std::vector<int> parse_int_list(const std::string& key, const std::string& v) {
  std::vector<int> out;
  for (auto& item : split(v, ',')) out.push_back(int(parse_int(key, item)));
  if (out.empty()) throw ValidationError(key + ": empty list");
  return out;
}

std::vector<std::pair<int, double>> parse_mixture(const std::string& v) {
  std::vector<std::pair<int, double>> out;
  for (auto& item : split(v, ',')) {
    auto pc = split(item, ':');
    if (pc.size() != 2)
      throw ValidationError("mixture: expected p:c_p pairs, got '" + item + "'");
    out.emplace_back(int(parse_int("mixture", pc[0])), parse_double("mixture", pc[1]));
  }
  return out;
}

// ---------- config assembly ----------

const std::set<std::string> kAllKeys = {
    "experiment",  "mixture",   "N",           "N_list",      "t_grid",
    "h_grid",      "eps_grid",  "delta_grid",  "alpha",       "n_samples",
    "master_seed", "exact_cap", "out",         "L_max",       "input",
    "seed",        "anneal_steps", "anneal_t_start", "anneal_t_end"};

void apply_key(RunConfig& cfg, const std::string& key, const std::string& value) {
  if (!kAllKeys.count(key)) throw UnknownKey("unknown config key '" + key + "'");
  if (key == "experiment") cfg.experiment = value;
  else if (key == "mixture") cfg.mixture = parse_mixture(value);
  else if (key == "N") cfg.n_dim = int(parse_int(key, value));
  else if (key == "N_list") cfg.n_list = parse_int_list(key, value);
  else if (key == "t_grid") cfg.t_grid = parse_double_list(key, value);
  else if (key == "h_grid") cfg.h_grid = parse_double_list(key, value);
  else if (key == "eps_grid") cfg.eps_grid = parse_double_list(key, value);
  else if (key == "delta_grid") cfg.delta_grid = parse_double_list(key, value);
  else if (key == "alpha") cfg.alpha = parse_double(key, value);
  else if (key == "n_samples") cfg.n_samples = parse_int(key, value);
  else if (key == "master_seed") cfg.master_seed = parse_u64(key, value);
  else if (key == "exact_cap") cfg.exact_cap = int(parse_int(key, value));
  else if (key == "out") cfg.out = value;
  else if (key == "L_max") cfg.l_max = int(parse_int(key, value));
  else if (key == "input") cfg.input = value;
  else if (key == "seed") cfg.seed = parse_u64(key, value);
  else if (key == "anneal_steps") cfg.anneal_steps = parse_int(key, value);
  else if (key == "anneal_t_start") cfg.anneal_t_start = parse_double(key, value);
  else if (key == "anneal_t_end") cfg.anneal_t_end = parse_double(key, value);
}

std::string json_value_to_flat(const std::string& key, const nlohmann::json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number() || v.is_boolean()) return v.dump();
  if (v.is_array()) {
    std::string out;
    for (auto& el : v) {
      if (!out.empty()) out += ",";
      if (el.is_array()) {  // mixture as [[p, c], ...]
        if (el.size() != 2)
          throw ValidationError(key + ": expected [p, c] pairs in array form");
        out += el[0].dump() + ":" + el[1].dump();
      } else if (el.is_string()) {
        out += el.get<std::string>();
      } else {
        out += el.dump();
      }
    }
    return out;
  }
  throw ValidationError(key + ": unsupported JSON value type");
}

// per-experiment key applicability
const std::map<std::string, std::set<std::string>> kAllowedKeys = {
    {"chaos-curve",
     {"mixture", "N", "t_grid", "n_samples", "master_seed", "exact_cap"}},
    {"field-curve",
     {"mixture", "N", "h_grid", "n_samples", "master_seed", "exact_cap"}},
    {"slice-decay",
     {"mixture", "N", "eps_grid", "n_samples", "master_seed", "exact_cap"}},
    {"superconc", {"mixture", "N_list", "n_samples", "master_seed", "exact_cap"}},
    {"barycenter",
     {"mixture", "N", "eps_grid", "n_samples", "master_seed", "exact_cap"}},
    {"conditional-overlap",
     {"mixture", "N", "alpha", "delta_grid", "n_samples", "master_seed",
      "exact_cap"}},
    {"solve",
     {"mixture", "N", "seed", "exact_cap", "anneal_steps", "anneal_t_start",
      "anneal_t_end"}},
    {"convexity-report", {"input", "L_max"}},
};

void check_applicability(const RunConfig& cfg) {
  auto it = kAllowedKeys.find(cfg.experiment);
  if (it == kAllowedKeys.end())
    throw UnknownExperiment("unknown experiment '" + cfg.experiment + "'");
  const auto& allowed = it->second;
  auto reject = [&](bool set, const char* key) {
    if (set && !allowed.count(key))
      throw ValidationError(std::string(key) + ": not applicable to experiment '" +
                            cfg.experiment + "'");
  };
  reject(cfg.mixture.has_value(), "mixture");
  reject(cfg.n_dim.has_value(), "N");
  reject(cfg.n_list.has_value(), "N_list");
  reject(cfg.t_grid.has_value(), "t_grid");
  reject(cfg.h_grid.has_value(), "h_grid");
  reject(cfg.eps_grid.has_value(), "eps_grid");
  reject(cfg.delta_grid.has_value(), "delta_grid");
  reject(cfg.alpha.has_value(), "alpha");
  reject(cfg.n_samples.has_value(), "n_samples");
  reject(cfg.master_seed.has_value(), "master_seed");
  reject(cfg.l_max.has_value(), "L_max");
  reject(cfg.input.has_value(), "input");
  reject(cfg.seed.has_value(), "seed");
  reject(cfg.anneal_steps.has_value(), "anneal_steps");
  reject(cfg.anneal_t_start.has_value(), "anneal_t_start");
  reject(cfg.anneal_t_end.has_value(), "anneal_t_end");
}

template <class T>
T require(const std::optional<T>& field, const char* key) {
  if (!field) throw ValidationError(std::string(key) + ": required but missing");
  return *field;
}

// ---------- output helpers ----------

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

ordered_json stats_json(const SummaryStats& s) {
  return ordered_json{
      {"n", s.n}, {"mean", s.mean}, {"variance", s.variance}, {"stderr", s.stderror}};
}

ordered_json point_json(double x, const SummaryStats& s) {
  return ordered_json{
      {"x", x}, {"estimate", s.mean}, {"stderr", s.stderror}, {"n", s.n}};
}

ordered_json check_json(const std::string& name, double value, double z, bool ok) {
  return ordered_json{{"name", name}, {"value", value}, {"z", z}, {"ok", ok}};
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

std::string mixture_to_string(const std::vector<std::pair<int, double>>& mix) {
  std::string out;
  for (auto& [p, c] : mix) {
    if (!out.empty()) out += ",";
    out += std::to_string(p) + ":" + fmt(c);
  }
  return out;
}

ordered_json config_echo(const RunConfig& cfg) {
  ordered_json echo = ordered_json::object();
  echo["experiment"] = cfg.experiment;
  if (cfg.mixture) echo["mixture"] = mixture_to_string(*cfg.mixture);
  if (cfg.n_dim) echo["N"] = *cfg.n_dim;
  if (cfg.n_list) echo["N_list"] = *cfg.n_list;
  if (cfg.t_grid) echo["t_grid"] = *cfg.t_grid;
  if (cfg.h_grid) echo["h_grid"] = *cfg.h_grid;
  if (cfg.eps_grid) echo["eps_grid"] = *cfg.eps_grid;
  if (cfg.delta_grid) echo["delta_grid"] = *cfg.delta_grid;
  if (cfg.alpha) echo["alpha"] = *cfg.alpha;
  if (cfg.n_samples) echo["n_samples"] = *cfg.n_samples;
  if (cfg.master_seed) echo["master_seed"] = *cfg.master_seed;
  if (cfg.exact_cap) echo["exact_cap"] = *cfg.exact_cap;
  if (cfg.l_max) echo["L_max"] = *cfg.l_max;
  if (cfg.input) echo["input"] = *cfg.input;
  if (cfg.seed) echo["seed"] = *cfg.seed;
  if (cfg.anneal_steps) echo["anneal_steps"] = *cfg.anneal_steps;
  if (cfg.anneal_t_start) echo["anneal_t_start"] = *cfg.anneal_t_start;
  if (cfg.anneal_t_end) echo["anneal_t_end"] = *cfg.anneal_t_end;
  return echo;
}

ordered_json report_skeleton(const RunConfig& cfg) {
  ordered_json report;
  report["schema_version"] = "1";
  report["tool"] = "pspinlab";
  report["tool_version"] = kToolVersion;
  report["experiment"] = cfg.experiment;
  report["master_seed"] = cfg.master_seed ? *cfg.master_seed : 0;
  report["config"] = config_echo(cfg);
  return report;
}

int resolve_cap(const RunConfig& cfg) {
  int cap = cfg.exact_cap.value_or(kDefaultExactCap);
  if (const char* env = std::getenv("PSPINLAB_CAP"))
    cap = int(parse_int("PSPINLAB_CAP", env));
  return cap;
}

EstimatorConfig estimator_config(const RunConfig& cfg, int workers) {
  EstimatorConfig ec;
  ec.n_samples = require(cfg.n_samples, "n_samples");
  ec.master_seed = require(cfg.master_seed, "master_seed");
  ec.worker_count_hint = workers;
  return ec;
}

// ---------- experiment runners ----------

ordered_json run_chaos(const RunConfig& cfg, int workers,
                       const std::filesystem::path& dir) {
  auto spec = validate_mixture(require(cfg.mixture, "mixture"));
  int N = require(cfg.n_dim, "N");
  auto grid = cfg.t_grid.value_or(kDefaultTGrid);
  ChaosCurve curve = chaos_curve(spec, N, grid, estimator_config(cfg, workers),
                                 resolve_cap(cfg));

  ordered_json report = report_skeleton(cfg);
  ordered_json points = ordered_json::array();
  ordered_json curve_json = ordered_json::object();
  curve_json["t_grid"] = curve.t_grid;
  ordered_json phis = ordered_json::array(), abss = ordered_json::array(),
               eps = ordered_json::array();
  for (size_t i = 0; i < curve.t_grid.size(); ++i) {
    points.push_back(point_json(curve.t_grid[i], curve.phi[i]));
    phis.push_back(stats_json(curve.phi[i]));
    abss.push_back(stats_json(curve.abs_overlap[i]));
    if (curve.eps_schedule[i]) eps.push_back(*curve.eps_schedule[i]);
    else eps.push_back(nullptr);
  }
  curve_json["phi"] = phis;
  curve_json["abs_overlap"] = abss;
  curve_json["eps_schedule"] = eps;
  report["points"] = points;
  report["curve"] = curve_json;

  ordered_json checks = ordered_json::array();
  bool phi0_ok = curve.t_grid[0] == 0.0 && curve.phi[0].mean == 1.0 &&
                 curve.phi[0].stderror == 0.0;
  checks.push_back(check_json("phi(0) == 1 exactly", curve.phi[0].mean, 0.0, phi0_ok));
  try {
    auto conv = log_convexity_report(curve);
    for (auto& c : conv.checks)
      checks.push_back(check_json(c.kind + " @" + std::to_string(c.index), c.amount,
                                  c.zscore, !(c.violated && c.zscore > 3.0)));
  } catch (const DegenerateCurve&) {
    // too few positive points; nothing to check
  }
  report["checks"] = checks;

  std::string csv = "t,phi,phi_se,abs_overlap,abs_overlap_se,eps_schedule,n\n";
  for (size_t i = 0; i < curve.t_grid.size(); ++i) {
    csv += fmt(curve.t_grid[i]) + "," + fmt(curve.phi[i].mean) + "," +
           fmt(curve.phi[i].stderror) + "," + fmt(curve.abs_overlap[i].mean) + "," +
           fmt(curve.abs_overlap[i].stderror) + "," +
           (curve.eps_schedule[i] ? fmt(*curve.eps_schedule[i]) : "nan") + "," +
           std::to_string(curve.phi[i].n) + "\n";
  }
  write_text(dir / "chaos_curve.csv", csv);

  std::string hist = "t,bin_lo,bin_hi,count\n";
  for (size_t i = 0; i < curve.t_grid.size(); ++i) {
    const Histogram& h = curve.overlap_hist[i];
    for (size_t b = 0; b + 1 < h.edges.size(); ++b)
      hist += fmt(curve.t_grid[i]) + "," + fmt(h.edges[b]) + "," + fmt(h.edges[b + 1]) +
              "," + std::to_string(h.counts[b]) + "\n";
  }
  write_text(dir / "overlap_hist.csv", hist);
  return report;
}

ordered_json run_field(const RunConfig& cfg, int workers,
                       const std::filesystem::path& dir) {
  auto spec = validate_mixture(require(cfg.mixture, "mixture"));
  int N = require(cfg.n_dim, "N");
  auto grid = cfg.h_grid.value_or(kDefaultHGrid);
  FieldCurve curve = field_curve(spec, N, grid, estimator_config(cfg, workers),
                                 resolve_cap(cfg));

  ordered_json report = report_skeleton(cfg);
  ordered_json points = ordered_json::array();
  for (size_t i = 0; i < curve.h_grid.size(); ++i)
    points.push_back(point_json(curve.h_grid[i], curve.m_hat[i]));
  report["points"] = points;
  report["E_hat"] = curve.e_hat;
  report["slope_at_zero"] = stats_json(curve.slope0);

  ordered_json checks = ordered_json::array();
  checks.push_back(check_json("per-realization convexity violations",
                              double(curve.convexity_violations), 0.0,
                              curve.convexity_violations == 0));
  for (size_t i = 0; i < curve.sym_h.size(); ++i) {
    const auto& s = curve.symmetry[i];
    double z = s.stderror > 0 ? s.mean / s.stderror : 0.0;
    checks.push_back(check_json("symmetry M(h)-M(-h) @h=" + fmt(curve.sym_h[i]),
                                s.mean, z, std::abs(z) <= 3.0));
  }
  double zs = curve.slope0.stderror > 0 ? curve.slope0.mean / curve.slope0.stderror : 0.0;
  checks.push_back(check_json("central slope at 0", curve.slope0.mean, zs,
                              std::abs(zs) <= 3.0));
  report["checks"] = checks;

  std::string csv = "h,m_hat,se,n\n";
  for (size_t i = 0; i < curve.h_grid.size(); ++i)
    csv += fmt(curve.h_grid[i]) + "," + fmt(curve.m_hat[i].mean) + "," +
           fmt(curve.m_hat[i].stderror) + "," + std::to_string(curve.m_hat[i].n) + "\n";
  write_text(dir / "field_curve.csv", csv);
  return report;
}

ordered_json run_slice_decay(const RunConfig& cfg, int workers,
                             const std::filesystem::path& dir) {
  auto spec = validate_mixture(require(cfg.mixture, "mixture"));
  int N = require(cfg.n_dim, "N");
  auto grid = cfg.eps_grid.value_or(kDefaultEpsGrid);
  SliceDecayReport rep = slice_decay(spec, N, grid, estimator_config(cfg, workers),
                                     resolve_cap(cfg));

  ordered_json report = report_skeleton(cfg);
  ordered_json points = ordered_json::array();
  for (size_t i = 0; i < rep.eps_grid.size(); ++i)
    points.push_back(point_json(rep.eps_grid[i], rep.gap[i]));
  report["points"] = points;
  report["c_hat"] = rep.c_hat;
  report["r2"] = rep.r2;

  ordered_json checks = ordered_json::array();
  checks.push_back(check_json("positive gaps", double(rep.positive_gap_count), 0.0,
                              rep.positive_gap_count == 0));
  for (auto& o : rep.ordering)
    checks.push_back(check_json("gap(" + fmt(o.eps_hi) + ") < gap(" + fmt(o.eps_lo) +
                                    ")",
                                o.mean_diff, o.z, o.mean_diff < 0 && o.z < -1.645));
  checks.push_back(check_json("c_hat > 0", rep.c_hat, 0.0, rep.c_hat > 0));
  report["checks"] = checks;

  std::string csv = "eps,gap,se,n\n";
  for (size_t i = 0; i < rep.eps_grid.size(); ++i)
    csv += fmt(rep.eps_grid[i]) + "," + fmt(rep.gap[i].mean) + "," +
           fmt(rep.gap[i].stderror) + "," + std::to_string(rep.gap[i].n) + "\n";
  write_text(dir / "slice_decay.csv", csv);
  return report;
}

ordered_json run_superconc(const RunConfig& cfg, int workers,
                           const std::filesystem::path& dir) {
  auto spec = validate_mixture(require(cfg.mixture, "mixture"));
  auto n_list = require(cfg.n_list, "N_list");
  SuperconcReport rep = superconcentration(spec, n_list, estimator_config(cfg, workers),
                                           resolve_cap(cfg));

  ordered_json report = report_skeleton(cfg);
  ordered_json points = ordered_json::array();
  for (size_t i = 0; i < rep.n_list.size(); ++i) {
    ordered_json p;
    p["x"] = rep.n_list[i];
    p["estimate"] = rep.var_over_n[i];
    p["stderr"] = rep.var_over_n_se[i];
    p["n"] = rep.f_stats[i].n;
    p["f_mean"] = rep.f_stats[i].mean;
    points.push_back(p);
  }
  report["points"] = points;

  ordered_json tails = ordered_json::array();
  for (auto& t : rep.tails)
    tails.push_back(ordered_json{{"N", t.n},
                                 {"s", t.s},
                                 {"freq", t.freq},
                                 {"se", t.se},
                                 {"bound", t.bound}});
  report["tails"] = tails;

  ordered_json checks = ordered_json::array();
  checks.push_back(check_json("Var/N decreasing (first vs last N)",
                              rep.var_over_n.front() - rep.var_over_n.back(),
                              rep.trend_z, rep.trend_z > 1.645));
  for (auto& t : rep.tails)
    if (t.s == 3.0)
      checks.push_back(check_json("tail s=3 @N=" + std::to_string(t.n), t.freq, 0.0,
                                  t.freq <= t.bound + 3.0 * t.se));
  report["checks"] = checks;

  std::string csv = "N,f_mean,f_se,var_over_n,var_over_n_se,n\n";
  for (size_t i = 0; i < rep.n_list.size(); ++i)
    csv += std::to_string(rep.n_list[i]) + "," + fmt(rep.f_stats[i].mean) + "," +
           fmt(rep.f_stats[i].stderror) + "," + fmt(rep.var_over_n[i]) + "," +
           fmt(rep.var_over_n_se[i]) + "," + std::to_string(rep.f_stats[i].n) + "\n";
  write_text(dir / "superconc.csv", csv);

  std::string tcsv = "N,s,freq,se,bound\n";
  for (auto& t : rep.tails)
    tcsv += std::to_string(t.n) + "," + fmt(t.s) + "," + fmt(t.freq) + "," +
            fmt(t.se) + "," + fmt(t.bound) + "\n";
  write_text(dir / "tails.csv", tcsv);
  return report;
}

ordered_json run_barycenter(const RunConfig& cfg, int workers,
                            const std::filesystem::path& dir) {
  auto spec = validate_mixture(require(cfg.mixture, "mixture"));
  int N = require(cfg.n_dim, "N");
  auto grid = cfg.eps_grid.value_or(kDefaultEpsGrid);
  BarycenterReport rep = barycenter_estimate(spec, N, grid,
                                             estimator_config(cfg, workers),
                                             resolve_cap(cfg));

  ordered_json report = report_skeleton(cfg);
  report["n"] = rep.n;
  report["norm"] = rep.norm;
  report["norm_se"] = rep.norm_se;
  report["level1_bound"] = rep.level1_bound;
  report["margin"] = rep.margin;
  report["alignment"] = rep.alignment;
  report["alignment_se"] = rep.alignment_se;
  report["E_hat"] = rep.e_hat;
  report["E_hat_se"] = rep.e_hat_se;
  report["quad_coeff"] = rep.quad_coeff;
  ordered_json points = ordered_json::array();
  for (size_t i = 0; i < rep.eps_grid.size(); ++i) {
    ordered_json p;
    p["x"] = rep.eps_grid[i];
    p["estimate"] = rep.slice_feature_max[i];
    p["stderr"] = 0.0;
    p["n"] = rep.n;
    points.push_back(p);
  }
  report["points"] = points;

  ordered_json checks = ordered_json::array();
  checks.push_back(check_json("||b_hat|| <= sqrt(2 N log 2) + 3 SE", rep.norm, 0.0,
                              rep.norm <= rep.level1_bound + 3.0 * rep.norm_se));
  double comb = std::sqrt(rep.alignment_se * rep.alignment_se +
                          rep.e_hat_se * rep.e_hat_se);
  double za = comb > 0 ? (rep.alignment - rep.e_hat) / comb : 0.0;
  checks.push_back(check_json("alignment matches E_hat", rep.alignment - rep.e_hat,
                              za, std::abs(za) <= 3.0));
  if (rep.upper_offdiag.n > 0) {
    double c = std::sqrt(rep.upper_offdiag.stderror * rep.upper_offdiag.stderror +
                         rep.lower_offdiag.stderror * rep.lower_offdiag.stderror);
    double zo = c > 0 ? (rep.upper_offdiag.mean - rep.lower_offdiag.mean) / c : 0.0;
    checks.push_back(check_json("degree-2 off-diagonal symmetry",
                                rep.upper_offdiag.mean - rep.lower_offdiag.mean, zo,
                                std::abs(zo) <= 3.0));
  }
  report["checks"] = checks;

  std::string csv = "eps,feature_max,N_eps_sq\n";
  for (size_t i = 0; i < rep.eps_grid.size(); ++i)
    csv += fmt(rep.eps_grid[i]) + "," + fmt(rep.slice_feature_max[i]) + "," +
           fmt(double(N) * rep.eps_grid[i] * rep.eps_grid[i]) + "\n";
  write_text(dir / "barycenter_slices.csv", csv);
  save_stack(rep.b_hat, dir / "b_hat.pspn");
  return report;
}

ordered_json run_conditional(const RunConfig& cfg, int workers,
                             const std::filesystem::path& dir) {
  auto spec = validate_mixture(require(cfg.mixture, "mixture"));
  int N = require(cfg.n_dim, "N");
  double alpha = cfg.alpha.value_or(0.5);
  auto grid = cfg.delta_grid.value_or(kDefaultEpsGrid);
  ConditionalOverlapReport rep = conditional_overlap(
      spec, N, alpha, grid, estimator_config(cfg, workers), resolve_cap(cfg));

  ordered_json report = report_skeleton(cfg);
  report["alpha"] = rep.alpha;
  report["phi_hat"] = stats_json(rep.phi_hat);
  report["abs_overlap"] = stats_json(rep.abs_overlap);
  report["E_hat"] = rep.e_hat;
  report["c_hat"] = rep.c_hat;
  report["c_fit_eps"] = rep.c_fit_eps;
  report["default_delta"] = rep.default_delta;
  ordered_json points = ordered_json::array();
  for (auto& r : rep.rows) {
    ordered_json p;
    p["x"] = r.delta;
    p["estimate"] = r.freq_overlap;
    p["stderr"] = r.freq_se;
    p["n"] = rep.phi_hat.n;
    p["freq_A"] = r.freq_a;
    p["freq_B"] = r.freq_b;
    points.push_back(p);
  }
  report["points"] = points;

  ordered_json checks = ordered_json::array();
  checks.push_back(check_json("direct vs explicit-gauge estimators bitwise equal",
                              rep.gauge_check_bitwise ? 1.0 : 0.0, 0.0,
                              rep.gauge_check_bitwise));
  report["checks"] = checks;

  std::string csv = "delta,freq_overlap,se,freq_A,freq_B\n";
  for (auto& r : rep.rows)
    csv += fmt(r.delta) + "," + fmt(r.freq_overlap) + "," + fmt(r.freq_se) + "," +
           fmt(r.freq_a) + "," + fmt(r.freq_b) + "\n";
  write_text(dir / "conditional_overlap.csv", csv);
  return report;
}

ordered_json run_solve(const RunConfig& cfg, int,
                       const std::filesystem::path& dir) {
  auto spec = validate_mixture(require(cfg.mixture, "mixture"));
  int N = require(cfg.n_dim, "N");
  std::uint64_t seed = require(cfg.seed, "seed");
  int cap = resolve_cap(cfg);
  TensorStack g = sample_disorder(spec, N, derive_seed(seed, 0));

  ordered_json report = report_skeleton(cfg);
  GroundState gs;
  if (N <= cap) {
    MagnetizationProfile profile = magnetization_profile(g, cap);
    gs = ground_state_exact(profile);
    std::string csv = "m,value\n";
    for (auto& lvl : profile.levels)
      csv += std::to_string(lvl.m) + "," + fmt(lvl.value) + "\n";
    write_text(dir / "profile.csv", csv);
  } else {
    AnnealSchedule sched;
    if (cfg.anneal_steps) sched.steps = *cfg.anneal_steps;
    if (cfg.anneal_t_start) sched.t_start = *cfg.anneal_t_start;
    if (cfg.anneal_t_end) sched.t_end = *cfg.anneal_t_end;
    gs = anneal(g, sched, derive_seed(seed, 1));
  }
  report["value"] = gs.value;
  report["value_per_spin"] = gs.value / double(N);
  report["exact"] = gs.exact;
  std::vector<int> sigma(gs.sigma_star.data(), gs.sigma_star.data() + N);
  report["sigma"] = sigma;
  report["checks"] = ordered_json::array();
  return report;
}

ordered_json run_convexity_report(const RunConfig& cfg, int,
                                  const std::filesystem::path& dir) {
  std::string input = require(cfg.input, "input");
  std::ifstream in(input);
  if (!in) throw ValidationError("input: cannot open '" + input + "'");
  nlohmann::json prior;
  try {
    in >> prior;
  } catch (const std::exception& e) {
    throw ValidationError("input: cannot parse '" + input + "' as JSON: " + e.what());
  }
  if (!prior.contains("curve") || prior.value("experiment", "") != "chaos-curve")
    throw ValidationError("input: '" + input + "' is not a chaos-curve report");

  ChaosCurve curve;
  curve.N = prior["config"].value("N", 0);
  curve.t_grid = prior["curve"]["t_grid"].get<std::vector<double>>();
  for (auto& s : prior["curve"]["phi"]) {
    SummaryStats st;
    st.n = s["n"].get<std::int64_t>();
    st.mean = s["mean"].get<double>();
    st.variance = s["variance"].get<double>();
    st.stderror = s["stderr"].get<double>();
    curve.phi.push_back(st);
    curve.eps_schedule.push_back(st.mean > 0 && st.mean < 1
                                     ? std::optional<double>(
                                           1.0 / std::sqrt(std::log(1.0 / st.mean)))
                                     : std::nullopt);
  }

  LogConvexityReport conv = log_convexity_report(curve);
  int l_max = cfg.l_max.value_or(3);
  HermiteFit fit = hermite_fit(curve, l_max);

  ordered_json report = report_skeleton(cfg);
  ordered_json checks = ordered_json::array();
  for (auto& c : conv.checks)
    checks.push_back(check_json(c.kind + " @" + std::to_string(c.index), c.amount,
                                c.zscore, !(c.violated && c.zscore > 3.0)));
  report["checks"] = checks;
  ordered_json eps = ordered_json::array();
  for (auto& e : conv.eps_schedule)
    if (e) eps.push_back(*e);
    else eps.push_back(nullptr);
  report["eps_schedule"] = eps;
  report["hermite"] = ordered_json{{"l_max", l_max},
                                   {"weights", fit.weights},
                                   {"residual_norm", fit.residual_norm},
                                   {"relative_residual", fit.relative_residual},
                                   {"weight_sum", fit.weight_sum}};

  std::string csv = "kind,index,amount,z,violated\n";
  for (auto& c : conv.checks)
    csv += c.kind + "," + std::to_string(c.index) + "," + fmt(c.amount) + "," +
           fmt(c.zscore) + "," + (c.violated ? "1" : "0") + "\n";
  write_text(dir / "convexity_checks.csv", csv);
  std::string hcsv = "l,weight\n";
  for (size_t l = 0; l < fit.weights.size(); ++l)
    hcsv += std::to_string(l + 1) + "," + fmt(fit.weights[l]) + "\n";
  write_text(dir / "hermite_fit.csv", hcsv);
  return report;
}

}  // namespace

RunConfig parse_config_text(const std::string& text) {
  RunConfig cfg;
  std::string body = trim(text);
  if (!body.empty() && body.front() == '{') {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(body);
    } catch (const std::exception& e) {
      throw ValidationError(std::string("config: invalid JSON: ") + e.what());
    }
    for (auto& [key, value] : j.items())
      apply_key(cfg, key, json_value_to_flat(key, value));
  } else {
    std::stringstream ss(body);
    std::string line;
    while (std::getline(ss, line)) {
      line = trim(line);
      if (line.empty() || line.front() == '#') continue;
      size_t eq = line.find('=');
      if (eq == std::string::npos)
        throw ValidationError("config: expected key = value, got '" + line + "'");
      apply_key(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
  }
  return cfg;
}

RunConfig parse_config_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("config: cannot open '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

int run(const std::filesystem::path& config_path, const RunOptions& options) {
  ordered_json report;
  std::filesystem::path dir;
  try {
    RunConfig cfg = parse_config_file(config_path);
    if (options.experiment_override) {
      if (!cfg.experiment.empty() && cfg.experiment != *options.experiment_override)
        throw ValidationError("experiment: config says '" + cfg.experiment +
                              "' but the subcommand is '" +
                              *options.experiment_override + "'");
      cfg.experiment = *options.experiment_override;
    }
    if (cfg.experiment.empty())
      throw ValidationError("experiment: required but missing");
    check_applicability(cfg);

    dir = options.out_override.value_or(cfg.out.value_or("."));
    std::filesystem::create_directories(dir);

    if (cfg.experiment == "chaos-curve") report = run_chaos(cfg, options.workers, dir);
    else if (cfg.experiment == "field-curve") report = run_field(cfg, options.workers, dir);
    else if (cfg.experiment == "slice-decay") report = run_slice_decay(cfg, options.workers, dir);
    else if (cfg.experiment == "superconc") report = run_superconc(cfg, options.workers, dir);
    else if (cfg.experiment == "barycenter") report = run_barycenter(cfg, options.workers, dir);
    else if (cfg.experiment == "conditional-overlap") report = run_conditional(cfg, options.workers, dir);
    else if (cfg.experiment == "solve") report = run_solve(cfg, options.workers, dir);
    else if (cfg.experiment == "convexity-report") report = run_convexity_report(cfg, options.workers, dir);
    else throw UnknownExperiment("unknown experiment '" + cfg.experiment + "'");
  } catch (const UnknownExperiment& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const UnknownKey& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const ValidationError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const NotNormalized& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const BadDegree& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const DuplicateDegree& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const NonPositiveCoefficient& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const EmptyBand& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }

  try {
    write_text(dir / "report.json", report.dump(2) + "\n");
    // timestamps live in a sidecar so report.json stays byte-identical
    ordered_json meta;
    meta["written_at_unix"] = std::int64_t(std::time(nullptr));
    write_text(dir / "report.meta.json", meta.dump(2) + "\n");
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
  return 0;
}

}  // namespace pspin::cli
