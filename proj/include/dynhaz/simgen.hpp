#pragma once

// Discrete-time survival data with known hazards. Event times come from a
// continuous-time intensity lambda0(s) * exp(eta(x(floor(s)))) with
// covariates held constant between integer times, so the hazard of period u
// is 1 - exp(-exp(eta(x(u-1))) * (Lambda0(u) - Lambda0(u-1))).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <utility>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "dynhaz/metrics.hpp"
#include "dynhaz/rng.hpp"
#include "dynhaz/survival_data.hpp"

namespace dynhaz {

enum class Autocorr { Strong, Weak };
enum class Snr { High, Low };
enum class BaselineDist { Exponential, Weibull, Gompertz };
enum class Relationship { Linear, Nonlinear, Interaction };

inline std::string_view to_string(Autocorr a) { return a == Autocorr::Strong ? "Strong" : "Weak"; }
inline std::string_view to_string(Snr s) { return s == Snr::High ? "High" : "Low"; }
inline std::string_view to_string(BaselineDist d) {
  switch (d) {
    case BaselineDist::Exponential: return "Exponential";
    case BaselineDist::Weibull: return "Weibull";
    case BaselineDist::Gompertz: return "Gompertz";
  }
  return "?";
}
inline std::string_view to_string(Relationship r) {
  switch (r) {
    case Relationship::Linear: return "Linear";
    case Relationship::Nonlinear: return "Nonlinear";
    case Relationship::Interaction: return "Interaction";
  }
  return "?";
}

namespace detail {
template <class E, std::size_t N>
E parse_enum(std::string_view s, const E (&values)[N], std::string_view what) {
  for (auto v : values) {
    if (to_string(v) == s) return v;
  }
  throw std::invalid_argument("unknown " + std::string(what) + " '" + std::string(s) + "'");
}
}  // namespace detail

inline Autocorr parse_autocorr(std::string_view s) {
  return detail::parse_enum(s, {Autocorr::Strong, Autocorr::Weak}, "autocorrelation");
}
inline Snr parse_snr(std::string_view s) { return detail::parse_enum(s, {Snr::High, Snr::Low}, "snr"); }
inline BaselineDist parse_distribution(std::string_view s) {
  return detail::parse_enum(s, {BaselineDist::Exponential, BaselineDist::Weibull, BaselineDist::Gompertz}, "distribution");
}
inline Relationship parse_relationship(std::string_view s) {
  return detail::parse_enum(s, {Relationship::Linear, Relationship::Nonlinear, Relationship::Interaction}, "relationship");
}

struct SimConfig {
  int num_ti = 2;
  int num_tv = 4;
  Autocorr autocorr = Autocorr::Strong;
  Snr snr = Snr::High;
  BaselineDist distribution = BaselineDist::Weibull;
  Relationship relationship = Relationship::Linear;
  double censor_rate = 0.10;
  int n = 1000;
  int T = 4;
  std::uint64_t seed = 1;
  int test_size = 1000;

  // Generating-process constants.
  double rho_strong = 0.9;
  double rho_weak = 0.3;
  double cross_corr = 0.0;       // correlation between covariates at a time point
  double coef_base = 0.25;       // |beta_k| before SNR scaling; signs alternate +,-,+,...
  double snr_high_scale = 2.0;
  double snr_low_scale = 0.5;
  double interaction_base = 0.75;// coefficient of x1*x2 before SNR scaling
  double quadratic_ratio = 0.5;  // gamma_k / beta_k in the nonlinear relationship
  double weibull_shape = 1.5;
  double gompertz_rate = 0.15;
  double event_prob_by_T = 0.7;  // marginal P(U <= T) the baseline scale is calibrated to
  // When false, censor_rate targets censoring before T only; subjects still
  // event-free at T are censored there on top of it.
  bool censor_rate_includes_administrative = false;
  std::uint64_t calibration_seed = 20210901;
  int calibration_size = 20000;

  int num_covariates() const noexcept { return num_ti + num_tv; }
  double rho() const noexcept { return autocorr == Autocorr::Strong ? rho_strong : rho_weak; }
  double snr_scale() const noexcept { return snr == Snr::High ? snr_high_scale : snr_low_scale; }

  void check() const {
    if (num_ti < 0 || num_tv < 0) throw std::invalid_argument("covariate counts must be >= 0");
    if (n < 1) throw std::invalid_argument("n must be >= 1");
    if (T < 1) throw std::invalid_argument("T must be >= 1");
    if (test_size < 1) throw std::invalid_argument("test_size must be >= 1");
    if (!(censor_rate >= 0 && censor_rate < 1)) throw std::invalid_argument("censor_rate must lie in [0, 1)");
    if (!(cross_corr >= 0 && cross_corr < 1)) throw std::invalid_argument("cross_corr must lie in [0, 1)");
    if (!(event_prob_by_T > 0 && event_prob_by_T < 1)) throw std::invalid_argument("event_prob_by_T must lie in (0, 1)");
    if (std::abs(rho()) >= 1) throw std::invalid_argument("autocorrelation must lie in (-1, 1)");
    if (calibration_size < 1) throw std::invalid_argument("calibration_size must be >= 1");
  }
};

/// Coefficients plus the baseline scale and censoring probability solved
/// for by calibration.
struct CalibratedDgp {
  std::vector<double> beta;
  std::vector<double> gamma;  // quadratic terms (nonlinear relationship)
  double interaction = 0;
  double baseline_scale = 1;
  double censor_prob = 0;  // per-period geometric censoring probability
  double event_prob_by_T = 0;
  double expected_censoring = 0;
};

/// covariates[k][t] for t = 0..T-1; time-invariant covariates come first.
using CovariatePaths = std::vector<std::vector<double>>;

struct SimSubject {
  CovariatePaths paths;
  std::vector<double> hazards;  // h(u) for u = 1..T
  int U = 1;                    // T + 1 when the event happens after T
  int V = 1;
  int tau = 1;
  int delta = 0;
};

struct SimOutput {
  GenericDataset dataset;
  std::vector<std::vector<double>> true_hazards;  // [subject][u-1], u = 1..T
  CalibratedDgp dgp;
};

namespace detail {

// Largest cumulative hazard increment kept; beyond it 1 - e^-H rounds to 1.
inline constexpr double kMaxIncrement = 27.0;

inline double baseline_increment(const SimConfig& cfg, double scale, int u) {
  const double a = u - 1, b = u;
  switch (cfg.distribution) {
    case BaselineDist::Exponential: return scale;
    case BaselineDist::Weibull: return scale * (std::pow(b, cfg.weibull_shape) - std::pow(a, cfg.weibull_shape));
    case BaselineDist::Gompertz:
      return scale / cfg.gompertz_rate * (std::exp(cfg.gompertz_rate * b) - std::exp(cfg.gompertz_rate * a));
  }
  return scale;
}

inline double period_increment(const SimConfig& cfg, double scale, double eta, int u) {
  return std::min(std::exp(eta) * baseline_increment(cfg, scale, u), kMaxIncrement);
}

inline std::vector<CovariateSpec> sim_specs(const SimConfig& cfg) {
  std::vector<CovariateSpec> specs;
  for (int k = 0; k < cfg.num_covariates(); ++k) {
    specs.push_back({"X" + std::to_string(k + 1), k < cfg.num_ti ? CovariateKind::TimeInvariant : CovariateKind::TimeVarying});
  }
  return specs;
}

}  // namespace detail

inline CalibratedDgp make_coefficients(const SimConfig& cfg) {
  CalibratedDgp d;
  const double s = cfg.snr_scale();
  for (int k = 0; k < cfg.num_covariates(); ++k) {
    const double b = s * cfg.coef_base * (k % 2 == 0 ? 1.0 : -1.0);
    d.beta.push_back(b);
    d.gamma.push_back(cfg.quadratic_ratio * b);
  }
  d.interaction = cfg.num_covariates() >= 2 ? s * cfg.interaction_base : 0.0;
  return d;
}

/// Log relative risk of a covariate vector x = x(t).
inline double linear_predictor(const SimConfig& cfg, const CalibratedDgp& d, std::span<const double> x) {
  double eta = 0;
  switch (cfg.relationship) {
    case Relationship::Linear:
      for (std::size_t k = 0; k < x.size(); ++k) eta += d.beta[k] * x[k];
      break;
    case Relationship::Nonlinear:
      for (std::size_t k = 0; k < x.size(); ++k) eta += d.beta[k] * std::sin(x[k]) + d.gamma[k] * (x[k] * x[k] - 1.0);
      break;
    case Relationship::Interaction:
      for (std::size_t k = 0; k < x.size(); ++k) eta += d.beta[k] * x[k];
      if (x.size() >= 2) eta += d.interaction * x[0] * x[1];
      break;
  }
  return eta;
}

/// Standard-normal covariates: time-invariant ones drawn once, time-varying
/// ones a stationary AR(1) with the configured autocorrelation. Covariates
/// at the same time point share a common factor weighted by cross_corr.
inline CovariatePaths gen_covariates(const SimConfig& cfg, Engine& rng) {
  const auto p = static_cast<std::size_t>(cfg.num_covariates());
  const auto T = static_cast<std::size_t>(cfg.T);
  const double rho = cfg.rho();
  const double keep = std::sqrt(1 - rho * rho);
  const double shared = std::sqrt(cfg.cross_corr);
  const double own = std::sqrt(1 - cfg.cross_corr);
  CovariatePaths x(p, std::vector<double>(T));
  for (std::size_t t = 0; t < T; ++t) {
    const double common = standard_normal(rng);
    for (std::size_t k = 0; k < p; ++k) {
      const double z = shared * common + own * standard_normal(rng);
      if (t == 0) {
        x[k][0] = z;
      } else if (static_cast<int>(k) < cfg.num_ti) {
        x[k][t] = x[k][0];
      } else {
        x[k][t] = rho * x[k][t - 1] + keep * z;
      }
    }
  }
  return x;
}

inline std::vector<double> true_hazards(const SimConfig& cfg, const CalibratedDgp& d, const CovariatePaths& x) {
  std::vector<double> h(static_cast<std::size_t>(cfg.T));
  std::vector<double> snap(x.size());
  for (int u = 1; u <= cfg.T; ++u) {
    for (std::size_t k = 0; k < x.size(); ++k) snap[k] = x[k][static_cast<std::size_t>(u - 1)];
    const double inc = detail::period_increment(cfg, d.baseline_scale, linear_predictor(cfg, d, snap), u);
    h[static_cast<std::size_t>(u - 1)] = -std::expm1(-inc);
  }
  return h;
}

/// Event period U = ceil(continuous event time), found by inverting the
/// cumulative hazard at a unit exponential draw; independent geometric
/// censoring V with administrative censoring at T.
inline SimSubject gen_times(const SimConfig& cfg, const CalibratedDgp& d, CovariatePaths paths, Engine& rng) {
  SimSubject s;
  s.hazards = true_hazards(cfg, d, paths);
  s.paths = std::move(paths);
  const double e = standard_exponential(rng);
  double cum = 0;
  s.U = cfg.T + 1;
  for (int u = 1; u <= cfg.T; ++u) {
    cum += -std::log1p(-s.hazards[static_cast<std::size_t>(u - 1)]);
    if (cum >= e) {
      s.U = u;
      break;
    }
  }
  s.V = cfg.T;
  bool censored = false;
  for (int v = 1; v < cfg.T; ++v) {
    const bool hit = uniform_open(rng) < d.censor_prob;  // always drawn, keeps streams aligned
    if (hit && !censored) {
      s.V = v;
      censored = true;
    }
  }
  s.tau = std::min(s.U, s.V);
  s.delta = s.U <= s.V ? 1 : 0;
  return s;
}

namespace detail {

// P(U > v) for v = 1..T under hazards h.
inline std::vector<double> survival_path(const std::vector<double>& h) {
  std::vector<double> s(h.size());
  double acc = 1;
  for (std::size_t i = 0; i < h.size(); ++i) s[i] = acc *= (1 - h[i]);
  return s;
}

inline double expected_censoring(const std::vector<std::vector<double>>& surv, double q, int T, bool administrative) {
  double total = 0;
  for (const auto& s : surv) {
    double stay = 1, c = 0;
    for (int v = 1; v < T; ++v) {
      c += stay * q * s[static_cast<std::size_t>(v - 1)];
      stay *= 1 - q;
    }
    if (administrative) c += stay * s[static_cast<std::size_t>(T - 1)];
    total += c;
  }
  return total / static_cast<double>(surv.size());
}

}  // namespace detail

/// Solves for the baseline scale giving the target marginal event probability
/// by T, then for the censoring probability giving the target censoring rate,
/// both by bisection over a fixed pilot sample. The censoring probability is
/// clamped to [0, 1] when the target is out of reach.
inline CalibratedDgp calibrate(const SimConfig& cfg) {
  cfg.check();
  CalibratedDgp d = make_coefficients(cfg);
  Engine rng(derive_seed(cfg.calibration_seed, {cfg.num_ti, cfg.num_tv, static_cast<int>(cfg.autocorr), cfg.T}));
  std::vector<std::vector<double>> etas;
  etas.reserve(static_cast<std::size_t>(cfg.calibration_size));
  std::vector<double> snap(static_cast<std::size_t>(cfg.num_covariates()));
  for (int i = 0; i < cfg.calibration_size; ++i) {
    const auto x = gen_covariates(cfg, rng);
    std::vector<double> eta(static_cast<std::size_t>(cfg.T));
    for (int u = 1; u <= cfg.T; ++u) {
      for (std::size_t k = 0; k < snap.size(); ++k) snap[k] = x[k][static_cast<std::size_t>(u - 1)];
      eta[static_cast<std::size_t>(u - 1)] = linear_predictor(cfg, d, snap);
    }
    etas.push_back(std::move(eta));
  }
  auto event_prob = [&](double scale) {
    double total = 0;
    for (const auto& eta : etas) {
      double cum = 0;
      for (int u = 1; u <= cfg.T; ++u) cum += detail::period_increment(cfg, scale, eta[static_cast<std::size_t>(u - 1)], u);
      total += -std::expm1(-cum);
    }
    return total / static_cast<double>(etas.size());
  };
  double lo = -40, hi = 20;
  for (int it = 0; it < 200; ++it) {
    const double mid = (lo + hi) / 2;
    (event_prob(std::exp(mid)) < cfg.event_prob_by_T ? lo : hi) = mid;
  }
  d.baseline_scale = std::exp((lo + hi) / 2);
  d.event_prob_by_T = event_prob(d.baseline_scale);

  std::vector<std::vector<double>> surv;
  surv.reserve(etas.size());
  for (const auto& eta : etas) {
    std::vector<double> h(static_cast<std::size_t>(cfg.T));
    for (int u = 1; u <= cfg.T; ++u) {
      h[static_cast<std::size_t>(u - 1)] =
          -std::expm1(-detail::period_increment(cfg, d.baseline_scale, eta[static_cast<std::size_t>(u - 1)], u));
    }
    surv.push_back(detail::survival_path(h));
  }
  const bool admin = cfg.censor_rate_includes_administrative;
  auto censored = [&](double q) { return detail::expected_censoring(surv, q, cfg.T, admin); };
  double qlo = 0, qhi = 1;
  if (censored(0) >= cfg.censor_rate) {
    qhi = 0;
  } else if (censored(1) <= cfg.censor_rate) {
    qlo = 1;
  } else {
    for (int it = 0; it < 100; ++it) {
      const double mid = (qlo + qhi) / 2;
      (censored(mid) < cfg.censor_rate ? qlo : qhi) = mid;
    }
  }
  d.censor_prob = (qlo + qhi) / 2;
  d.expected_censoring = censored(d.censor_prob);
  return d;
}

namespace detail {

inline SubjectRecord to_record(std::string id, const SimSubject& s) {
  SubjectRecord r;
  r.id = std::move(id);
  r.tau = s.tau;
  r.delta = s.delta;
  for (const auto& path : s.paths) r.covariates.emplace_back(path.begin(), path.begin() + s.tau);
  return r;
}

}  // namespace detail

/// Training sample of cfg.n subjects (ids "1".."n").
inline SimOutput simulate(const SimConfig& cfg, const CalibratedDgp& d) {
  Engine rng(derive_seed(cfg.seed, {1}));
  SimOutput out;
  out.dgp = d;
  std::vector<SubjectRecord> subjects;
  for (int i = 0; i < cfg.n; ++i) {
    auto s = gen_times(cfg, d, gen_covariates(cfg, rng), rng);
    subjects.push_back(detail::to_record(std::to_string(i + 1), s));
    out.true_hazards.push_back(std::move(s.hazards));
  }
  out.dataset = make_dataset(detail::sim_specs(cfg), std::move(subjects));
  return out;
}

inline SimOutput simulate(const SimConfig& cfg) { return simulate(cfg, calibrate(cfg)); }

/// Test set k (k = 1..T) holds cfg.test_size subjects still at risk at k,
/// drawn by rejection, each with its true hazard at u = k.
inline std::vector<TestSet> gen_testsets(const SimConfig& cfg, const CalibratedDgp& d) {
  std::vector<TestSet> sets;
  const auto specs = detail::sim_specs(cfg);
  for (int k = 1; k <= cfg.T; ++k) {
    Engine rng(derive_seed(cfg.seed, {2, k}));
    TestSet ts;
    ts.k = k;
    std::vector<SubjectRecord> subjects;
    long long attempts = 0;
    while (static_cast<int>(subjects.size()) < cfg.test_size) {
      if (++attempts > 1000LL * cfg.test_size + 100000) {
        throw std::runtime_error("gen_testsets: too few subjects reach period " + std::to_string(k));
      }
      auto s = gen_times(cfg, d, gen_covariates(cfg, rng), rng);
      if (s.tau < k) continue;
      ts.true_hazard.push_back(s.hazards[static_cast<std::size_t>(k - 1)]);
      subjects.push_back(detail::to_record("k" + std::to_string(k) + "_" + std::to_string(subjects.size() + 1), s));
    }
    ts.data = make_dataset(specs, std::move(subjects));
    sets.push_back(std::move(ts));
  }
  return sets;
}

inline std::vector<TestSet> gen_testsets(const SimConfig& cfg) { return gen_testsets(cfg, calibrate(cfg)); }

// JSON config (field names mirror SimConfig; enums as their display names).

inline nlohmann::json to_json(const SimConfig& c) {
  return {{"num_ti", c.num_ti},
          {"num_tv", c.num_tv},
          {"autocorr", to_string(c.autocorr)},
          {"snr", to_string(c.snr)},
          {"distribution", to_string(c.distribution)},
          {"relationship", to_string(c.relationship)},
          {"censor_rate", c.censor_rate},
          {"n", c.n},
          {"T", c.T},
          {"seed", c.seed},
          {"test_size", c.test_size},
          {"rho_strong", c.rho_strong},
          {"rho_weak", c.rho_weak},
          {"cross_corr", c.cross_corr},
          {"coef_base", c.coef_base},
          {"snr_high_scale", c.snr_high_scale},
          {"snr_low_scale", c.snr_low_scale},
          {"interaction_base", c.interaction_base},
          {"quadratic_ratio", c.quadratic_ratio},
          {"weibull_shape", c.weibull_shape},
          {"gompertz_rate", c.gompertz_rate},
          {"event_prob_by_T", c.event_prob_by_T},
          {"censor_rate_includes_administrative", c.censor_rate_includes_administrative},
          {"calibration_seed", c.calibration_seed},
          {"calibration_size", c.calibration_size}};
}

/// Unknown keys are rejected so that typos do not silently fall back to defaults.
inline SimConfig sim_config_from_json(const nlohmann::json& j, SimConfig c = {}) {
  static const std::vector<std::string> known = [] {
    std::vector<std::string> k;
    const auto defaults = to_json(SimConfig{});
    for (const auto& [key, v] : defaults.items()) k.push_back(key);
    k.emplace_back("scenario");
    return k;
  }();
  for (const auto& [key, v] : j.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) throw std::invalid_argument("unknown sim config field '" + key + "'");
  }
  if (j.contains("scenario")) {
    const auto& s = j.at("scenario");
    c.num_ti = s.at(0).get<int>();
    c.num_tv = s.at(1).get<int>();
  }
  c.num_ti = j.value("num_ti", c.num_ti);
  c.num_tv = j.value("num_tv", c.num_tv);
  if (j.contains("autocorr")) c.autocorr = parse_autocorr(j.at("autocorr").get<std::string>());
  if (j.contains("snr")) c.snr = parse_snr(j.at("snr").get<std::string>());
  if (j.contains("distribution")) c.distribution = parse_distribution(j.at("distribution").get<std::string>());
  if (j.contains("relationship")) c.relationship = parse_relationship(j.at("relationship").get<std::string>());
  c.censor_rate = j.value("censor_rate", c.censor_rate);
  c.n = j.value("n", c.n);
  c.T = j.value("T", c.T);
  c.seed = j.value("seed", c.seed);
  c.test_size = j.value("test_size", c.test_size);
  c.rho_strong = j.value("rho_strong", c.rho_strong);
  c.rho_weak = j.value("rho_weak", c.rho_weak);
  c.cross_corr = j.value("cross_corr", c.cross_corr);
  c.coef_base = j.value("coef_base", c.coef_base);
  c.snr_high_scale = j.value("snr_high_scale", c.snr_high_scale);
  c.snr_low_scale = j.value("snr_low_scale", c.snr_low_scale);
  c.interaction_base = j.value("interaction_base", c.interaction_base);
  c.quadratic_ratio = j.value("quadratic_ratio", c.quadratic_ratio);
  c.weibull_shape = j.value("weibull_shape", c.weibull_shape);
  c.gompertz_rate = j.value("gompertz_rate", c.gompertz_rate);
  c.event_prob_by_T = j.value("event_prob_by_T", c.event_prob_by_T);
  c.censor_rate_includes_administrative = j.value("censor_rate_includes_administrative", c.censor_rate_includes_administrative);
  c.calibration_seed = j.value("calibration_seed", c.calibration_seed);
  c.calibration_size = j.value("calibration_size", c.calibration_size);
  c.check();
  return c;
}

/// Writes train.csv, test_k.csv for k = 1..T, and truth.csv with columns
/// subject,u,true_hazard: every u <= tau for training subjects, u = k for
/// the subjects of test set k.
inline void write_simulation(const std::string& dir, const SimOutput& train, const std::vector<TestSet>& tests) {
  std::filesystem::create_directories(dir);
  save_generic(dir + "/train.csv", train.dataset);
  for (const auto& ts : tests) save_generic(dir + "/test_" + std::to_string(ts.k) + ".csv", ts.data);
  std::ofstream truth(dir + "/truth.csv");
  if (!truth) throw std::runtime_error("cannot write " + dir + "/truth.csv");
  truth << "subject,u,true_hazard\n";
  for (std::size_t i = 0; i < train.dataset.size(); ++i) {
    const auto& s = train.dataset.subjects[i];
    for (int u = 1; u <= s.tau; ++u) {
      truth << s.id << ',' << u << ',' << csv::format_double(train.true_hazards[i][static_cast<std::size_t>(u - 1)]) << '\n';
    }
  }
  for (const auto& ts : tests) {
    for (std::size_t i = 0; i < ts.data.size(); ++i) {
      truth << ts.data.subjects[i].id << ',' << ts.k << ',' << csv::format_double(ts.true_hazard[i]) << '\n';
    }
  }
}

/// Reads test_1.csv..test_T.csv and their true hazards back from a directory
/// written by write_simulation.
inline std::vector<TestSet> read_testsets(const std::string& dir, int T) {
  std::map<std::pair<std::string, int>, double> truth;
  {
    std::ifstream in(dir + "/truth.csv");
    if (!in) throw std::runtime_error("cannot open " + dir + "/truth.csv");
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const auto f = csv::split_line(line);
      const auto u = f.size() == 3 ? csv::parse_int(f[1]) : std::nullopt;
      const auto h = f.size() == 3 ? csv::parse_double(f[2]) : std::nullopt;
      if (!u || !h) throw std::runtime_error("truth.csv: malformed row '" + line + "'");
      truth[{f[0], static_cast<int>(*u)}] = *h;
    }
  }
  std::vector<TestSet> sets;
  for (int k = 1; k <= T; ++k) {
    TestSet ts;
    ts.k = k;
    ts.data = load_generic(dir + "/test_" + std::to_string(k) + ".csv");
    for (const auto& s : ts.data.subjects) {
      const auto it = truth.find({s.id, k});
      if (it == truth.end()) throw std::runtime_error("truth.csv: no hazard for subject " + s.id + " at u=" + std::to_string(k));
      ts.true_hazard.push_back(it->second);
    }
    sets.push_back(std::move(ts));
  }
  return sets;
}

}  // namespace dynhaz
