#pragma once

// Monte Carlo comparison of the estimators over a factorial grid of
// simulation settings, and the Separate-minus-Superpp main-effect summary.

#include <algorithm>
#include <array>
#include <cmath>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <mutex>
#include <optional>
#include <ostream>
#include <set>
#include <stdexcept>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include <nlohmann/json.hpp>

#include "dynhaz/csv.hpp"
#include "dynhaz/dynamic_estimator.hpp"
#include "dynhaz/metrics.hpp"
#include "dynhaz/simgen.hpp"

namespace dynhaz {

struct BenchmarkConfig {
  std::vector<std::array<int, 2>> scenarios{{2, 4}};
  std::vector<Autocorr> autocorrs{Autocorr::Strong};
  std::vector<Snr> snrs{Snr::High};
  std::vector<BaselineDist> distributions{BaselineDist::Weibull};
  std::vector<Relationship> relationships{Relationship::Interaction};
  std::vector<double> censor_rates{0.10};
  std::vector<int> ns{1000};
  std::vector<int> Ts{4};
  std::vector<MethodKind> methods{kAllMethods.begin(), kAllMethods.end()};
  int replications = 50;
  std::uint64_t base_seed = 1;
  std::string output_dir = "benchmark_out";
  int parallelism = 1;
  SimConfig sim;  // constants shared by every cell; factor fields are overwritten
  ForestConfig forest;
  bool superpp0_use_t = true;
  bool dtpo_t_dummies = false;

  void check() const {
    if (replications < 1) throw std::invalid_argument("replications must be >= 1");
    if (methods.empty()) throw std::invalid_argument("methods must not be empty");
    if (scenarios.empty() || autocorrs.empty() || snrs.empty() || distributions.empty() || relationships.empty() ||
        censor_rates.empty() || ns.empty() || Ts.empty()) {
      throw std::invalid_argument("every factor of the grid needs at least one level");
    }
    if (parallelism < 1) throw std::invalid_argument("parallelism must be >= 1");
  }
};

/// The eight design factors, in output column order.
inline constexpr std::array<const char*, 8> kFactorNames{"scenario", "autocorr",    "snr", "distribution",
                                                         "relationship", "censor_rate", "n",   "T"};

using FactorLevels = std::array<std::string, 8>;

inline FactorLevels factor_levels(const SimConfig& c) {
  return {std::to_string(c.num_ti) + "TI+" + std::to_string(c.num_tv) + "TV",
          std::string(to_string(c.autocorr)),
          std::string(to_string(c.snr)),
          std::string(to_string(c.distribution)),
          std::string(to_string(c.relationship)),
          csv::format_double(c.censor_rate),
          std::to_string(c.n),
          std::to_string(c.T)};
}

/// Full cross product of the factor levels, first factor varying slowest.
inline std::vector<SimConfig> expand_grid(const BenchmarkConfig& cfg) {
  std::vector<SimConfig> cells;
  for (const auto& sc : cfg.scenarios)
    for (auto ac : cfg.autocorrs)
      for (auto snr : cfg.snrs)
        for (auto dist : cfg.distributions)
          for (auto rel : cfg.relationships)
            for (double cr : cfg.censor_rates)
              for (int n : cfg.ns)
                for (int T : cfg.Ts) {
                  SimConfig c = cfg.sim;
                  c.num_ti = sc[0];
                  c.num_tv = sc[1];
                  c.autocorr = ac;
                  c.snr = snr;
                  c.distribution = dist;
                  c.relationship = rel;
                  c.censor_rate = cr;
                  c.n = n;
                  c.T = T;
                  c.check();
                  cells.push_back(c);
                }
  return cells;
}

/// One long-format results row.
struct ResultRow {
  FactorLevels factors;
  std::string method;
  int t = 0;
  int u = 1;
  int replication = 0;
  std::string metric;  // adist | alor | cindex
  std::optional<double> value;
};

struct GridRow {
  std::size_t cell = 0;
  int replication = 0;
  MethodKind method = MethodKind::Superpp;
  EvalCell eval;
};

struct FailureRow {
  std::size_t cell = 0;
  int replication = 0;
  MethodKind method = MethodKind::Superpp;
  std::string error;
};

struct BenchmarkResults {
  std::vector<SimConfig> cells;
  std::vector<GridRow> grid;
  std::vector<FailureRow> failures;

  bool all_ok() const {
    return failures.empty() && std::all_of(grid.begin(), grid.end(), [](const GridRow& g) { return g.eval.ok(); });
  }

  std::vector<ResultRow> long_rows() const {
    std::vector<ResultRow> rows;
    for (const auto& g : grid) {
      const auto f = factor_levels(cells[g.cell]);
      const std::string m(method_name(g.method));
      const auto add = [&](const char* metric, std::optional<double> v) {
        rows.push_back({f, m, g.eval.t, g.eval.u, g.replication, metric, v});
      };
      if (g.eval.ok()) {
        add("adist", g.eval.mean_adist);
        add("alor", g.eval.mean_alor);
        add("cindex", g.eval.cindex);
      } else {
        add("adist", std::nullopt);
        add("alor", std::nullopt);
        add("cindex", std::nullopt);
      }
    }
    return rows;
  }
};

/// Per-replication seed: every cell sees the same stream for a given
/// replication, so factor comparisons use common random numbers.
inline std::uint64_t replication_seed(std::uint64_t base, int rep) { return derive_seed(base, {rep}); }

using ProgressFn = std::function<void(std::size_t done, std::size_t total)>;

/// Runs every (cell, replication) job on a bounded worker pool. Failures are
/// recorded and the run continues. Output order is (cell, replication,
/// method, t, u) regardless of completion order.
inline BenchmarkResults run_benchmark(const BenchmarkConfig& cfg, const ProgressFn& progress = {}) {
  cfg.check();
  BenchmarkResults res;
  res.cells = expand_grid(cfg);
  std::vector<std::optional<CalibratedDgp>> dgps(res.cells.size());
  std::vector<std::string> dgp_errors(res.cells.size());
  for (std::size_t c = 0; c < res.cells.size(); ++c) {
    try {
      dgps[c] = calibrate(res.cells[c]);
    } catch (const std::exception& e) {
      dgp_errors[c] = e.what();
    }
  }

  const std::size_t reps = static_cast<std::size_t>(cfg.replications);
  const std::size_t jobs = res.cells.size() * reps;
  std::vector<std::vector<GridRow>> grid(jobs);
  std::vector<std::vector<FailureRow>> failures(jobs);
  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> done{0};
  std::mutex progress_mutex;

  auto run_job = [&](std::size_t job) {
    const std::size_t cell = job / reps;
    const int rep = static_cast<int>(job % reps);
    auto fail_all = [&](const std::string& msg) {
      for (auto m : cfg.methods) failures[job].push_back({cell, rep, m, msg});
    };
    if (!dgps[cell]) {
      fail_all("calibration failed: " + dgp_errors[cell]);
      return;
    }
    SimConfig sc = res.cells[cell];
    sc.seed = replication_seed(cfg.base_seed, rep);
    SimOutput train;
    std::vector<TestSet> tests;
    try {
      train = simulate(sc, *dgps[cell]);
      tests = gen_testsets(sc, *dgps[cell]);
    } catch (const std::exception& e) {
      fail_all(std::string("simulation failed: ") + e.what());
      return;
    }
    for (auto m : cfg.methods) {
      BundleConfig bc;
      bc.forest = cfg.forest;
      bc.forest.seed = derive_seed(sc.seed, {static_cast<int>(m), 7});
      bc.dtpo.t_dummies = cfg.dtpo_t_dummies;
      bc.superpp0_use_t = cfg.superpp0_use_t;
      bc.horizon = sc.T;
      bc.jobs = 1;
      try {
        const auto bundle = fit_bundle(train.dataset, m, bc);
        for (auto& e : evaluate_grid(bundle, tests)) grid[job].push_back({cell, rep, m, std::move(e)});
      } catch (const std::exception& e) {
        failures[job].push_back({cell, rep, m, e.what()});
      }
    }
  };

  auto worker = [&] {
    for (std::size_t job = next++; job < jobs; job = next++) {
      run_job(job);
      const auto d = ++done;
      if (progress) {
        std::lock_guard lock(progress_mutex);
        progress(d, jobs);
      }
    }
  };
  const auto threads = std::min<std::size_t>(static_cast<std::size_t>(cfg.parallelism), jobs);
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t i = 0; i < threads; ++i) pool.emplace_back(worker);
  }
  for (std::size_t j = 0; j < jobs; ++j) {
    for (auto& g : grid[j]) res.grid.push_back(std::move(g));
    for (auto& f : failures[j]) res.failures.push_back(std::move(f));
  }
  return res;
}

// Main-effect summary.

struct MainEffectRow {
  std::string factor;
  std::string level;
  std::string metric;
  std::string horizon;  // "1" for u - t = 1, ">1" otherwise
  double mean_diff = 0;  // mean of Separate - Superpp
  std::size_t count = 0;
  std::size_t undefined = 0;  // pairs dropped because a value was missing
};

class InsufficientDataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline std::string horizon_group(int t, int u) { return u - t == 1 ? "1" : ">1"; }

/// For each factor with at least two levels, each level, metric and horizon
/// group: the mean over matched (cell, replication, t, u) of Separate minus
/// Superpp.
inline std::vector<MainEffectRow> summarize_main_effects(const std::vector<ResultRow>& rows) {
  using PairKey = std::tuple<FactorLevels, int, int, int, std::string>;  // factors, rep, t, u, metric
  std::map<PairKey, std::optional<double>> sep, sup;
  for (const auto& r : rows) {
    if (r.method == "Separate") sep[{r.factors, r.replication, r.t, r.u, r.metric}] = r.value;
    if (r.method == "Superpp") sup[{r.factors, r.replication, r.t, r.u, r.metric}] = r.value;
  }
  std::array<std::set<std::string>, kFactorNames.size()> levels;
  for (const auto& [key, v] : sep) {
    if (!sup.count(key)) continue;
    for (std::size_t f = 0; f < kFactorNames.size(); ++f) levels[f].insert(std::get<0>(key)[f]);
  }
  std::vector<std::size_t> varying;
  for (std::size_t f = 0; f < kFactorNames.size(); ++f) {
    if (levels[f].size() >= 2) varying.push_back(f);
  }
  if (varying.empty()) throw InsufficientDataError("main effects need Separate and Superpp results over >= 2 levels of some factor");

  // (factor, level, metric, horizon) -> (sum, count, undefined)
  std::map<std::tuple<std::size_t, std::string, std::string, std::string>, std::tuple<double, std::size_t, std::size_t>> acc;
  for (const auto& [key, sv] : sep) {
    const auto it = sup.find(key);
    if (it == sup.end()) continue;
    const auto& [factors, rep, t, u, metric] = key;
    for (auto f : varying) {
      auto& [sum, count, undefined] = acc[{f, factors[f], metric, horizon_group(t, u)}];
      if (sv && it->second) {
        sum += *sv - *it->second;
        ++count;
      } else {
        ++undefined;
      }
    }
  }
  std::vector<MainEffectRow> out;
  for (const auto& [key, a] : acc) {
    const auto& [f, level, metric, horizon] = key;
    const auto& [sum, count, undefined] = a;
    out.push_back({kFactorNames[f], level, metric, horizon, count ? sum / static_cast<double>(count) : std::nan(""), count, undefined});
  }
  return out;
}

// CSV output.

inline void write_results_csv(std::ostream& out, const std::vector<ResultRow>& rows) {
  for (auto* f : kFactorNames) out << f << ',';
  out << "method,t,u,replication,metric,value\n";
  for (const auto& r : rows) {
    for (const auto& l : r.factors) out << l << ',';
    out << r.method << ',' << r.t << ',' << r.u << ',' << r.replication << ',' << r.metric << ','
        << csv::format_optional(r.value) << '\n';
  }
}

inline std::vector<ResultRow> read_results_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("results: empty file");
  const auto header = csv::split_line(line);
  if (header.size() != kFactorNames.size() + 6) throw std::runtime_error("results: unexpected header");
  std::vector<ResultRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = csv::split_line(line);
    if (f.size() != header.size()) throw std::runtime_error("results: malformed row");
    ResultRow r;
    for (std::size_t i = 0; i < kFactorNames.size(); ++i) r.factors[i] = f[i];
    std::size_t i = kFactorNames.size();
    r.method = f[i++];
    r.t = static_cast<int>(csv::parse_int(f[i++]).value());
    r.u = static_cast<int>(csv::parse_int(f[i++]).value());
    r.replication = static_cast<int>(csv::parse_int(f[i++]).value());
    r.metric = f[i++];
    r.value = f[i] == csv::kNA ? std::nullopt : csv::parse_double(f[i]);
    rows.push_back(std::move(r));
  }
  return rows;
}

inline void write_grid_csv(std::ostream& out, const BenchmarkResults& res) {
  for (auto* f : kFactorNames) out << f << ',';
  out << "replication,method,t,u,n_eval,mean_adist,mean_alor,cindex,error\n";
  for (const auto& g : res.grid) {
    for (const auto& l : factor_levels(res.cells[g.cell])) out << l << ',';
    out << g.replication << ',' << method_name(g.method) << ',' << g.eval.t << ',' << g.eval.u << ',' << g.eval.n << ',';
    if (g.eval.ok()) {
      out << csv::format_double(g.eval.mean_adist) << ',' << csv::format_double(g.eval.mean_alor) << ','
          << csv::format_optional(g.eval.cindex) << ",\n";
    } else {
      std::string e = g.eval.error;
      std::replace(e.begin(), e.end(), ',', ';');
      out << "NA,NA,NA," << e << '\n';
    }
  }
}

inline void write_main_effects_csv(std::ostream& out, const std::vector<MainEffectRow>& rows) {
  out << "factor,level,metric,horizon,mean_diff,count,undefined\n";
  for (const auto& r : rows) {
    out << r.factor << ',' << r.level << ',' << r.metric << ',' << r.horizon << ',' << csv::format_double(r.mean_diff) << ','
        << r.count << ',' << r.undefined << '\n';
  }
}

/// Writes results.csv, grid.csv, failures.csv and, when the grid varies some
/// factor, main_effects.csv into `dir`.
inline void write_benchmark(const std::string& dir, const BenchmarkResults& res) {
  std::filesystem::create_directories(dir);
  const auto rows = res.long_rows();
  auto open = [&](const std::string& name) {
    std::ofstream f(dir + "/" + name);
    if (!f) throw std::runtime_error("cannot write " + dir + "/" + name);
    return f;
  };
  {
    auto f = open("results.csv");
    write_results_csv(f, rows);
  }
  {
    auto f = open("grid.csv");
    write_grid_csv(f, res);
  }
  {
    auto f = open("failures.csv");
    f << "scenario,autocorr,snr,distribution,relationship,censor_rate,n,T,replication,method,error\n";
    for (const auto& x : res.failures) {
      for (const auto& l : factor_levels(res.cells[x.cell])) f << l << ',';
      std::string e = x.error;
      std::replace(e.begin(), e.end(), ',', ';');
      f << x.replication << ',' << method_name(x.method) << ',' << e << '\n';
    }
  }
  try {
    const auto effects = summarize_main_effects(rows);
    auto f = open("main_effects.csv");
    write_main_effects_csv(f, effects);
  } catch (const InsufficientDataError&) {
    std::filesystem::remove(dir + "/main_effects.csv");
  }
}

// JSON config.

inline BenchmarkConfig benchmark_config_from_json(const nlohmann::json& j) {
  BenchmarkConfig c;
  if (j.contains("sim")) c.sim = sim_config_from_json(j.at("sim"));
  if (j.contains("grid")) {
    const auto& g = j.at("grid");
    auto strings = [&](const char* key, auto parse, auto& out) {
      if (!g.contains(key)) return;
      out.clear();
      for (const auto& v : g.at(key)) out.push_back(parse(v.template get<std::string>()));
    };
    if (g.contains("scenario")) {
      c.scenarios.clear();
      for (const auto& s : g.at("scenario")) c.scenarios.push_back({s.at(0).get<int>(), s.at(1).get<int>()});
    }
    strings("autocorr", parse_autocorr, c.autocorrs);
    strings("snr", parse_snr, c.snrs);
    strings("distribution", parse_distribution, c.distributions);
    strings("relationship", parse_relationship, c.relationships);
    if (g.contains("censor_rate")) c.censor_rates = g.at("censor_rate").get<std::vector<double>>();
    if (g.contains("n")) c.ns = g.at("n").get<std::vector<int>>();
    if (g.contains("T")) c.Ts = g.at("T").get<std::vector<int>>();
  }
  if (j.contains("methods")) {
    c.methods.clear();
    for (const auto& m : j.at("methods")) c.methods.push_back(parse_method(m.get<std::string>()));
  }
  c.replications = j.value("replications", c.replications);
  c.base_seed = j.value("base_seed", c.base_seed);
  c.output_dir = j.value("output_dir", c.output_dir);
  c.parallelism = j.value("parallelism", c.parallelism);
  if (j.contains("forest")) c.forest = config_from_json(j.at("forest"));
  c.superpp0_use_t = j.value("superpp0_use_t", c.superpp0_use_t);
  c.dtpo_t_dummies = j.value("dtpo_t_dummies", c.dtpo_t_dummies);
  c.check();
  return c;
}

}  // namespace dynhaz
