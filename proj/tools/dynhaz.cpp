// dynhaz: command-line front end for dynamic discrete-time hazard estimation.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "dynhaz/benchmark.hpp"

namespace fs = std::filesystem;
using namespace dynhaz;

namespace {

// Exit codes.
constexpr int kOk = 0;
constexpr int kFailedCells = 1;
constexpr int kBadInput = 2;

nlohmann::json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return nlohmann::json::parse(in);
}

int resolve_jobs(std::optional<int> flag) {
  if (flag) return std::max(1, *flag);
  if (const char* env = std::getenv("DYNHAZ_JOBS")) {
    if (auto v = csv::parse_int(env); v && *v >= 1) return *v;
    throw std::invalid_argument(std::string("DYNHAZ_JOBS must be a positive integer, got '") + env + "'");
  }
  return 1;
}

// Writes to the file when a path is given, otherwise stdout.
template <class F>
void emit(const std::string& path, F&& write) {
  if (path.empty() || path == "-") {
    write(std::cout);
    return;
  }
  if (fs::path(path).has_parent_path()) fs::create_directories(fs::path(path).parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  write(out);
}

LoadOptions load_options(const std::vector<std::string>& ti) { return LoadOptions{ti}; }

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> jobs;
  std::string out;
};

void add_common(CLI::App* app, Common& c, bool out_required = false) {
  app->add_option("--config", c.config, "JSON configuration file");
  app->add_option("--seed", c.seed, "random seed");
  app->add_option("--jobs", c.jobs, "worker threads (default: $DYNHAZ_JOBS or 1)")->check(CLI::PositiveNumber);
  auto* o = app->add_option("--out", c.out, "output path");
  if (out_required) o->required();
}

// transform

struct TransformArgs {
  Common common;
  std::string input;
  std::string method;
  std::optional<int> t, u;
  std::vector<std::string> ti;
};

int run_transform(const TransformArgs& a) {
  const auto ds = load_generic(a.input, load_options(a.ti));
  const std::string m = [&] {
    std::string s = a.method;
    for (auto& ch : s) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    return s;
  }();
  TrainingTable table;
  if (m == "separate") {
    if (!a.t || !a.u) throw std::invalid_argument("transform: separate needs --t and --u");
    table = build_separate(ds, *a.t, *a.u);
  } else if (m == "poolt") {
    if (!a.t) throw std::invalid_argument("transform: poolt needs --t");
    table = build_poolt(ds, *a.t, a.u.value_or(ds.T));
  } else if (m == "superpp") {
    table = build_superpp(ds);
  } else if (m == "superpp0") {
    table = build_superpp0(ds);
  } else {
    throw std::invalid_argument("transform: unknown method '" + a.method + "'");
  }
  emit(a.common.out, [&](std::ostream& os) { write_table(os, table); });
  return kOk;
}

// simulate

int run_simulate(const Common& c) {
  SimConfig cfg = c.config.empty() ? SimConfig{} : sim_config_from_json(read_json(c.config));
  if (c.seed) cfg.seed = *c.seed;
  if (c.out.empty()) throw std::invalid_argument("simulate: --out directory is required");
  const auto dgp = calibrate(cfg);
  const auto train = simulate(cfg, dgp);
  const auto tests = gen_testsets(cfg, dgp);
  write_simulation(c.out, train, tests);
  std::cerr << "wrote " << train.dataset.size() << " training subjects and " << tests.size() << " test sets to " << c.out
            << " (baseline scale " << dgp.baseline_scale << ", censoring probability " << dgp.censor_prob << ")\n";
  return kOk;
}

// fit

struct FitArgs {
  Common common;
  std::string input;
  std::string method;
  std::optional<int> horizon;
  std::vector<std::string> ti;
};

BundleConfig bundle_config(const Common& c) {
  BundleConfig bc;
  if (!c.config.empty()) {
    const auto j = read_json(c.config);
    if (j.contains("forest")) bc.forest = config_from_json(j.at("forest"));
    bc.superpp0_use_t = j.value("superpp0_use_t", bc.superpp0_use_t);
    bc.dtpo.t_dummies = j.value("dtpo_t_dummies", bc.dtpo.t_dummies);
    if (j.contains("horizon")) bc.horizon = j.at("horizon").get<int>();
  }
  if (c.seed) bc.forest.seed = *c.seed;
  bc.jobs = resolve_jobs(c.jobs);
  bc.forest.num_threads = 1;
  return bc;
}

int run_fit(const FitArgs& a) {
  if (a.common.out.empty()) throw std::invalid_argument("fit: --out is required");
  const auto ds = load_generic(a.input, load_options(a.ti));
  auto bc = bundle_config(a.common);
  if (a.horizon) bc.horizon = a.horizon;
  const auto bundle = fit_bundle(ds, parse_method(a.method), bc);
  emit(a.common.out, [&](std::ostream& os) { os << to_json(bundle).dump() << '\n'; });
  for (const auto& [key, slot] : bundle.models) {
    if (!slot.present()) std::cerr << "no model for (t=" << key.t << ", u=" << key.u << "): " << slot.absent_reason << '\n';
  }
  return bundle.absent_count() == 0 ? kOk : kFailedCells;
}

// predict

struct PredictArgs {
  Common common;
  std::string bundle;
  std::string subject;
  std::string id;
  int t = 0;
  std::vector<std::string> ti;
};

int run_predict(const PredictArgs& a) {
  const auto bundle = bundle_from_json(read_json(a.bundle));
  const auto ds = load_generic(a.subject, load_options(a.ti));
  const SubjectRecord* s = nullptr;
  if (a.id.empty()) {
    if (ds.size() != 1) throw std::invalid_argument("predict: history file holds " + std::to_string(ds.size()) + " subjects; pick one with --id");
    s = &ds.subjects.front();
  } else {
    for (const auto& r : ds.subjects) {
      if (r.id == a.id) s = &r;
    }
    if (!s) throw std::invalid_argument("predict: no subject '" + a.id + "'");
  }
  if (a.t < 0 || a.t >= bundle.T) throw std::invalid_argument("predict: --t must lie in 0.." + std::to_string(bundle.T - 1));
  if (s->tau <= a.t) throw std::invalid_argument("predict: subject history ends before t=" + std::to_string(a.t));

  std::vector<double> hazards;
  for (int u = a.t + 1; u <= bundle.T; ++u) hazards.push_back(estimate_hazard(bundle, *s, a.t, u));
  const auto curve = hazard_to_curve(a.t, hazards);
  emit(a.common.out, [&](std::ostream& os) {
    os << "u,hazard,survival,event_prob\n";
    for (std::size_t i = 0; i < curve.u.size(); ++i) {
      os << curve.u[i] << ',' << csv::format_double(curve.hazard[i]) << ',' << csv::format_double(curve.survival[i]) << ','
         << csv::format_double(curve.event_prob[i]) << '\n';
    }
  });
  return kOk;
}

// evaluate

struct EvaluateArgs {
  Common common;
  std::string bundle;
  std::string tests;
};

int run_evaluate(const EvaluateArgs& a) {
  const auto bundle = bundle_from_json(read_json(a.bundle));
  const auto tests = read_testsets(a.tests, bundle.T);
  const auto cells = evaluate_grid(bundle, tests);
  bool ok = true;
  emit(a.common.out, [&](std::ostream& os) {
    os << "method,t,u,n,mean_adist,mean_alor,cindex\n";
    for (const auto& c : cells) {
      if (!c.ok()) {
        ok = false;
        std::cerr << "cell (t=" << c.t << ", u=" << c.u << ") failed: " << c.error << '\n';
        os << method_name(bundle.method) << ',' << c.t << ',' << c.u << ",0,NA,NA,NA\n";
        continue;
      }
      os << method_name(bundle.method) << ',' << c.t << ',' << c.u << ',' << c.n << ',' << csv::format_double(c.mean_adist) << ','
         << csv::format_double(c.mean_alor) << ',' << csv::format_optional(c.cindex) << '\n';
    }
  });
  return ok ? kOk : kFailedCells;
}

// benchmark

int run_bench(const Common& c) {
  if (c.config.empty()) throw std::invalid_argument("benchmark: --config is required");
  auto cfg = benchmark_config_from_json(read_json(c.config));
  if (c.seed) cfg.base_seed = *c.seed;
  if (!c.out.empty()) cfg.output_dir = c.out;
  if (c.jobs || std::getenv("DYNHAZ_JOBS")) cfg.parallelism = resolve_jobs(c.jobs);
  cfg.check();
  const auto res = run_benchmark(cfg, [](std::size_t done, std::size_t total) {
    std::cerr << "\r" << done << "/" << total << " jobs" << (done == total ? "\n" : "") << std::flush;
  });
  write_benchmark(cfg.output_dir, res);
  for (const auto& f : res.failures) {
    std::cerr << "cell " << f.cell << " rep " << f.replication << " " << method_name(f.method) << ": " << f.error << '\n';
  }
  return res.all_ok() ? kOk : kFailedCells;
}

// validate

int run_validate(const std::string& input, const std::vector<std::string>& ti) {
  const auto ds = load_generic(input, load_options(ti));
  std::cout << "ok: " << ds.size() << " subjects, T=" << ds.T << ", " << ds.num_covariates() << " covariates\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dynamic estimation of discrete-time hazards with person-period forests"};
  app.require_subcommand(1);

  TransformArgs ta;
  auto* transform = app.add_subcommand("transform", "write the person-period training table for a method");
  add_common(transform, ta.common);
  transform->add_option("--input", ta.input, "generic survival CSV")->required();
  transform->add_option("--method", ta.method, "separate | poolt | superpp | superpp0")->required();
  transform->add_option("--t", ta.t, "current time t");
  transform->add_option("--u", ta.u, "target time u (separate) or last pooled u (poolt)");
  transform->add_option("--time-invariant", ta.ti, "covariates to treat as time-invariant")->delimiter(',');

  Common sa;
  auto* simulate_cmd = app.add_subcommand("simulate", "generate a training set, test sets and true hazards");
  add_common(simulate_cmd, sa);

  FitArgs fa;
  auto* fit = app.add_subcommand("fit", "fit a model bundle");
  add_common(fit, fa.common);
  fit->add_option("--input", fa.input, "generic survival CSV")->required();
  fit->add_option("--method", fa.method, "Separate | Poolt | Superpp | Superpp0 | SuperppDTPO")->required();
  fit->add_option("--horizon", fa.horizon, "largest u to model (default: T of the data)");
  fit->add_option("--time-invariant", fa.ti, "covariates to treat as time-invariant")->delimiter(',');

  PredictArgs pa;
  auto* predict = app.add_subcommand("predict", "hazard, survival and event probabilities for one subject");
  add_common(predict, pa.common);
  predict->add_option("--bundle", pa.bundle, "bundle JSON from fit")->required();
  predict->add_option("--subject", pa.subject, "generic CSV with the subject's history")->required();
  predict->add_option("--t", pa.t, "current time t")->required();
  predict->add_option("--id", pa.id, "subject id when the file holds several");
  predict->add_option("--time-invariant", pa.ti, "covariates to treat as time-invariant")->delimiter(',');

  EvaluateArgs ea;
  auto* evaluate = app.add_subcommand("evaluate", "ADIST, ALOR and C-index over the (t, u) grid");
  add_common(evaluate, ea.common);
  evaluate->add_option("--bundle", ea.bundle, "bundle JSON from fit")->required();
  evaluate->add_option("--tests", ea.tests, "directory written by simulate")->required();

  Common ba;
  auto* bench = app.add_subcommand("benchmark", "run the factorial simulation study");
  add_common(bench, ba);

  std::string vinput;
  std::vector<std::string> vti;
  auto* validate_cmd = app.add_subcommand("validate", "check a generic survival CSV");
  validate_cmd->add_option("--input", vinput, "generic survival CSV")->required();
  validate_cmd->add_option("--time-invariant", vti, "covariates to treat as time-invariant")->delimiter(',');

  CLI11_PARSE(app, argc, argv);

  try {
    if (*transform) return run_transform(ta);
    if (*simulate_cmd) return run_simulate(sa);
    if (*fit) return run_fit(fa);
    if (*predict) return run_predict(pa);
    if (*evaluate) return run_evaluate(ea);
    if (*bench) return run_bench(ba);
    if (*validate_cmd) return run_validate(vinput, vti);
  } catch (const ValidationError& e) {
    std::cerr << "invalid input:\n" << format_report(e.violations());
    return kBadInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kBadInput;
  }
  return kBadInput;
}
