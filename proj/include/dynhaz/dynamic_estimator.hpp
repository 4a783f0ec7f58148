#pragma once

// Fitting and querying the five dynamic hazard estimators, and turning a
// sequence of hazards into conditional survival and event-probability curves.

#include <algorithm>
#include <array>
#include <atomic>
#include <cctype>
#include <cmath>
#include <exception>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "dynhaz/dtpo.hpp"
#include "dynhaz/hellinger_forest.hpp"
#include "dynhaz/person_period.hpp"
#include "dynhaz/rng.hpp"
#include "dynhaz/survival_data.hpp"

namespace dynhaz {

inline constexpr int kBundleFormatVersion = 1;

enum class MethodKind { Separate, Poolt, Superpp, Superpp0, SuperppDTPO };

inline constexpr std::array kAllMethods{MethodKind::Separate, MethodKind::Poolt, MethodKind::Superpp,
                                        MethodKind::Superpp0, MethodKind::SuperppDTPO};

inline std::string_view method_name(MethodKind m) {
  switch (m) {
    case MethodKind::Separate: return "Separate";
    case MethodKind::Poolt: return "Poolt";
    case MethodKind::Superpp: return "Superpp";
    case MethodKind::Superpp0: return "Superpp0";
    case MethodKind::SuperppDTPO: return "SuperppDTPO";
  }
  return "?";
}

/// Accepts the display name in any letter case.
inline MethodKind parse_method(std::string_view s) {
  auto lower = [](std::string_view v) {
    std::string out(v);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
  };
  for (auto m : kAllMethods) {
    if (lower(method_name(m)) == lower(s)) return m;
  }
  throw std::invalid_argument("unknown method '" + std::string(s) + "'");
}

/// Number of models a method needs to cover every (t, u) cell up to horizon T.
inline std::size_t expected_model_count(MethodKind m, int T) {
  switch (m) {
    case MethodKind::Separate: return static_cast<std::size_t>(T) * static_cast<std::size_t>(T + 1) / 2;
    case MethodKind::Poolt: return static_cast<std::size_t>(T);
    default: return 1;
  }
}

/// Model key: (t, u) for Separate, (t, -1) for Poolt, (-1, -1) otherwise.
struct ModelKey {
  int t = -1;
  int u = -1;
  auto operator<=>(const ModelKey&) const = default;
};

struct ModelSlot {
  std::variant<std::monostate, HazardForest, DtpoModel> model;
  std::string absent_reason;  // set when no model could be trained for the key

  bool present() const noexcept { return !std::holds_alternative<std::monostate>(model); }
};

struct BundleConfig {
  ForestConfig forest;
  DtpoOptions dtpo{.allow_separation = true};
  bool superpp0_use_t = true;
  std::optional<int> horizon;  // defaults to the dataset's T
  int jobs = 1;
};

struct ModelBundle {
  MethodKind method = MethodKind::Superpp;
  int T = 0;
  std::vector<std::string> covariate_names;
  bool superpp0_use_t = true;
  std::map<ModelKey, ModelSlot> models;

  std::size_t model_count() const noexcept { return models.size(); }
  std::size_t absent_count() const {
    return static_cast<std::size_t>(std::count_if(models.begin(), models.end(), [](const auto& kv) { return !kv.second.present(); }));
  }
};

class MissingModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline std::vector<ModelKey> model_keys(MethodKind m, int T) {
  std::vector<ModelKey> keys;
  if (m == MethodKind::Separate) {
    for (int t = 0; t < T; ++t) {
      for (int u = t + 1; u <= T; ++u) keys.push_back({t, u});
    }
  } else if (m == MethodKind::Poolt) {
    for (int t = 0; t < T; ++t) keys.push_back({t, -1});
  } else {
    keys.push_back({-1, -1});
  }
  return keys;
}

namespace detail {

inline ModelSlot fit_slot(const GenericDataset& ds, MethodKind method, ModelKey key, int horizon, const BundleConfig& cfg,
                          int threads) {
  ModelSlot slot;
  ForestConfig fc = cfg.forest;
  fc.seed = derive_seed(cfg.forest.seed, {key.t + 1, key.u + 1});
  fc.num_threads = threads;
  try {
    switch (method) {
      case MethodKind::Separate: slot.model = fit_forest(build_separate(ds, key.t, key.u), fc); break;
      case MethodKind::Poolt: slot.model = fit_forest(build_poolt(ds, key.t, horizon), fc); break;
      case MethodKind::Superpp: slot.model = fit_forest(build_superpp(ds), fc); break;
      case MethodKind::Superpp0: slot.model = fit_forest(build_superpp0(ds, cfg.superpp0_use_t), fc); break;
      case MethodKind::SuperppDTPO:
        // Periods beyond the data get no rows; their intercepts are not estimable.
        slot.model = fit_irls(build_design(build_superpp(ds), ds.T, cfg.dtpo.t_dummies), cfg.dtpo);
        break;
    }
  } catch (const EmptyRiskSetError& e) {
    slot.absent_reason = e.what();
  }
  return slot;
}

}  // namespace detail

/// Fits every model of `method`. Keys whose risk set is empty are kept as
/// absent slots and reported when queried.
inline ModelBundle fit_bundle(const GenericDataset& ds, MethodKind method, const BundleConfig& cfg = {}) {
  if (auto v = validate(ds); !v.empty()) throw ValidationError(std::move(v));
  const int horizon = cfg.horizon.value_or(ds.T);
  if (horizon < ds.T) throw std::invalid_argument("fit_bundle: horizon is below the dataset's T");

  ModelBundle b;
  b.method = method;
  b.T = horizon;
  b.covariate_names = ds.covariate_names();
  b.superpp0_use_t = cfg.superpp0_use_t;
  const auto keys = model_keys(method, horizon);
  std::vector<ModelSlot> slots(keys.size());
  const int jobs = std::max(1, cfg.jobs);
  if (jobs == 1 || keys.size() == 1) {
    for (std::size_t i = 0; i < keys.size(); ++i) slots[i] = detail::fit_slot(ds, method, keys[i], horizon, cfg, jobs);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(keys.size());
    auto work = [&] {
      for (std::size_t i = next++; i < keys.size(); i = next++) {
        try {
          slots[i] = detail::fit_slot(ds, method, keys[i], horizon, cfg, 1);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    };
    {
      std::vector<std::jthread> pool;
      for (int i = 0; i < std::min<int>(jobs, static_cast<int>(keys.size())); ++i) pool.emplace_back(work);
    }
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }
  for (std::size_t i = 0; i < keys.size(); ++i) b.models.emplace(keys[i], std::move(slots[i]));
  return b;
}

/// Hazard at the future period u for a subject whose covariate snapshots
/// x(0..t) are given in `history` (only x(0) is needed for Superpp0).
inline double estimate_hazard(const ModelBundle& b, std::span<const std::vector<double>> history, int t, int u) {
  if (t < 0 || u <= t || u > b.T) {
    throw std::out_of_range("estimate_hazard: need 0 <= t < u <= " + std::to_string(b.T) + ", got (t=" +
                            std::to_string(t) + ", u=" + std::to_string(u) + ")");
  }
  const bool baseline = b.method == MethodKind::Superpp0;
  const std::size_t needed = baseline ? 1 : static_cast<std::size_t>(t) + 1;
  if (history.size() < needed) throw std::invalid_argument("estimate_hazard: history does not reach t");
  const auto& snap = history[baseline ? 0 : static_cast<std::size_t>(t)];
  if (snap.size() != b.covariate_names.size()) throw SchemaError("estimate_hazard: snapshot does not match covariate schema");

  ModelKey key;
  if (b.method == MethodKind::Separate) key = {t, u};
  if (b.method == MethodKind::Poolt) key = {t, -1};
  const auto it = b.models.find(key);
  if (it == b.models.end()) throw MissingModelError("estimate_hazard: no model for key");
  if (!it->second.present()) throw MissingModelError("estimate_hazard: model absent: " + it->second.absent_reason);

  if (const auto* dtpo = std::get_if<DtpoModel>(&it->second.model)) {
    if (u > dtpo->T) throw MissingModelError("estimate_hazard: no intercept for u=" + std::to_string(u));
    return predict_hazard(*dtpo, snap, u, t);
  }
  std::vector<double> x = snap;
  switch (b.method) {
    case MethodKind::Separate: break;
    case MethodKind::Poolt: x.push_back(u); break;
    case MethodKind::Superpp: x.push_back(u); x.push_back(t); break;
    case MethodKind::Superpp0:
      x.push_back(u);
      if (b.superpp0_use_t) x.push_back(t);
      break;
    case MethodKind::SuperppDTPO: break;
  }
  return predict_hazard(std::get<HazardForest>(it->second.model), x);
}

/// Convenience overload taking the snapshots from a subject record.
inline double estimate_hazard(const ModelBundle& b, const SubjectRecord& s, int t, int u) {
  std::vector<std::vector<double>> history;
  const int last = b.method == MethodKind::Superpp0 ? 0 : t;
  for (int k = 0; k <= last; ++k) history.push_back(covariate_snapshot(s, k));
  return estimate_hazard(b, history, t, u);
}

/// Survival and event probabilities for u = origin+1.., conditional on being
/// at risk after the origin.
struct HazardCurve {
  int origin = 0;
  std::vector<int> u;
  std::vector<double> hazard;
  std::vector<double> survival;
  std::vector<double> event_prob;
};

inline HazardCurve hazard_to_curve(int origin, std::span<const double> hazards) {
  HazardCurve c;
  c.origin = origin;
  double s = 1.0;
  for (std::size_t i = 0; i < hazards.size(); ++i) {
    const double h = hazards[i];
    if (!(h >= 0.0 && h <= 1.0)) throw std::domain_error("hazard_to_curve: hazard outside [0, 1]");
    const double next = s * (1.0 - h);
    c.u.push_back(origin + 1 + static_cast<int>(i));
    c.hazard.push_back(h);
    c.survival.push_back(next);
    c.event_prob.push_back(s - next);
    s = next;
  }
  return c;
}

// Serialization.

inline nlohmann::json to_json(const ModelBundle& b) {
  nlohmann::json models = nlohmann::json::array();
  for (const auto& [key, slot] : b.models) {
    nlohmann::json m{{"t", key.t}, {"u", key.u}};
    if (const auto* f = std::get_if<HazardForest>(&slot.model)) m["model"] = to_json(*f);
    else if (const auto* d = std::get_if<DtpoModel>(&slot.model)) m["model"] = to_json(*d);
    else m["absent"] = slot.absent_reason;
    models.push_back(std::move(m));
  }
  return {{"format_version", kBundleFormatVersion},
          {"method", method_name(b.method)},
          {"T", b.T},
          {"covariates", b.covariate_names},
          {"superpp0_use_t", b.superpp0_use_t},
          {"models", std::move(models)}};
}

inline ModelBundle bundle_from_json(const nlohmann::json& j) {
  if (j.at("format_version").get<int>() != kBundleFormatVersion) throw std::runtime_error("unsupported bundle format_version");
  ModelBundle b;
  b.method = parse_method(j.at("method").get<std::string>());
  b.T = j.at("T").get<int>();
  b.covariate_names = j.at("covariates").get<std::vector<std::string>>();
  b.superpp0_use_t = j.value("superpp0_use_t", true);
  for (const auto& m : j.at("models")) {
    ModelSlot slot;
    if (m.contains("model")) {
      const auto& jm = m.at("model");
      if (jm.value("kind", std::string()) == "dtpo") slot.model = dtpo_from_json(jm);
      else slot.model = forest_from_json(jm);
    } else {
      slot.absent_reason = m.value("absent", std::string("absent"));
    }
    b.models.emplace(ModelKey{m.at("t").get<int>(), m.at("u").get<int>()}, std::move(slot));
  }
  if (b.models.size() != expected_model_count(b.method, b.T)) throw std::runtime_error("bundle has the wrong number of models");
  return b;
}

}  // namespace dynhaz
