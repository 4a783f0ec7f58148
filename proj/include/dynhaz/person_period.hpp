#pragma once

// Person-period training tables. A row pairs a subject at risk at the future
// period u with its covariate snapshot at the current period t < u; y marks an
// observed event at u. Tables differ only in which (t, u) cells they stack and
// which of u and t are exposed as model features.

#include <algorithm>
#include <ostream>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "dynhaz/csv.hpp"
#include "dynhaz/survival_data.hpp"

namespace dynhaz {

struct PersonPeriodRow {
  std::size_t subject = 0;  // position in the source dataset
  std::string id;
  int y = 0;
  int t = 0;
  int u = 1;
  int snapshot_t = 0;  // period the covariate values were taken from
  std::vector<double> covariates;

  bool operator==(const PersonPeriodRow&) const = default;
};

/// Which of the bookkeeping columns are model features, appended after the covariates as u then t.
struct FeatureSchema {
  bool use_u = false;
  bool use_t = false;

  bool operator==(const FeatureSchema&) const = default;
};

struct TrainingTable {
  std::vector<std::string> covariate_names;
  FeatureSchema schema;
  std::vector<PersonPeriodRow> rows;

  std::size_t num_features() const {
    return covariate_names.size() + (schema.use_u ? 1 : 0) + (schema.use_t ? 1 : 0);
  }

  std::vector<std::string> feature_names() const {
    auto names = covariate_names;
    if (schema.use_u) names.emplace_back("u");
    if (schema.use_t) names.emplace_back("t");
    return names;
  }

  std::vector<double> features(const PersonPeriodRow& r) const {
    auto x = r.covariates;
    if (schema.use_u) x.push_back(r.u);
    if (schema.use_t) x.push_back(r.t);
    return x;
  }

  bool empty() const { return rows.empty(); }
  std::size_t size() const { return rows.size(); }
};

class EmptyRiskSetError : public std::runtime_error {
 public:
  EmptyRiskSetError(int t, int u)
      : std::runtime_error("no subject at risk for (t=" + std::to_string(t) + ", u=" + std::to_string(u) + ")"),
        t_(t),
        u_(u) {}
  int t() const noexcept { return t_; }
  int u() const noexcept { return u_; }

 private:
  int t_;
  int u_;
};

namespace detail {

inline void append_cell(const GenericDataset& ds, int t, int u, bool baseline_only, std::vector<PersonPeriodRow>& out) {
  for (std::size_t i = 0; i < ds.subjects.size(); ++i) {
    const auto& s = ds.subjects[i];
    if (!at_risk(s, u)) continue;
    const int snap = baseline_only ? 0 : t;
    out.push_back({i, s.id, (s.delta == 1 && s.tau == u) ? 1 : 0, t, u, snap, covariate_snapshot(s, snap)});
  }
}

inline void check_cell(int t, int u) {
  if (t < 0 || u <= t) {
    throw std::invalid_argument("invalid cell (t=" + std::to_string(t) + ", u=" + std::to_string(u) +
                                "): need 0 <= t < u");
  }
}

}  // namespace detail

/// Rows for one (t, u) cell: subjects at risk at u with their values at t.
inline TrainingTable build_separate(const GenericDataset& ds, int t, int u) {
  detail::check_cell(t, u);
  TrainingTable table{ds.covariate_names(), {}, {}};
  detail::append_cell(ds, t, u, false, table.rows);
  if (table.empty()) throw EmptyRiskSetError(t, u);
  return table;
}

/// All horizons u = t+1..horizon for a fixed t, with u as an ordinal feature.
/// Horizons with an empty risk set contribute no rows.
inline TrainingTable build_poolt(const GenericDataset& ds, int t, int horizon) {
  detail::check_cell(t, t + 1);
  TrainingTable table{ds.covariate_names(), {.use_u = true, .use_t = false}, {}};
  for (int u = t + 1; u <= horizon; ++u) detail::append_cell(ds, t, u, false, table.rows);
  if (table.empty()) throw EmptyRiskSetError(t, t + 1);
  return table;
}

inline TrainingTable build_poolt(const GenericDataset& ds, int t) { return build_poolt(ds, t, ds.T); }

/// Every (t, u) cell with t < u <= T stacked, sorted by (t, u, subject).
inline TrainingTable build_superpp(const GenericDataset& ds) {
  TrainingTable table{ds.covariate_names(), {.use_u = true, .use_t = true}, {}};
  for (int t = 0; t < ds.T; ++t) {
    for (int u = t + 1; u <= ds.T; ++u) detail::append_cell(ds, t, u, false, table.rows);
  }
  return table;
}

/// The superpp row grid with every snapshot taken at t = 0. `keep_t` controls
/// whether t stays a model feature.
inline TrainingTable build_superpp0(const GenericDataset& ds, bool keep_t = true) {
  TrainingTable table{ds.covariate_names(), {.use_u = true, .use_t = keep_t}, {}};
  for (int t = 0; t < ds.T; ++t) {
    for (int u = t + 1; u <= ds.T; ++u) detail::append_cell(ds, t, u, true, table.rows);
  }
  return table;
}

/// CSV with columns id,y,t,u followed by the covariate values.
inline void write_table(std::ostream& out, const TrainingTable& table) {
  out << "id,y,t,u";
  for (const auto& n : table.covariate_names) out << ',' << n;
  out << '\n';
  for (const auto& r : table.rows) {
    out << r.id << ',' << r.y << ',' << r.t << ',' << r.u;
    for (double v : r.covariates) out << ',' << csv::format_double(v);
    out << '\n';
  }
}

}  // namespace dynhaz
