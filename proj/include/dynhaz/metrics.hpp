#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "dynhaz/dynamic_estimator.hpp"
#include "dynhaz/survival_data.hpp"

namespace dynhaz {

/// Estimates are pulled into [kAlorClamp, 1 - kAlorClamp] before taking log-odds.
inline constexpr double kAlorClamp = 1e-6;

inline double adist(double h, double hhat) { return std::abs(hhat - h); }

/// |log odds ratio| between estimate and truth; the truth must be interior.
inline double alor(double h, double hhat) {
  if (!(h > 0.0 && h < 1.0)) throw std::domain_error("alor: true hazard must lie strictly inside (0, 1)");
  const double e = std::clamp(hhat, kAlorClamp, 1.0 - kAlorClamp);
  return std::abs(std::log(e * (1.0 - h) / ((1.0 - e) * h)));
}

/// Share of truth-ordered pairs (h_i > h_j) whose estimates are ordered the
/// same way, with strict inequalities. Empty when no pair is truth-ordered.
inline std::optional<double> cindex(std::span<const double> h, std::span<const double> hhat) {
  if (h.size() != hhat.size()) throw std::invalid_argument("cindex: length mismatch");
  if (h.size() < 2) throw std::invalid_argument("cindex: need at least two values");
  double concordant = 0;
  double comparable = 0;
  for (std::size_t i = 0; i < h.size(); ++i) {
    for (std::size_t j = 0; j < h.size(); ++j) {
      if (h[i] > h[j]) {
        comparable += 1;
        if (hhat[i] > hhat[j]) concordant += 1;
      }
    }
  }
  if (comparable == 0) return std::nullopt;
  return concordant / comparable;
}

/// Subjects at risk at period k with their true hazard h_i(k).
struct TestSet {
  int k = 1;
  GenericDataset data;
  std::vector<double> true_hazard;
};

struct EvalCell {
  int t = 0;
  int u = 1;
  std::size_t n = 0;
  double mean_adist = 0;
  double mean_alor = 0;
  std::optional<double> cindex;
  std::string error;  // non-empty when the cell could not be evaluated

  bool ok() const noexcept { return error.empty(); }
};

/// Metrics for every (t, u) cell with 0 <= t < u <= bundle.T, using test set
/// u for all t. Cells are ordered by (t, u).
inline std::vector<EvalCell> evaluate_grid(const ModelBundle& bundle, std::span<const TestSet> tests) {
  std::vector<const TestSet*> by_k(static_cast<std::size_t>(bundle.T) + 1, nullptr);
  for (const auto& ts : tests) {
    if (ts.k >= 1 && ts.k <= bundle.T) by_k[static_cast<std::size_t>(ts.k)] = &ts;
  }
  for (int k = 1; k <= bundle.T; ++k) {
    const auto* ts = by_k[static_cast<std::size_t>(k)];
    if (!ts) throw std::invalid_argument("evaluate_grid: missing test set for u=" + std::to_string(k));
    if (ts->true_hazard.size() != ts->data.size()) throw std::invalid_argument("evaluate_grid: true hazards do not match test set");
    for (const auto& s : ts->data.subjects) {
      if (!at_risk(s, k)) throw std::invalid_argument("evaluate_grid: test subject " + s.id + " is not at risk at u=" + std::to_string(k));
    }
  }

  std::vector<EvalCell> cells;
  for (int t = 0; t < bundle.T; ++t) {
    for (int u = t + 1; u <= bundle.T; ++u) {
      const auto& ts = *by_k[static_cast<std::size_t>(u)];
      EvalCell cell;
      cell.t = t;
      cell.u = u;
      try {
        if (ts.data.size() == 0) throw std::invalid_argument("empty test set");
        std::vector<double> est(ts.data.size());
        for (std::size_t i = 0; i < est.size(); ++i) est[i] = estimate_hazard(bundle, ts.data.subjects[i], t, u);
        double sa = 0, sl = 0;
        for (std::size_t i = 0; i < est.size(); ++i) {
          sa += adist(ts.true_hazard[i], est[i]);
          sl += alor(ts.true_hazard[i], est[i]);
        }
        cell.n = est.size();
        cell.mean_adist = sa / static_cast<double>(est.size());
        cell.mean_alor = sl / static_cast<double>(est.size());
        if (est.size() >= 2) cell.cindex = cindex(ts.true_hazard, est);
      } catch (const std::exception& e) {
        cell = EvalCell{};
        cell.t = t;
        cell.u = u;
        cell.error = e.what();
      }
      cells.push_back(std::move(cell));
    }
  }
  return cells;
}

}  // namespace dynhaz
