#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "dynhaz/person_period.hpp"
#include "dynhaz/rng.hpp"
#include "dynhaz/survival_data.hpp"

namespace dynhaz::test {

// Ten subjects in generic format. Covariate values are encoded so a row can
// be traced back: X1(t) = 10*i + t, X2 = 1000 + i.
inline double x1(int i, int t) { return 10.0 * i + t; }
inline double x2(int i) { return 1000.0 + i; }

inline GenericDataset generic_table(int subjects = 10) {
  const int tau[] = {2, 4, 3, 1, 4, 4, 2, 4, 3, 4};
  const int delta[] = {1, 1, 0, 0, 1, 0, 0, 1, 1, 0};
  std::vector<SubjectRecord> rows;
  for (int i = 1; i <= subjects; ++i) {
    SubjectRecord s;
    s.id = std::to_string(i);
    s.tau = tau[i - 1];
    s.delta = delta[i - 1];
    std::vector<double> a, b;
    for (int t = 0; t < s.tau; ++t) {
      a.push_back(x1(i, t));
      b.push_back(x2(i));
    }
    s.covariates = {a, b};
    rows.push_back(std::move(s));
  }
  return make_dataset({{"X1", CovariateKind::TimeVarying}, {"X2", CovariateKind::TimeInvariant}}, std::move(rows));
}

struct GoldenRow {
  int id, y, u, t, snapshot;
};

// Training rows for subjects 1-3, ordered by (t, u, id). Subject 2 has its
// event at tau = 4, so every one of its u = 4 rows carries y = 1.
inline const std::vector<GoldenRow>& golden_rows() {
  static const std::vector<GoldenRow> rows = {
      {1, 0, 1, 0, 0}, {2, 0, 1, 0, 0}, {3, 0, 1, 0, 0},  //
      {1, 1, 2, 0, 0}, {2, 0, 2, 0, 0}, {3, 0, 2, 0, 0},  //
      {2, 0, 3, 0, 0}, {3, 0, 3, 0, 0},                   //
      {2, 1, 4, 0, 0},                                    //
      {1, 1, 2, 1, 1}, {2, 0, 2, 1, 1}, {3, 0, 2, 1, 1},  //
      {2, 0, 3, 1, 1}, {3, 0, 3, 1, 1},                   //
      {2, 1, 4, 1, 1},                                    //
      {2, 0, 3, 2, 2}, {3, 0, 3, 2, 2},                   //
      {2, 1, 4, 2, 2},                                    //
      {2, 1, 4, 3, 3},
  };
  return rows;
}

// Person-period rows with u = t + 1 for data drawn from the logistic model
// with per-period intercepts alpha and slopes beta on x(u - 1).
inline TrainingTable simulate_logistic(Engine& rng, int n, const std::vector<double>& alpha, const std::vector<double>& beta) {
  const int T = static_cast<int>(alpha.size());
  TrainingTable t{{}, {.use_u = true, .use_t = false}, {}};
  for (std::size_t k = 0; k < beta.size(); ++k) t.covariate_names.push_back("b" + std::to_string(k));
  for (int i = 0; i < n; ++i) {
    for (int u = 1; u <= T; ++u) {
      std::vector<double> x(beta.size());
      double eta = alpha[static_cast<std::size_t>(u - 1)];
      for (std::size_t k = 0; k < x.size(); ++k) {
        x[k] = standard_normal(rng);
        eta += beta[k] * x[k];
      }
      const int y = uniform_open(rng) < 1 / (1 + std::exp(-eta)) ? 1 : 0;
      t.rows.push_back({static_cast<std::size_t>(i), std::to_string(i), y, u - 1, u, u - 1, x});
      if (y) break;
    }
  }
  return t;
}

}  // namespace dynhaz::test
