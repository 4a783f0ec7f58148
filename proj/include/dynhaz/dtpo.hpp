#pragma once

// Discrete-time proportional odds (continuation ratio) model:
//   logit h(u | x) = alpha_u + beta' x
// with one intercept per period and no global intercept, fitted by IRLS on a
// person-period table.

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "dynhaz/person_period.hpp"

namespace dynhaz {

inline constexpr int kDtpoFormatVersion = 1;

class RankDeficientError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class SeparationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct DtpoOptions {
  double tol = 1e-8;  // relative deviance change
  int max_iter = 100;
  // A fit is treated as separated once some fitted linear predictor leaves
  // [-separation_eta, separation_eta] or the coefficient norm passes
  // separation_norm.
  double separation_eta = 30;
  double separation_norm = 1e4;
  // When set, a diverging fit is kept (flagged `separated`, predictions
  // clamped) instead of throwing SeparationError.
  bool allow_separation = false;
  // Adds indicators for t = 1..T-1 (t = 0 is the reference level).
  bool t_dummies = false;
};

/// Columns: D_1..D_T on u, optional t indicators, then the covariates.
struct Design {
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
  int T = 0;
  int p = 0;
  bool t_dummies = false;
  std::vector<std::string> covariate_names;
};

struct DtpoModel {
  int T = 0;
  std::vector<double> alpha;  // alpha_1..alpha_T
  std::vector<double> gamma;  // t effects for t = 1..T-1, empty unless t dummies were used
  std::vector<double> beta;
  std::vector<std::string> schema;  // covariate order of beta
  bool separated = false;
  int iterations = 0;
  double deviance = 0;
  std::vector<double> deviance_trace;

  std::size_t num_covariates() const noexcept { return beta.size(); }
};

inline Design build_design(const TrainingTable& table, int T, bool t_dummies = false) {
  if (T < 1) throw std::invalid_argument("build_design: T must be >= 1");
  const int p = static_cast<int>(table.covariate_names.size());
  const int extra = t_dummies ? T - 1 : 0;
  Design d;
  d.T = T;
  d.p = p;
  d.t_dummies = t_dummies;
  d.covariate_names = table.covariate_names;
  d.X = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(table.size()), T + extra + p);
  d.y.resize(static_cast<Eigen::Index>(table.size()));
  for (std::size_t i = 0; i < table.size(); ++i) {
    const auto& r = table.rows[i];
    const auto row = static_cast<Eigen::Index>(i);
    if (r.u < 1 || r.u > T) {
      throw std::out_of_range("build_design: u=" + std::to_string(r.u) + " outside 1.." + std::to_string(T));
    }
    d.X(row, r.u - 1) = 1.0;
    if (t_dummies && r.t >= 1) {
      if (r.t > T - 1) throw std::out_of_range("build_design: t outside 0..T-1");
      d.X(row, T + r.t - 1) = 1.0;
    }
    for (int k = 0; k < p; ++k) d.X(row, T + extra + k) = r.covariates[static_cast<std::size_t>(k)];
    d.y(row) = r.y;
  }
  return d;
}

namespace detail {

inline constexpr double kEtaClamp = 30.0;

inline double logistic(double eta) {
  eta = std::clamp(eta, -kEtaClamp, kEtaClamp);
  return 1.0 / (1.0 + std::exp(-eta));
}

inline double binomial_deviance(const Eigen::VectorXd& y, const Eigen::VectorXd& eta) {
  double dev = 0;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    // log(1 + e^-|eta|) form keeps both branches finite.
    const double e = eta(i);
    const double log1pexp = std::max(e, 0.0) + std::log1p(std::exp(-std::abs(e)));
    dev += y(i) > 0.5 ? log1pexp - e : log1pexp;
  }
  return 2 * dev;
}

}  // namespace detail

/// Maximum-likelihood logistic fit by iteratively reweighted least squares
/// with step halving. Converged when |dev - dev_prev| / (|dev| + 0.1) < tol.
inline DtpoModel fit_irls(const Design& d, const DtpoOptions& opts = {}) {
  const auto n = d.X.rows();
  const auto k = d.X.cols();
  if (n == 0) throw std::invalid_argument("fit_irls: empty design");
  for (Eigen::Index i = 0; i < n; ++i) {
    if (d.y(i) != 0.0 && d.y(i) != 1.0) throw std::invalid_argument("fit_irls: response must be binary");
  }
  const double events = d.y.sum();
  if (events == 0 || events == static_cast<double>(n)) {
    throw SeparationError("fit_irls: response has a single class; the likelihood has no finite maximum");
  }
  if (n < k || Eigen::ColPivHouseholderQR<Eigen::MatrixXd>(d.X).rank() < k) {
    throw RankDeficientError("fit_irls: design matrix is not of full column rank");
  }

  Eigen::VectorXd coef = Eigen::VectorXd::Zero(k);
  Eigen::VectorXd eta = Eigen::VectorXd::Zero(n);
  double dev = detail::binomial_deviance(d.y, eta);
  DtpoModel m;
  m.deviance_trace.push_back(dev);
  bool converged = false;
  int iter = 0;
  Eigen::VectorXd w(n), z(n);
  for (iter = 1; iter <= opts.max_iter; ++iter) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const double mu = detail::logistic(eta(i));
      const double var = std::max(mu * (1 - mu), 1e-12);
      w(i) = var;
      z(i) = eta(i) + (d.y(i) - mu) / var;
    }
    const Eigen::MatrixXd xtwx = d.X.transpose() * w.asDiagonal() * d.X;
    const Eigen::VectorXd xtwz = d.X.transpose() * w.cwiseProduct(z);
    Eigen::VectorXd next = xtwx.ldlt().solve(xtwz);
    if (!next.allFinite()) throw ConvergenceError("fit_irls: weighted least squares step is not finite");

    Eigen::VectorXd next_eta = d.X * next;
    double next_dev = detail::binomial_deviance(d.y, next_eta);
    for (int halvings = 0; next_dev > dev * (1 + 1e-12) && halvings < 30; ++halvings) {
      next = (coef + next) / 2;
      next_eta = d.X * next;
      next_dev = detail::binomial_deviance(d.y, next_eta);
    }
    if (next_dev > dev) {  // step halving exhausted; keep the previous iterate
      converged = true;
      break;
    }
    const double change = std::abs(next_dev - dev) / (std::abs(next_dev) + 0.1);
    coef = next;
    eta = next_eta;
    dev = next_dev;
    m.deviance_trace.push_back(dev);
    if (coef.norm() > opts.separation_norm || eta.cwiseAbs().maxCoeff() > opts.separation_eta) {
      if (!opts.allow_separation) {
        throw SeparationError("fit_irls: fitted probabilities are numerically 0 or 1 (separation)");
      }
      m.separated = true;
      converged = true;
      break;
    }
    if (change < opts.tol) {
      converged = true;
      break;
    }
  }
  if (!converged) {
    throw ConvergenceError("fit_irls: no convergence after " + std::to_string(opts.max_iter) + " iterations");
  }

  m.T = d.T;
  m.iterations = std::min(iter, opts.max_iter);
  m.deviance = dev;
  m.schema = d.covariate_names;
  m.alpha.assign(coef.data(), coef.data() + d.T);
  Eigen::Index off = d.T;
  if (d.t_dummies) {
    m.gamma.assign(coef.data() + off, coef.data() + off + d.T - 1);
    off += d.T - 1;
  }
  m.beta.assign(coef.data() + off, coef.data() + off + d.p);
  return m;
}

/// logistic(alpha_u + gamma_t + beta' x); the linear predictor is clamped to
/// +-30, so the result is strictly inside (0, 1).
inline double predict_hazard(const DtpoModel& m, std::span<const double> x, int u, int t = 0) {
  if (u < 1 || u > m.T) throw std::out_of_range("dtpo predict: u=" + std::to_string(u) + " outside 1.." + std::to_string(m.T));
  if (x.size() != m.beta.size()) {
    throw std::invalid_argument("dtpo predict: expected " + std::to_string(m.beta.size()) + " covariates");
  }
  double eta = m.alpha[static_cast<std::size_t>(u - 1)];
  if (!m.gamma.empty() && t >= 1) {
    if (t > m.T - 1) throw std::out_of_range("dtpo predict: t outside 0..T-1");
    eta += m.gamma[static_cast<std::size_t>(t - 1)];
  }
  for (std::size_t k = 0; k < x.size(); ++k) eta += m.beta[k] * x[k];
  return detail::logistic(eta);
}

inline nlohmann::json to_json(const DtpoModel& m) {
  return {{"format_version", kDtpoFormatVersion},
          {"kind", "dtpo"},
          {"T", m.T},
          {"alpha", m.alpha},
          {"gamma", m.gamma},
          {"beta", m.beta},
          {"schema", m.schema},
          {"separated", m.separated}};
}

inline DtpoModel dtpo_from_json(const nlohmann::json& j) {
  if (j.value("kind", std::string()) != "dtpo") throw std::runtime_error("not a dtpo model");
  if (j.at("format_version").get<int>() != kDtpoFormatVersion) throw std::runtime_error("unsupported dtpo format_version");
  DtpoModel m;
  m.T = j.at("T").get<int>();
  m.alpha = j.at("alpha").get<std::vector<double>>();
  m.gamma = j.value("gamma", std::vector<double>{});
  m.beta = j.at("beta").get<std::vector<double>>();
  m.schema = j.at("schema").get<std::vector<std::string>>();
  m.separated = j.value("separated", false);
  if (static_cast<int>(m.alpha.size()) != m.T || m.beta.size() != m.schema.size() ||
      (!m.gamma.empty() && static_cast<int>(m.gamma.size()) != m.T - 1)) {
    throw std::runtime_error("dtpo model dimensions are inconsistent");
  }
  return m;
}

}  // namespace dynhaz
