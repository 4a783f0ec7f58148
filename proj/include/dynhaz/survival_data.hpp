#pragma once

// Discrete-time survival data with time-varying covariates, in the wide layout:
// one row per subject, columns id,tau,delta followed by per-period covariate
// columns name_0..name_{T-1} (time-varying) or a bare column (time-invariant).

#include <algorithm>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "dynhaz/csv.hpp"

namespace dynhaz {

enum class CovariateKind { TimeInvariant, TimeVarying };

struct CovariateSpec {
  std::string name;
  CovariateKind kind = CovariateKind::TimeVarying;

  bool operator==(const CovariateSpec&) const = default;
};

struct SubjectRecord {
  std::string id;
  int tau = 1;
  int delta = 0;
  // covariates[k][t] for t = 0..tau-1; values at t >= tau are unavailable.
  std::vector<std::vector<double>> covariates;

  bool operator==(const SubjectRecord&) const = default;
};

struct GenericDataset {
  int T = 0;
  std::vector<CovariateSpec> specs;
  std::vector<SubjectRecord> subjects;

  std::size_t num_covariates() const { return specs.size(); }
  std::size_t size() const { return subjects.size(); }

  std::vector<std::string> covariate_names() const {
    std::vector<std::string> names;
    names.reserve(specs.size());
    for (const auto& s : specs) names.push_back(s.name);
    return names;
  }

  bool operator==(const GenericDataset&) const = default;
};

struct Violation {
  std::string subject_id;  // empty for file-level problems
  std::string message;
};

/// One line per violation: `subject=<id>: <message>` (or `file: <message>`).
inline std::string format_report(const std::vector<Violation>& violations) {
  std::ostringstream os;
  for (const auto& v : violations) {
    if (v.subject_id.empty()) {
      os << "file: " << v.message << '\n';
    } else {
      os << "subject=" << v.subject_id << ": " << v.message << '\n';
    }
  }
  return os.str();
}

class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(std::vector<Violation> violations)
      : std::runtime_error("dataset validation failed:\n" + format_report(violations)),
        violations_(std::move(violations)) {}

  const std::vector<Violation>& violations() const noexcept { return violations_; }

 private:
  std::vector<Violation> violations_;
};

/// Checks every invariant of a dataset and returns the violations found.
inline std::vector<Violation> validate(const GenericDataset& ds) {
  std::vector<Violation> out;
  std::set<std::string> names;
  for (const auto& s : ds.specs) {
    if (s.name.empty()) out.push_back({"", "empty covariate name"});
    if (!names.insert(s.name).second) out.push_back({"", "duplicate covariate name '" + s.name + "'"});
  }
  if (ds.subjects.empty()) out.push_back({"", "dataset has no subjects"});
  int max_tau = 0;
  std::set<std::string> ids;
  for (const auto& s : ds.subjects) {
    if (!ids.insert(s.id).second) out.push_back({s.id, "duplicate subject id"});
    if (s.tau < 1) {
      out.push_back({s.id, "tau " + std::to_string(s.tau) + " out of range (must be >= 1)"});
      continue;
    }
    max_tau = std::max(max_tau, s.tau);
    if (s.delta != 0 && s.delta != 1) out.push_back({s.id, "delta must be 0 or 1"});
    if (s.covariates.size() != ds.specs.size()) {
      out.push_back({s.id, "covariate count does not match schema"});
      continue;
    }
    for (std::size_t k = 0; k < ds.specs.size(); ++k) {
      const auto& path = s.covariates[k];
      if (path.size() != static_cast<std::size_t>(s.tau)) {
        out.push_back({s.id, "covariate '" + ds.specs[k].name + "' needs values at t=0.." + std::to_string(s.tau - 1)});
        continue;
      }
      if (ds.specs[k].kind == CovariateKind::TimeInvariant &&
          std::any_of(path.begin(), path.end(), [&](double v) { return v != path.front(); })) {
        out.push_back({s.id, "time-invariant covariate '" + ds.specs[k].name + "' varies over t"});
      }
    }
  }
  if (!ds.subjects.empty() && max_tau != ds.T) {
    out.push_back({"", "T=" + std::to_string(ds.T) + " differs from max tau=" + std::to_string(max_tau)});
  }
  return out;
}

/// Builds a dataset with T = max tau, throwing ValidationError on any violation.
inline GenericDataset make_dataset(std::vector<CovariateSpec> specs, std::vector<SubjectRecord> subjects) {
  GenericDataset ds;
  ds.specs = std::move(specs);
  ds.subjects = std::move(subjects);
  for (const auto& s : ds.subjects) ds.T = std::max(ds.T, s.tau);
  if (auto v = validate(ds); !v.empty()) throw ValidationError(std::move(v));
  return ds;
}

/// Latest covariate values at time t; time-invariant entries are their constant value.
inline std::vector<double> covariate_snapshot(const SubjectRecord& s, int t) {
  if (t < 0 || t >= s.tau) {
    throw std::out_of_range("covariate_snapshot: t=" + std::to_string(t) + " outside 0.." +
                            std::to_string(s.tau - 1) + " for subject " + s.id);
  }
  std::vector<double> x(s.covariates.size());
  for (std::size_t k = 0; k < x.size(); ++k) x[k] = s.covariates[k][static_cast<std::size_t>(t)];
  return x;
}

/// True when neither the event nor censoring happened before period u.
inline bool at_risk(const SubjectRecord& s, int u) noexcept { return u >= 1 && u <= s.tau; }

struct LoadOptions {
  // Covariates given as name_t columns that must nevertheless be constant.
  std::vector<std::string> time_invariant;
};

namespace detail {

// Splits "name_12" into ("name", 12); returns false for a bare column name.
inline bool split_time_column(const std::string& col, std::string& name, int& t) {
  const auto pos = col.rfind('_');
  if (pos == std::string::npos || pos == 0 || pos + 1 == col.size()) return false;
  const auto digits = std::string_view(col).substr(pos + 1);
  if (!std::all_of(digits.begin(), digits.end(), [](char c) { return c >= '0' && c <= '9'; })) return false;
  auto v = csv::parse_int(digits);
  if (!v || *v > 100000) return false;
  name = col.substr(0, pos);
  t = static_cast<int>(*v);
  return true;
}

struct ColumnGroup {
  std::string name;
  bool bare = false;
  std::vector<int> columns;  // file column per t (bare: single entry)
};

}  // namespace detail

/// Parses and validates a wide-format dataset. Every problem found is
/// collected and reported together in one ValidationError.
inline GenericDataset read_generic(std::istream& in, const LoadOptions& opts = {}) {
  std::vector<Violation> bad;
  std::string line;
  if (!std::getline(in, line)) throw ValidationError(std::vector<Violation>{{"", "empty input: missing header row"}});
  const auto header = csv::split_line(line);
  if (header.size() < 3 || header[0] != "id" || header[1] != "tau" || header[2] != "delta") {
    throw ValidationError(std::vector<Violation>{{"", "header must start with id,tau,delta"}});
  }

  std::vector<detail::ColumnGroup> groups;
  std::map<std::string, std::size_t> group_of;
  std::map<std::string, std::map<int, int>> time_cols;
  for (std::size_t c = 3; c < header.size(); ++c) {
    std::string name;
    int t = 0;
    const bool timed = detail::split_time_column(header[c], name, t);
    if (!timed) name = header[c];
    auto [it, fresh] = group_of.try_emplace(name, groups.size());
    if (fresh) groups.push_back({name, !timed, {}});
    auto& g = groups[it->second];
    if (g.bare != !timed || (g.bare && !fresh)) {
      bad.push_back({"", "column '" + header[c] + "' conflicts with another column for '" + name + "'"});
      continue;
    }
    if (g.bare) {
      g.columns.push_back(static_cast<int>(c));
    } else if (!time_cols[name].emplace(t, static_cast<int>(c)).second) {
      bad.push_back({"", "duplicate column '" + header[c] + "'"});
    }
  }
  for (auto& g : groups) {
    if (g.bare) continue;
    const auto& m = time_cols[g.name];
    int expect = 0;
    for (const auto& [t, c] : m) {
      if (t != expect) {
        bad.push_back({"", "covariate '" + g.name + "' is missing column for t=" + std::to_string(expect)});
        break;
      }
      g.columns.push_back(c);
      ++expect;
    }
  }
  std::vector<CovariateSpec> specs;
  for (const auto& g : groups) {
    const bool declared = std::find(opts.time_invariant.begin(), opts.time_invariant.end(), g.name) !=
                          opts.time_invariant.end();
    specs.push_back({g.name, (g.bare || declared) ? CovariateKind::TimeInvariant : CovariateKind::TimeVarying});
  }
  for (const auto& name : opts.time_invariant) {
    if (!group_of.count(name)) bad.push_back({"", "declared time-invariant covariate '" + name + "' not in header"});
  }
  if (!bad.empty()) throw ValidationError(std::move(bad));

  std::vector<SubjectRecord> subjects;
  std::set<std::string> seen;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto f = csv::split_line(line);
    const std::string id = f.empty() ? std::string() : f[0];
    const std::string who = id.empty() ? "line " + std::to_string(lineno) : id;
    if (f.size() != header.size()) {
      bad.push_back({who, "expected " + std::to_string(header.size()) + " fields, got " + std::to_string(f.size())});
      continue;
    }
    if (!id.empty() && !seen.insert(id).second) {
      bad.push_back({who, "duplicate subject id"});
      continue;
    }
    SubjectRecord s;
    s.id = id;
    auto tau = csv::parse_int(f[1]);
    auto delta = csv::parse_int(f[2]);
    if (!tau || *tau < 1) {
      bad.push_back({who, "tau '" + f[1] + "' out of range (must be an integer >= 1)"});
      continue;
    }
    if (!delta || (*delta != 0 && *delta != 1)) {
      bad.push_back({who, "delta '" + f[2] + "' must be 0 or 1"});
      continue;
    }
    s.tau = static_cast<int>(*tau);
    s.delta = static_cast<int>(*delta);
    bool ok = true;
    for (std::size_t k = 0; k < groups.size(); ++k) {
      const auto& g = groups[k];
      std::vector<double> path;
      if (g.bare) {
        auto v = csv::parse_double(f[static_cast<std::size_t>(g.columns[0])]);
        if (!v) {
          bad.push_back({who, "time-invariant covariate '" + g.name + "' is NA or not numeric"});
          ok = false;
          continue;
        }
        path.assign(static_cast<std::size_t>(s.tau), *v);
      } else {
        if (static_cast<int>(g.columns.size()) < s.tau) {
          bad.push_back({who, "tau " + std::to_string(s.tau) + " out of range: covariate '" + g.name +
                                  "' has columns only up to t=" + std::to_string(g.columns.size() - 1)});
          ok = false;
          continue;
        }
        for (int t = 0; t < s.tau; ++t) {
          const auto& cell = f[static_cast<std::size_t>(g.columns[static_cast<std::size_t>(t)])];
          auto v = csv::parse_double(cell);
          if (!v) {
            std::string what = cell == csv::kNA ? (t == s.tau - 1 ? "NA at t=tau-1=" : "interior NA at t=")
                                                : "non-numeric value '" + cell + "' at t=";
            bad.push_back({who, what + std::to_string(t) + " for covariate '" + g.name + "'"});
            ok = false;
            break;
          }
          path.push_back(*v);
        }
      }
      s.covariates.push_back(std::move(path));
    }
    if (ok) subjects.push_back(std::move(s));
  }
  if (subjects.empty() && bad.empty()) bad.push_back({"", "dataset has no subjects"});
  if (!bad.empty()) throw ValidationError(std::move(bad));
  return make_dataset(std::move(specs), std::move(subjects));
}

inline GenericDataset load_generic(const std::string& path, const LoadOptions& opts = {}) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return read_generic(in, opts);
}

/// Writes the wide layout. Time-invariant covariates become a bare column;
/// time-varying ones get columns for t = 0..T-1 with NA from tau onwards.
inline void write_generic(std::ostream& out, const GenericDataset& ds) {
  out << "id,tau,delta";
  for (const auto& spec : ds.specs) {
    if (spec.kind == CovariateKind::TimeInvariant) {
      out << ',' << spec.name;
    } else {
      for (int t = 0; t < ds.T; ++t) out << ',' << spec.name << '_' << t;
    }
  }
  out << '\n';
  for (const auto& s : ds.subjects) {
    out << s.id << ',' << s.tau << ',' << s.delta;
    for (std::size_t k = 0; k < ds.specs.size(); ++k) {
      const auto& path = s.covariates[k];
      if (ds.specs[k].kind == CovariateKind::TimeInvariant) {
        out << ',' << csv::format_double(path.front());
      } else {
        for (int t = 0; t < ds.T; ++t) {
          out << ',';
          if (t < s.tau) {
            out << csv::format_double(path[static_cast<std::size_t>(t)]);
          } else {
            out << csv::kNA;
          }
        }
      }
    }
    out << '\n';
  }
}

inline void save_generic(const std::string& path, const GenericDataset& ds) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  write_generic(out, ds);
}

}  // namespace dynhaz
