#pragma once

// Brute-force reference implementations used to check the library.

#include <algorithm>
#include <cmath>
#include <memory>
#include <optional>
#include <set>
#include <vector>

namespace dynhaz::oracle {

inline double hellinger(double l1, double l0, double r1, double r0) {
  const double n1 = l1 + r1, n0 = l0 + r0;
  const double a = std::sqrt(l1 / n1) - std::sqrt(l0 / n0);
  const double b = std::sqrt(r1 / n1) - std::sqrt(r0 / n0);
  return std::sqrt(a * a + b * b);
}

struct Split {
  int feature = -1;
  double threshold = 0;
  double score = -1;
};

// Every feature, every midpoint between consecutive distinct values, counts
// recomputed from scratch. Ties keep the first candidate found, which is the
// lowest feature and then the smallest threshold.
inline Split best_split(const std::vector<std::vector<double>>& x, const std::vector<int>& y, const std::vector<std::size_t>& idx) {
  Split best;
  if (idx.empty()) return best;
  const std::size_t p = x[idx[0]].size();
  for (std::size_t f = 0; f < p; ++f) {
    std::set<double> values;
    for (auto i : idx) values.insert(x[i][f]);
    std::vector<double> v(values.begin(), values.end());
    for (std::size_t k = 0; k + 1 < v.size(); ++k) {
      double thr = (v[k] + v[k + 1]) / 2;
      if (!(thr < v[k + 1])) thr = v[k];
      double l1 = 0, l0 = 0, r1 = 0, r0 = 0;
      for (auto i : idx) {
        const bool left = x[i][f] <= thr;
        if (y[i]) (left ? l1 : r1) += 1;
        else (left ? l0 : r0) += 1;
      }
      const double s = hellinger(l1, l0, r1, r0);
      if (s > best.score) best = {static_cast<int>(f), thr, s};
    }
  }
  return best;
}

struct Node {
  int feature = -1;
  double threshold = 0;
  double proportion = 0;
  int count = 0;
  std::unique_ptr<Node> left, right;
};

// Recursive tree on all rows with every feature tried at every node.
inline std::unique_ptr<Node> grow(const std::vector<std::vector<double>>& x, const std::vector<int>& y,
                                  const std::vector<std::size_t>& idx, int min_node_size, std::optional<int> max_depth,
                                  int depth = 0) {
  auto node = std::make_unique<Node>();
  double events = 0;
  for (auto i : idx) events += y[i];
  node->count = static_cast<int>(idx.size());
  node->proportion = events / static_cast<double>(idx.size());
  const bool pure = events == 0 || events == static_cast<double>(idx.size());
  if (pure || static_cast<int>(idx.size()) <= min_node_size || (max_depth && depth >= *max_depth)) return node;
  const Split s = best_split(x, y, idx);
  if (s.feature < 0) return node;
  std::vector<std::size_t> l, r;
  for (auto i : idx) (x[i][static_cast<std::size_t>(s.feature)] <= s.threshold ? l : r).push_back(i);
  node->feature = s.feature;
  node->threshold = s.threshold;
  node->left = grow(x, y, l, min_node_size, max_depth, depth + 1);
  node->right = grow(x, y, r, min_node_size, max_depth, depth + 1);
  return node;
}

}  // namespace dynhaz::oracle
