#pragma once

// Binary classification forest with the Hellinger-distance split criterion.
// Leaves keep the event proportion of their training rows, so the forest
// average is a hazard probability estimate.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "dynhaz/person_period.hpp"
#include "dynhaz/rng.hpp"

namespace dynhaz {

inline constexpr int kForestFormatVersion = 1;

struct ForestConfig {
  int num_trees = 500;
  int mtry = 0;  // 0 selects max(1, floor(sqrt(p)))
  int min_node_size = 10;
  std::optional<int> max_depth;
  std::uint64_t seed = 1;
  bool bootstrap = true;
  int num_threads = 1;  // execution only; never changes the fitted forest

  int resolved_mtry(std::size_t p) const {
    if (mtry > 0) return mtry;
    return std::max(1, static_cast<int>(std::floor(std::sqrt(static_cast<double>(p)))));
  }

  bool operator==(const ForestConfig& o) const {
    return num_trees == o.num_trees && mtry == o.mtry && min_node_size == o.min_node_size &&
           max_depth == o.max_depth && seed == o.seed && bootstrap == o.bootstrap;
  }
};

class SchemaError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Hellinger distance between the class-conditional child allocations:
/// sqrt((sqrt(nL1/n1) - sqrt(nL0/n0))^2 + (sqrt(nR1/n1) - sqrt(nR0/n0))^2).
/// Undefined (throws std::domain_error) when either class is absent.
inline double hellinger_distance(double left1, double left0, double right1, double right0) {
  if (left1 < 0 || left0 < 0 || right1 < 0 || right0 < 0) {
    throw std::domain_error("hellinger_distance: negative count");
  }
  const double n1 = left1 + right1;
  const double n0 = left0 + right0;
  if (!(n1 > 0) || !(n0 > 0)) throw std::domain_error("hellinger_distance: a class is absent from the parent node");
  const double a = std::sqrt(left1 / n1) - std::sqrt(left0 / n0);
  const double b = std::sqrt(right1 / n1) - std::sqrt(right0 / n0);
  return std::sqrt(a * a + b * b);
}

/// Threshold between two consecutive distinct values. Falls back to the lower
/// value when the midpoint rounds up to the upper one.
inline double split_midpoint(double lower, double upper) {
  const double mid = (lower + upper) / 2;
  return mid < upper ? mid : lower;
}

/// Column-major feature matrix.
class FeatureMatrix {
 public:
  FeatureMatrix() = default;
  FeatureMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols) {}

  static FeatureMatrix from_table(const TrainingTable& table) {
    FeatureMatrix m(table.size(), table.num_features());
    for (std::size_t r = 0; r < table.size(); ++r) {
      const auto x = table.features(table.rows[r]);
      for (std::size_t c = 0; c < x.size(); ++c) m(r, c) = x[c];
    }
    return m;
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  double& operator()(std::size_t r, std::size_t c) { return data_[c * rows_ + r]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[c * rows_ + r]; }
  std::span<const double> column(std::size_t c) const { return {data_.data() + c * rows_, rows_}; }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0;
  int left = -1;
  int right = -1;
  double event_proportion = 0;
  int count = 0;

  bool is_leaf() const noexcept { return feature < 0; }
  bool operator==(const TreeNode&) const = default;
};

/// Flat binary tree; nodes[0] is the root. Rows with x[feature] <= threshold go left.
struct Tree {
  std::vector<TreeNode> nodes;

  const TreeNode& leaf_for(std::span<const double> x) const {
    std::size_t i = 0;
    while (!nodes[i].is_leaf()) {
      const auto& n = nodes[i];
      i = static_cast<std::size_t>(x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right);
    }
    return nodes[i];
  }

  int depth() const {
    std::vector<int> d(nodes.size(), 0);
    int best = 0;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      if (nodes[i].is_leaf()) continue;
      d[static_cast<std::size_t>(nodes[i].left)] = d[static_cast<std::size_t>(nodes[i].right)] = d[i] + 1;
      best = std::max(best, d[i] + 1);
    }
    return best;
  }

  bool operator==(const Tree&) const = default;
};

struct HazardForest {
  std::vector<std::string> schema;
  ForestConfig config;
  std::vector<Tree> trees;

  std::size_t num_features() const noexcept { return schema.size(); }
  bool operator==(const HazardForest&) const = default;
};

/// Mean of the reached leaves' event proportions.
inline double predict_hazard(const HazardForest& forest, std::span<const double> x) {
  if (x.size() != forest.num_features()) {
    throw SchemaError("feature vector has " + std::to_string(x.size()) + " entries, forest expects " +
                      std::to_string(forest.num_features()));
  }
  double sum = 0;
  for (const auto& tree : forest.trees) sum += tree.leaf_for(x).event_proportion;
  return sum / static_cast<double>(forest.trees.size());
}

namespace detail {

// Per-feature ranks into the sorted distinct values, shared by all trees.
struct RankedFeatures {
  std::vector<std::vector<double>> distinct;
  std::vector<std::vector<std::uint32_t>> rank;

  explicit RankedFeatures(const FeatureMatrix& x) : distinct(x.cols()), rank(x.cols()) {
    for (std::size_t c = 0; c < x.cols(); ++c) {
      const auto col = x.column(c);
      auto& d = distinct[c];
      d.assign(col.begin(), col.end());
      std::sort(d.begin(), d.end());
      d.erase(std::unique(d.begin(), d.end()), d.end());
      auto& r = rank[c];
      r.resize(col.size());
      for (std::size_t i = 0; i < col.size(); ++i) {
        r[i] = static_cast<std::uint32_t>(std::lower_bound(d.begin(), d.end(), col[i]) - d.begin());
      }
    }
  }
};

struct SplitChoice {
  int feature = -1;
  std::uint32_t last_left_rank = 0;
  double threshold = 0;
  double score = -1;
};

class TreeGrower {
 public:
  TreeGrower(const RankedFeatures& data, std::span<const std::uint8_t> y, const ForestConfig& cfg)
      : data_(data), y_(y), cfg_(cfg), num_features_(data.rank.size()) {
    mtry_ = num_features_ == 0 ? 0 : std::min<std::size_t>(static_cast<std::size_t>(cfg.resolved_mtry(num_features_)), num_features_);
    std::size_t max_distinct = 0;
    for (const auto& d : data.distinct) max_distinct = std::max(max_distinct, d.size());
    count1_.assign(max_distinct, 0);
    count0_.assign(max_distinct, 0);
    candidates_.resize(num_features_);
  }

  Tree grow(Engine& rng) {
    const std::size_t n = y_.size();
    samples_.resize(n);
    if (cfg_.bootstrap) {
      for (auto& s : samples_) s = static_cast<std::uint32_t>(uniform_index(rng, n));
    } else {
      std::iota(samples_.begin(), samples_.end(), 0U);
    }

    Tree tree;
    tree.nodes.emplace_back();
    struct Pending {
      int node;
      std::size_t begin, end;
      int depth;
    };
    std::vector<Pending> stack{{0, 0, n, 0}};
    while (!stack.empty()) {
      const Pending p = stack.back();
      stack.pop_back();
      const std::size_t size = p.end - p.begin;
      std::size_t events = 0;
      for (std::size_t i = p.begin; i < p.end; ++i) events += y_[samples_[i]];
      {
        auto& node = tree.nodes[static_cast<std::size_t>(p.node)];
        node.count = static_cast<int>(size);
        node.event_proportion = static_cast<double>(events) / static_cast<double>(size);
      }
      const bool pure = events == 0 || events == size;
      const bool too_small = size <= static_cast<std::size_t>(cfg_.min_node_size);
      const bool too_deep = cfg_.max_depth && p.depth >= *cfg_.max_depth;
      if (pure || too_small || too_deep || mtry_ == 0) continue;

      const SplitChoice best = find_split(p.begin, p.end, events, rng);
      if (best.feature < 0) continue;

      const auto& rank = data_.rank[static_cast<std::size_t>(best.feature)];
      const auto mid = std::partition(samples_.begin() + static_cast<std::ptrdiff_t>(p.begin),
                                      samples_.begin() + static_cast<std::ptrdiff_t>(p.end),
                                      [&](std::uint32_t s) { return rank[s] <= best.last_left_rank; });
      const auto split_at = static_cast<std::size_t>(mid - samples_.begin());

      const int left = static_cast<int>(tree.nodes.size());
      tree.nodes.emplace_back();
      tree.nodes.emplace_back();
      auto& node = tree.nodes[static_cast<std::size_t>(p.node)];
      node.feature = best.feature;
      node.threshold = best.threshold;
      node.left = left;
      node.right = left + 1;
      stack.push_back({left + 1, split_at, p.end, p.depth + 1});
      stack.push_back({left, p.begin, split_at, p.depth + 1});
    }
    return tree;
  }

 private:
  SplitChoice find_split(std::size_t begin, std::size_t end, std::size_t events, Engine& rng) {
    // Partial Fisher-Yates draw of mtry candidates, then ascending order so
    // that ties resolve to the lowest feature index.
    std::iota(candidates_.begin(), candidates_.end(), 0U);
    for (std::size_t i = 0; i < mtry_; ++i) {
      const auto j = i + uniform_index(rng, num_features_ - i);
      std::swap(candidates_[i], candidates_[j]);
    }
    std::sort(candidates_.begin(), candidates_.begin() + static_cast<std::ptrdiff_t>(mtry_));

    const double total1 = static_cast<double>(events);
    const double total0 = static_cast<double>(end - begin - events);
    SplitChoice best;
    for (std::size_t c = 0; c < mtry_; ++c) {
      const std::size_t f = candidates_[c];
      const auto& rank = data_.rank[f];
      const auto& distinct = data_.distinct[f];
      const std::size_t size = end - begin;

      // Visits each boundary between consecutive distinct values present in
      // the node, in ascending order, with the counts to its left.
      double left1 = 0, left0 = 0;
      std::uint32_t prev = 0;
      bool have_prev = false;
      auto visit = [&](std::uint32_t r, double c1, double c0) {
        if (have_prev) {
          const double score = hellinger_distance(left1, left0, total1 - left1, total0 - left0);
          if (score > best.score) {
            best.score = score;
            best.feature = static_cast<int>(f);
            best.last_left_rank = prev;
            best.threshold = split_midpoint(distinct[prev], distinct[r]);
          }
        }
        left1 += c1;
        left0 += c0;
        prev = r;
        have_prev = true;
      };

      if (distinct.size() <= 4 * size) {
        for (std::size_t i = begin; i < end; ++i) {
          const auto s = samples_[i];
          (y_[s] ? count1_ : count0_)[rank[s]] += 1;
        }
        for (std::uint32_t r = 0; r < distinct.size(); ++r) {
          if (count1_[r] == 0 && count0_[r] == 0) continue;
          visit(r, count1_[r], count0_[r]);
          count1_[r] = count0_[r] = 0;
        }
      } else {
        keys_.resize(size);
        for (std::size_t i = 0; i < size; ++i) {
          const auto s = samples_[begin + i];
          keys_[i] = (static_cast<std::uint64_t>(rank[s]) << 1) | y_[s];
        }
        std::sort(keys_.begin(), keys_.end());
        std::size_t i = 0;
        while (i < size) {
          const auto r = static_cast<std::uint32_t>(keys_[i] >> 1);
          double c1 = 0, c0 = 0;
          for (; i < size && (keys_[i] >> 1) == r; ++i) (keys_[i] & 1U ? c1 : c0) += 1;
          visit(r, c1, c0);
        }
      }
    }
    return best;
  }

  const RankedFeatures& data_;
  std::span<const std::uint8_t> y_;
  const ForestConfig& cfg_;
  std::size_t num_features_;
  std::size_t mtry_ = 0;
  std::vector<std::uint32_t> samples_;
  std::vector<std::uint32_t> candidates_;
  std::vector<std::uint32_t> count1_, count0_;
  std::vector<std::uint64_t> keys_;
};

inline void check_config(const ForestConfig& cfg, std::size_t p) {
  if (cfg.num_trees < 1) throw std::invalid_argument("num_trees must be >= 1");
  if (cfg.min_node_size < 1) throw std::invalid_argument("min_node_size must be >= 1");
  if (cfg.mtry < 0 || (p > 0 && static_cast<std::size_t>(cfg.mtry) > p)) {
    throw std::invalid_argument("mtry must lie in 1..p (or 0 for the default)");
  }
  if (cfg.max_depth && *cfg.max_depth < 0) throw std::invalid_argument("max_depth must be >= 0");
}

}  // namespace detail

/// Grows cfg.num_trees trees; tree b draws from the stream (cfg.seed, b), so
/// the result does not depend on cfg.num_threads.
inline HazardForest fit_forest(const FeatureMatrix& x, std::span<const std::uint8_t> y,
                               std::vector<std::string> schema, const ForestConfig& cfg) {
  if (x.rows() == 0) throw std::invalid_argument("fit: empty training table");
  if (y.size() != x.rows()) throw std::invalid_argument("fit: response length does not match rows");
  if (schema.size() != x.cols()) throw SchemaError("fit: schema length does not match feature columns");
  detail::check_config(cfg, x.cols());

  const detail::RankedFeatures ranked(x);
  HazardForest forest{std::move(schema), cfg, std::vector<Tree>(static_cast<std::size_t>(cfg.num_trees))};
  std::atomic<int> next{0};
  auto work = [&] {
    detail::TreeGrower grower(ranked, y, cfg);
    for (int b = next++; b < cfg.num_trees; b = next++) {
      Engine rng(derive_seed(cfg.seed, {b}));
      forest.trees[static_cast<std::size_t>(b)] = grower.grow(rng);
    }
  };
  const int threads = std::clamp(cfg.num_threads, 1, cfg.num_trees);
  if (threads == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (int i = 0; i < threads; ++i) pool.emplace_back(work);
  }
  return forest;
}

inline HazardForest fit_forest(const TrainingTable& table, const ForestConfig& cfg) {
  if (table.empty()) throw std::invalid_argument("fit: empty training table");
  const auto x = FeatureMatrix::from_table(table);
  std::vector<std::uint8_t> y(table.size());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = static_cast<std::uint8_t>(table.rows[i].y);
  return fit_forest(x, y, table.feature_names(), cfg);
}

// JSON: trees are written as nested nodes.

inline nlohmann::json config_to_json(const ForestConfig& c) {
  nlohmann::json j{{"num_trees", c.num_trees}, {"mtry", c.mtry},       {"min_node_size", c.min_node_size},
                   {"seed", c.seed},           {"bootstrap", c.bootstrap}};
  j["max_depth"] = c.max_depth ? nlohmann::json(*c.max_depth) : nlohmann::json(nullptr);
  return j;
}

inline ForestConfig config_from_json(const nlohmann::json& j) {
  ForestConfig c;
  c.num_trees = j.value("num_trees", c.num_trees);
  c.mtry = j.value("mtry", c.mtry);
  c.min_node_size = j.value("min_node_size", c.min_node_size);
  c.seed = j.value("seed", c.seed);
  c.bootstrap = j.value("bootstrap", c.bootstrap);
  c.num_threads = j.value("num_threads", c.num_threads);
  if (j.contains("max_depth") && !j.at("max_depth").is_null()) c.max_depth = j.at("max_depth").get<int>();
  return c;
}

namespace detail {

inline nlohmann::json node_to_json(const Tree& tree, std::size_t i) {
  const auto& n = tree.nodes[i];
  if (n.is_leaf()) return {{"event_proportion", n.event_proportion}, {"count", n.count}};
  return {{"feature", n.feature},
          {"threshold", n.threshold},
          {"event_proportion", n.event_proportion},
          {"count", n.count},
          {"left", node_to_json(tree, static_cast<std::size_t>(n.left))},
          {"right", node_to_json(tree, static_cast<std::size_t>(n.right))}};
}

// Rebuilds in the grower's order (node, then its two children, left subtree first).
inline void node_from_json(const nlohmann::json& j, Tree& tree, std::size_t i, std::size_t num_features) {
  tree.nodes[i].event_proportion = j.at("event_proportion").get<double>();
  tree.nodes[i].count = j.at("count").get<int>();
  if (!j.contains("feature")) return;
  const int f = j.at("feature").get<int>();
  if (f < 0 || static_cast<std::size_t>(f) >= num_features) throw SchemaError("tree node references unknown feature");
  const int left = static_cast<int>(tree.nodes.size());
  tree.nodes.resize(tree.nodes.size() + 2);
  auto& n = tree.nodes[i];
  n.feature = f;
  n.threshold = j.at("threshold").get<double>();
  n.left = left;
  n.right = left + 1;
  node_from_json(j.at("left"), tree, static_cast<std::size_t>(left), num_features);
  node_from_json(j.at("right"), tree, static_cast<std::size_t>(left + 1), num_features);
}

}  // namespace detail

inline nlohmann::json to_json(const HazardForest& f) {
  nlohmann::json trees = nlohmann::json::array();
  for (const auto& t : f.trees) trees.push_back(detail::node_to_json(t, 0));
  return {{"format_version", kForestFormatVersion},
          {"kind", "hellinger_forest"},
          {"schema", f.schema},
          {"config", config_to_json(f.config)},
          {"trees", std::move(trees)}};
}

inline HazardForest forest_from_json(const nlohmann::json& j) {
  if (j.value("kind", std::string()) != "hellinger_forest") throw std::runtime_error("not a hellinger_forest model");
  if (j.at("format_version").get<int>() != kForestFormatVersion) {
    throw std::runtime_error("unsupported forest format_version");
  }
  HazardForest f;
  f.schema = j.at("schema").get<std::vector<std::string>>();
  f.config = config_from_json(j.at("config"));
  for (const auto& jt : j.at("trees")) {
    Tree t;
    t.nodes.resize(1);
    detail::node_from_json(jt, t, 0, f.schema.size());
    f.trees.push_back(std::move(t));
  }
  if (f.trees.empty()) throw std::runtime_error("forest has no trees");
  return f;
}

}  // namespace dynhaz
