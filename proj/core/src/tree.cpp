#include "i2pflow/tree.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

#include "i2pflow/errors.hpp"

namespace i2pflow {

namespace {

struct GiniPolicy {
  const std::vector<int>& y;
  const std::vector<double>& w;

  void add(int i, SplitStats& s) const {
    s.weight += w[static_cast<std::size_t>(i)];
    s.grad += w[static_cast<std::size_t>(i)] * static_cast<double>(y[static_cast<std::size_t>(i)]);
  }
  static double impurity(const SplitStats& s) {
    if (s.weight <= 0.0) return 0.0;
    const double p = s.grad / s.weight;
    return 2.0 * p * (1.0 - p);
  }
  static double gain(const SplitStats& total, const SplitStats& left, const SplitStats& right) {
    return impurity(total) - (left.weight * impurity(left) + right.weight * impurity(right)) / total.weight;
  }
};

struct NewtonPolicy {
  const std::vector<double>& grad;
  const std::vector<double>& hess;
  double lambda;

  void add(int i, SplitStats& s) const {
    s.weight += hess[static_cast<std::size_t>(i)];
    s.grad += grad[static_cast<std::size_t>(i)];
    s.hess += hess[static_cast<std::size_t>(i)];
  }
  double score(const SplitStats& s) const { return s.grad * s.grad / (s.hess + lambda); }
  double gain(const SplitStats& total, const SplitStats& left, const SplitStats& right) const {
    return 0.5 * (score(left) + score(right) - score(total));
  }
};

template <typename Policy>
std::optional<SplitCandidate> scan_splits(const Matrix& X, std::span<const int> rows,
                                          std::span<const int> features, const Policy& pol, double min_gain,
                                          bool allow_zero_gain) {
  if (rows.size() < 2 || features.empty()) return std::nullopt;

  SplitStats total;
  for (const int i : rows) pol.add(i, total);

  // Features must be visited in ascending index order and boundaries in
  // ascending threshold order so that "first strictly better wins"
  // implements the documented tie-break.
  std::vector<int> ordered(features.begin(), features.end());
  std::sort(ordered.begin(), ordered.end());

  std::optional<SplitCandidate> best;
  std::vector<std::pair<double, int>> vals;
  vals.reserve(rows.size());
  for (const int f : ordered) {
    vals.clear();
    for (const int i : rows) vals.emplace_back(X.at(static_cast<std::size_t>(i), static_cast<std::size_t>(f)), i);
    std::sort(vals.begin(), vals.end());  // (value, row) total order keeps sums reproducible

    SplitStats left;
    for (std::size_t k = 0; k + 1 < vals.size(); ++k) {
      pol.add(vals[k].second, left);
      const double a = vals[k].first;
      const double b = vals[k + 1].first;
      if (!(a < b)) continue;
      SplitStats right;
      right.weight = total.weight - left.weight;
      right.grad = total.grad - left.grad;
      right.hess = total.hess - left.hess;
      const double gain = pol.gain(total, left, right);
      const bool accepted = gain > min_gain || (allow_zero_gain && gain >= min_gain);
      if (!accepted) continue;
      if (!best || gain > best->gain) {
        double thr = 0.5 * (a + b);
        if (!(thr < b)) thr = a;  // adjacent representables: keep the boundary separating
        best = SplitCandidate{f, thr, gain, left, right};
      }
    }
  }
  return best;
}

std::vector<int> resolve_feature_subset(int features_per_split, std::size_t feature_count, Rng& rng) {
  const int F = static_cast<int>(feature_count);
  int k = features_per_split;
  if (k == kFeaturesSqrt) k = std::max(1, static_cast<int>(std::floor(std::sqrt(static_cast<double>(F)))));
  if (k == kFeaturesAll || k >= F) {
    std::vector<int> all(feature_count);
    for (int i = 0; i < F; ++i) all[static_cast<std::size_t>(i)] = i;
    return all;
  }
  auto subset = rng.sample_without_replacement(F, k);
  std::sort(subset.begin(), subset.end());
  return subset;
}

void validate_config(const TreeConfig& cfg) {
  if (cfg.growth == Growth::LevelWise && cfg.max_depth == kUnbounded) {
    throw ConfigError("level-wise growth requires a finite max_depth");
  }
  if (cfg.growth == Growth::LeafWise && cfg.max_leaves == kUnbounded) {
    throw ConfigError("leaf-wise growth requires a finite max_leaves");
  }
  if (cfg.min_samples_split < 2) throw ConfigError("min_samples_split must be >= 2");
  if (cfg.min_gain < 0.0) throw ConfigError("min_gain must be >= 0");
}

struct ClassificationBuilder {
  const Matrix& X;
  const std::vector<int>& y;
  const std::vector<double>& w;
  const TreeConfig& cfg;
  Rng& rng;
  std::vector<TreeNode> nodes;

  int build(std::vector<int>& rows, int depth) {
    const int id = static_cast<int>(nodes.size());
    nodes.emplace_back();

    SplitStats stats;
    const GiniPolicy pol{y, w};
    for (const int i : rows) pol.add(i, stats);
    nodes[static_cast<std::size_t>(id)].n_samples = static_cast<std::int64_t>(rows.size());
    nodes[static_cast<std::size_t>(id)].sum_weight = stats.weight;
    nodes[static_cast<std::size_t>(id)].value = stats.grad / stats.weight;

    const bool depth_ok = depth < cfg.max_depth;
    const bool size_ok = rows.size() >= static_cast<std::size_t>(cfg.min_samples_split);
    const bool impure = stats.grad > 0.0 && stats.grad < stats.weight;
    if (depth_ok && size_ok && impure) {
      const auto features = resolve_feature_subset(cfg.features_per_split, X.cols, rng);
      const auto cand = scan_splits(X, rows, features, pol, cfg.min_gain, cfg.allow_zero_gain_splits);
      if (cand) {
        std::vector<int> left_rows;
        std::vector<int> right_rows;
        left_rows.reserve(rows.size());
        for (const int i : rows) {
          const double v = X.at(static_cast<std::size_t>(i), static_cast<std::size_t>(cand->feature));
          (v <= cand->threshold ? left_rows : right_rows).push_back(i);
        }
        rows.clear();
        rows.shrink_to_fit();
        const int l = build(left_rows, depth + 1);
        const int r = build(right_rows, depth + 1);
        TreeNode& node = nodes[static_cast<std::size_t>(id)];
        node.feature = cand->feature;
        node.threshold = cand->threshold;
        node.gain = cand->gain;
        node.left = l;
        node.right = r;
      }
    }
    return id;
  }
};

struct RegressionBuilder {
  const Matrix& X;
  const NewtonPolicy pol;
  const TreeConfig& cfg;
  std::vector<TreeNode> nodes;

  void fill_leaf_stats(int id, const std::vector<int>& rows) {
    SplitStats stats;
    for (const int i : rows) pol.add(i, stats);
    TreeNode& node = nodes[static_cast<std::size_t>(id)];
    node.n_samples = static_cast<std::int64_t>(rows.size());
    node.sum_weight = stats.hess;
    node.value = -stats.grad / (stats.hess + pol.lambda);
  }

  std::optional<SplitCandidate> candidate(const std::vector<int>& rows, int depth) const {
    const bool depth_ok = cfg.max_depth == kUnbounded || depth < cfg.max_depth;
    if (!depth_ok || rows.size() < static_cast<std::size_t>(cfg.min_samples_split)) return std::nullopt;
    std::vector<int> all(X.cols);
    for (std::size_t i = 0; i < X.cols; ++i) all[i] = static_cast<int>(i);
    return scan_splits(X, rows, all, pol, cfg.min_gain, cfg.allow_zero_gain_splits);
  }

  void split_node(int id, const SplitCandidate& cand, const std::vector<int>& rows, std::vector<int>& left_rows,
                  std::vector<int>& right_rows) {
    for (const int i : rows) {
      const double v = X.at(static_cast<std::size_t>(i), static_cast<std::size_t>(cand.feature));
      (v <= cand.threshold ? left_rows : right_rows).push_back(i);
    }
    const int l = static_cast<int>(nodes.size());
    nodes.emplace_back();
    fill_leaf_stats(l, left_rows);
    const int r = static_cast<int>(nodes.size());
    nodes.emplace_back();
    fill_leaf_stats(r, right_rows);
    TreeNode& node = nodes[static_cast<std::size_t>(id)];
    node.feature = cand.feature;
    node.threshold = cand.threshold;
    node.gain = cand.gain;
    node.left = l;
    node.right = r;
  }

  int build_level_wise(std::vector<int>& rows, int depth) {
    const int id = static_cast<int>(nodes.size());
    nodes.emplace_back();
    fill_leaf_stats(id, rows);
    if (const auto cand = candidate(rows, depth)) {
      std::vector<int> left_rows;
      std::vector<int> right_rows;
      // split_node appends children eagerly; rebuild recursively instead so
      // the node layout matches the level-wise depth-first convention.
      for (const int i : rows) {
        const double v = X.at(static_cast<std::size_t>(i), static_cast<std::size_t>(cand->feature));
        (v <= cand->threshold ? left_rows : right_rows).push_back(i);
      }
      rows.clear();
      rows.shrink_to_fit();
      const int l = build_level_wise(left_rows, depth + 1);
      const int r = build_level_wise(right_rows, depth + 1);
      TreeNode& node = nodes[static_cast<std::size_t>(id)];
      node.feature = cand->feature;
      node.threshold = cand->threshold;
      node.gain = cand->gain;
      node.left = l;
      node.right = r;
    }
    return id;
  }

  void build_leaf_wise(std::vector<int> rows) {
    struct Task {
      double gain;
      int seq;
      int node_id;
      int depth;
      SplitCandidate cand;
      std::vector<int> rows;
    };
    const auto better = [](const Task& a, const Task& b) {
      if (a.gain != b.gain) return a.gain < b.gain;  // max-heap on gain
      return a.seq > b.seq;                          // then earliest created
    };
    std::priority_queue<Task, std::vector<Task>, decltype(better)> heap(better);

    nodes.emplace_back();
    fill_leaf_stats(0, rows);
    int seq = 0;
    if (const auto cand = candidate(rows, 0)) {
      heap.push(Task{cand->gain, seq++, 0, 0, *cand, std::move(rows)});
    }
    int n_leaves = 1;
    while (n_leaves < cfg.max_leaves && !heap.empty()) {
      Task task = std::move(const_cast<Task&>(heap.top()));
      heap.pop();
      std::vector<int> left_rows;
      std::vector<int> right_rows;
      split_node(task.node_id, task.cand, task.rows, left_rows, right_rows);
      ++n_leaves;
      const int l = nodes[static_cast<std::size_t>(task.node_id)].left;
      const int r = nodes[static_cast<std::size_t>(task.node_id)].right;
      if (const auto cand = candidate(left_rows, task.depth + 1)) {
        heap.push(Task{cand->gain, seq++, l, task.depth + 1, *cand, std::move(left_rows)});
      }
      if (const auto cand = candidate(right_rows, task.depth + 1)) {
        heap.push(Task{cand->gain, seq++, r, task.depth + 1, *cand, std::move(right_rows)});
      }
    }
  }
};

}  // namespace

std::optional<SplitCandidate> best_split(const Matrix& X, std::span<const int> rows,
                                         std::span<const int> features, const WeightedGini& obj, double min_gain,
                                         bool allow_zero_gain) {
  return scan_splits(X, rows, features, GiniPolicy{*obj.y, *obj.w}, min_gain, allow_zero_gain);
}

std::optional<SplitCandidate> best_split(const Matrix& X, std::span<const int> rows,
                                         std::span<const int> features, const NewtonGainObjective& obj,
                                         double min_gain, bool allow_zero_gain) {
  return scan_splits(X, rows, features, NewtonPolicy{*obj.grad, *obj.hess, obj.lambda}, min_gain, allow_zero_gain);
}

DecisionTreeModel fit_classification_tree(const Matrix& X, const std::vector<int>& y,
                                          const std::vector<double>& w, const TreeConfig& cfg, Rng& rng,
                                          std::vector<int> rows) {
  validate_config(cfg);
  if (cfg.growth != Growth::LevelWise) throw ConfigError("classification trees grow level-wise");
  if (rows.empty()) throw TrainError("fit_classification_tree on zero rows");
  if (y.size() != X.rows || w.size() != X.rows) throw SchemaError("labels/weights misaligned with matrix rows");

  ClassificationBuilder builder{X, y, w, cfg, rng, {}};
  builder.build(rows, 0);
  return DecisionTreeModel{std::move(builder.nodes), static_cast<std::uint32_t>(X.cols)};
}

DecisionTreeModel fit_classification_tree(const Matrix& X, const std::vector<int>& y,
                                          const std::vector<double>& w, const TreeConfig& cfg, Rng& rng) {
  std::vector<int> rows(X.rows);
  for (std::size_t i = 0; i < X.rows; ++i) rows[i] = static_cast<int>(i);
  return fit_classification_tree(X, y, w, cfg, rng, std::move(rows));
}

DecisionTreeModel fit_regression_tree(const Matrix& X, const std::vector<double>& grad,
                                      const std::vector<double>& hess, const TreeConfig& cfg, double lambda) {
  validate_config(cfg);
  if (X.rows == 0) throw TrainError("fit_regression_tree on zero rows");
  if (grad.size() != X.rows || hess.size() != X.rows) throw SchemaError("grad/hess misaligned with matrix rows");

  std::vector<int> rows(X.rows);
  for (std::size_t i = 0; i < X.rows; ++i) rows[i] = static_cast<int>(i);

  RegressionBuilder builder{X, NewtonPolicy{grad, hess, lambda}, cfg, {}};
  if (cfg.growth == Growth::LevelWise) {
    builder.build_level_wise(rows, 0);
  } else {
    builder.build_leaf_wise(std::move(rows));
  }
  return DecisionTreeModel{std::move(builder.nodes), static_cast<std::uint32_t>(X.cols)};
}

double predict_tree(const DecisionTreeModel& tree, std::span<const double> x) {
  if (x.size() != tree.n_features) {
    throw SchemaError("predict_tree: vector has " + std::to_string(x.size()) + " features, tree expects " +
                      std::to_string(tree.n_features));
  }
  std::size_t id = 0;
  while (!tree.nodes[id].is_leaf()) {
    const TreeNode& node = tree.nodes[id];
    id = static_cast<std::size_t>(x[static_cast<std::size_t>(node.feature)] <= node.threshold ? node.left
                                                                                              : node.right);
  }
  return tree.nodes[id].value;
}

}  // namespace i2pflow
