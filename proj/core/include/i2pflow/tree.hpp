#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "i2pflow/preprocess.hpp"
#include "i2pflow/rng.hpp"

namespace i2pflow {

// Flat tree node. feature < 0 marks a leaf. Internal nodes route
// x[feature] <= threshold to the left child.
struct TreeNode {
  std::int32_t feature = -1;
  double threshold = 0.0;
  std::int32_t left = -1;
  std::int32_t right = -1;
  double value = 0.0;  // leaf: class-1 frequency (classification) or additive score (regression)
  double gain = 0.0;   // internal: recorded split gain
  std::int64_t n_samples = 0;
  double sum_weight = 0.0;

  bool is_leaf() const { return feature < 0; }
  bool operator==(const TreeNode&) const = default;
};

enum class Growth { LevelWise, LeafWise };

inline constexpr int kUnbounded = -1;     // max_depth / max_leaves sentinel
inline constexpr int kFeaturesAll = 0;    // features_per_split sentinel
inline constexpr int kFeaturesSqrt = -1;  // features_per_split sentinel: floor(sqrt(F))

struct TreeConfig {
  int max_depth = kUnbounded;
  int min_samples_split = 2;
  int max_leaves = kUnbounded;
  Growth growth = Growth::LevelWise;
  int features_per_split = kFeaturesAll;
  double min_gain = 0.0;
  // Accept exact-zero-gain splits of impure nodes (sklearn-style stopping,
  // where only depth and min_samples_split terminate growth). Off by
  // default: the strict rule admits positive-gain splits only.
  bool allow_zero_gain_splits = false;
};

struct SplitStats {
  double weight = 0.0;  // sum of sample weights (classification) or hessians-as-weights
  double grad = 0.0;    // weighted positive mass (classification) or gradient sum
  double hess = 0.0;    // hessian sum (regression only)
  bool operator==(const SplitStats&) const = default;
};

struct SplitCandidate {
  int feature = -1;
  double threshold = 0.0;
  double gain = 0.0;
  SplitStats left;
  SplitStats right;
};

// Split objectives. WeightedGini is used by classification trees, the
// second-order NewtonGain by boosted regression trees.
struct WeightedGini {
  const std::vector<int>* y = nullptr;
  const std::vector<double>* w = nullptr;
};

struct NewtonGainObjective {
  const std::vector<double>* grad = nullptr;
  const std::vector<double>* hess = nullptr;
  double lambda = 0.0;
};

// Exact scan over every boundary between adjacent distinct values of each
// feature in `features`. Ties break toward the lowest feature index, then
// the lowest threshold. Returns nothing when no boundary clears min_gain.
std::optional<SplitCandidate> best_split(const Matrix& X, std::span<const int> rows,
                                         std::span<const int> features, const WeightedGini& obj,
                                         double min_gain = 0.0, bool allow_zero_gain = false);
std::optional<SplitCandidate> best_split(const Matrix& X, std::span<const int> rows,
                                         std::span<const int> features, const NewtonGainObjective& obj,
                                         double min_gain = 0.0, bool allow_zero_gain = false);

struct DecisionTreeModel {
  std::vector<TreeNode> nodes;
  std::uint32_t n_features = 0;

  bool operator==(const DecisionTreeModel&) const = default;
};

// Level-wise weighted-Gini classification tree. A fresh feature subset of
// size cfg.features_per_split is drawn from `rng` at every node.
DecisionTreeModel fit_classification_tree(const Matrix& X, const std::vector<int>& y,
                                          const std::vector<double>& w, const TreeConfig& cfg, Rng& rng);
DecisionTreeModel fit_classification_tree(const Matrix& X, const std::vector<int>& y,
                                          const std::vector<double>& w, const TreeConfig& cfg, Rng& rng,
                                          std::vector<int> rows);

// Second-order regression tree on (gradient, hessian) pairs; leaf value is
// -G/(H+lambda). Growth policy comes from cfg.growth: depth-limited
// level-wise or best-first leaf-wise under a leaf budget.
DecisionTreeModel fit_regression_tree(const Matrix& X, const std::vector<double>& grad,
                                      const std::vector<double>& hess, const TreeConfig& cfg, double lambda);

double predict_tree(const DecisionTreeModel& tree, std::span<const double> x);

}  // namespace i2pflow
