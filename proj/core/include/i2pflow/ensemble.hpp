#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "i2pflow/tree.hpp"

namespace i2pflow {

enum class ClassWeightMode { Balanced, None };

// Paper-default forest: 100 trees, depth 20, min_samples_split 10,
// sqrt(F) features per split, bootstrap, balanced class weights.
struct ForestConfig {
  int n_trees = 100;
  TreeConfig tree{.max_depth = 20,
                  .min_samples_split = 10,
                  .growth = Growth::LevelWise,
                  .features_per_split = kFeaturesSqrt};
  ClassWeightMode class_weight_mode = ClassWeightMode::Balanced;
  bool bootstrap = true;
  std::uint64_t seed = 42;
};

struct GbtConfig {
  int n_rounds = 100;
  double learning_rate = 0.1;
  TreeConfig tree{.max_depth = 6, .growth = Growth::LevelWise};
  double lambda = 1.0;
  double scale_pos_weight = 1.0;
  std::uint64_t seed = 42;

  // Named presets. xgb_like: depth-6 level-wise, learning rate 0.1.
  // lgbm_like: 31-leaf leaf-wise, learning rate 0.05 (exact splits; no
  // histogram binning).
  static GbtConfig xgb_like();
  static GbtConfig lgbm_like();
};

struct ForestModel {
  std::vector<DecisionTreeModel> trees;
  ForestConfig config;
  std::uint32_t n_features = 0;
};

struct GbtModel {
  std::vector<DecisionTreeModel> trees;
  GbtConfig config;
  double base_score = 0.0;  // weighted log-odds initialization
  std::uint32_t n_features = 0;
  std::vector<double> training_loss;  // weighted logistic loss: initial + one entry per round
};

ForestModel fit_forest(const Matrix& X, const std::vector<int>& y, const ForestConfig& cfg);

// Soft vote: mean of per-tree leaf class-1 frequencies.
double predict_proba_forest(const ForestModel& model, std::span<const double> x);
// Hard vote: mode of per-tree 0/1 decisions at threshold 0.5 (ties go negative).
int predict_vote_forest(const ForestModel& model, std::span<const double> x);

GbtModel fit_gbt(const Matrix& X, const std::vector<int>& y, const GbtConfig& cfg);
double predict_proba_gbt(const GbtModel& model, std::span<const double> x);
// Raw additive score before the sigmoid link.
double predict_margin_gbt(const GbtModel& model, std::span<const double> x);

// Mean-decrease-impurity importances, normalized to sum 1 (all-zero when no
// model tree contains a split). Forest: (node weight fraction) x gain,
// averaged over trees. GBT: summed Newton gain.
std::vector<double> feature_importance(const ForestModel& model);
std::vector<double> feature_importance(const GbtModel& model);

double sigmoid(double x);

// True when per-tree training may use worker threads (NO_PARALLEL unset).
bool parallel_enabled();

// Either ensemble kind, as stored in a phase bundle.
using EnsembleModel = std::variant<ForestModel, GbtModel>;

double predict_proba(const EnsembleModel& model, std::span<const double> x);
std::uint32_t model_feature_count(const EnsembleModel& model);
std::vector<double> feature_importance(const EnsembleModel& model);

// Canonical text form of a trained model; byte-identical for identical
// (data, config, seed). Embedded verbatim in the cascade container.
std::string model_text(const ForestModel& model);
std::string model_text(const GbtModel& model);
std::string model_text(const EnsembleModel& model);
EnsembleModel parse_model_text(const std::string& text, const std::string& origin);

}  // namespace i2pflow
