#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "i2pflow/cascade.hpp"

namespace i2pflow {

enum class ImbalanceMode { Weights, Undersample, None };
enum class ModelKind { Forest, GbtXgb, GbtLgbm };

const char* model_kind_name(ModelKind kind);

// Clean rules by feature name; resolved against the phase dataset's schema.
struct CleanRulesByName {
  bool critical_all = true;                       // all features are critical
  std::vector<std::string> critical;              // used when critical_all is false
  std::string duration_feature;                   // empty disables the rule
  std::vector<std::string> flag_features;         // empty disables the rule
  std::vector<std::string> packet_count_features;
};

struct PipelineOptions {
  int phase = 1;  // 2 rebuilds the dataset around behavior labels first
  CleanRulesByName clean;
  double correlation_threshold = 0.95;
  SplitSpec split;
  ImbalanceMode imbalance = ImbalanceMode::Weights;
  ModelKind model = ModelKind::Forest;
  ForestConfig forest;
  GbtConfig gbt_base;                  // preset; rounds/lr/tree shape
  bool auto_scale_pos_weight = true;   // n_neg/n_pos of the final training set
  double threshold = 0.5;
  std::uint64_t seed = 42;             // drives split and model seeds
};

struct TrainOutput {
  PhaseBundle bundle;
  Dataset train;  // raw cleaned rows after split (+ imbalance treatment)
  Dataset test;
  MetricsReport train_metrics;
  MetricsReport test_metrics;
  CurveSet test_curves;
  std::vector<double> importance;  // over retained features
  std::string log;                 // deterministic stage log (no timings)
};

CleanRules resolve_clean_rules(const CleanRulesByName& rules, const FeatureSchema& schema);

// ingest -> clean -> (phase 2 relabel) -> prune -> split -> imbalance ->
// scale -> fit -> evaluate. The returned bundle carries everything needed
// to score raw flows.
TrainOutput train_phase(const Dataset& raw, const PipelineOptions& opts);

struct EvalOutput {
  MetricsReport metrics;
  CurveSet curves;
  std::vector<int> y_true;
  std::vector<double> scores;
};

EvalOutput evaluate_bundle(const PhaseBundle& bundle, const Dataset& ds);

}  // namespace i2pflow
