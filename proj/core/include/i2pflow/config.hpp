#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "i2pflow/pipeline.hpp"

namespace i2pflow {

// Everything that affects results lives in the config file; command-line
// flags only pick commands, paths, and the seed override. Unknown keys are
// rejected so that a typo cannot silently fall back to a default.
struct RunConfig {
  // paths
  std::string flows_path;
  std::string columns_path;
  std::string partner_bundle;  // optional: assemble a full cascade after train
  std::string bundle_path;     // evaluate input
  std::string eval_flows;      // evaluate input
  std::string cascade_path;    // score input
  std::string score_flows;     // score input

  // synth
  std::string synth_spec_path;  // empty = built-in default spec
  std::size_t synth_n = 20000;
  double synth_separation = 4.0;

  // preprocessing
  double test_fraction = 0.2;
  double correlation_threshold = 0.95;
  bool critical_all = true;
  std::vector<std::string> critical_features;
  std::string duration_feature;
  std::vector<std::string> flag_features;
  std::vector<std::string> packet_count_features;
  ImbalanceMode imbalance = ImbalanceMode::Weights;

  // models
  int forest_trees = 100;
  int forest_max_depth = 20;
  int forest_min_samples_split = 10;
  int forest_features_per_split = kFeaturesSqrt;
  bool forest_bootstrap = true;
  int gbt_rounds = 100;
  double gbt_lambda = 1.0;
  bool gbt_auto_scale_pos_weight = true;
  double gbt_scale_pos_weight = 1.0;

  // cascade + report
  double threshold_phase1 = 0.5;
  double threshold_phase2 = 0.5;
  double report_daily_flows = 1'000'000.0;
  double report_i2p_fraction = 0.012;

  std::uint64_t seed = 42;
};

RunConfig parse_run_config(const std::string& path);
RunConfig parse_run_config_text(const std::string& text, const std::string& origin);

// Fully-resolved echo, key-sorted; byte-stable for identical configs.
std::string resolved_config_text(const RunConfig& cfg);

PipelineOptions pipeline_options(const RunConfig& cfg, int phase, ModelKind model);

std::optional<ModelKind> model_kind_from_name(const std::string& name);

}  // namespace i2pflow
