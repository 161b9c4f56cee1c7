#include "i2pflow/pipeline.hpp"

#include <algorithm>
#include <cmath>

#include "i2pflow/errors.hpp"
#include "i2pflow/io_util.hpp"

namespace i2pflow {

const char* model_kind_name(ModelKind kind) {
  switch (kind) {
    case ModelKind::Forest: return "forest";
    case ModelKind::GbtXgb: return "gbt-xgb";
    case ModelKind::GbtLgbm: return "gbt-lgbm";
  }
  return "?";
}

CleanRules resolve_clean_rules(const CleanRulesByName& rules, const FeatureSchema& schema) {
  CleanRules out;
  const auto resolve = [&](const std::string& name, const char* rule) {
    const auto idx = schema.feature_index(name);
    if (!idx) {
      throw SchemaError(std::string(rule) + " rule references feature `" + name + "` absent from schema");
    }
    return *idx;
  };
  if (rules.critical_all) {
    out.critical_features.resize(schema.feature_count());
    for (std::size_t f = 0; f < schema.feature_count(); ++f) out.critical_features[f] = f;
  } else {
    for (const auto& name : rules.critical) out.critical_features.push_back(resolve(name, "missing-value"));
  }
  if (!rules.duration_feature.empty()) {
    out.duration_feature = resolve(rules.duration_feature, "negative-duration");
  }
  if (!rules.flag_features.empty()) {
    if (rules.packet_count_features.empty()) {
      throw SchemaError("flag-count rule enabled without packet-count features");
    }
    for (const auto& name : rules.flag_features) out.flag_features.push_back(resolve(name, "flag-count"));
    for (const auto& name : rules.packet_count_features) {
      out.packet_count_features.push_back(resolve(name, "packet-count"));
    }
  }
  return out;
}

namespace {

std::vector<double> score_matrix(const EnsembleModel& model, const Matrix& X) {
  std::vector<double> scores(X.rows);
  for (std::size_t i = 0; i < X.rows; ++i) {
    scores[i] = predict_proba(model, std::span<const double>(X.row(i), X.cols));
  }
  return scores;
}

}  // namespace

TrainOutput train_phase(const Dataset& raw, const PipelineOptions& opts) {
  if (opts.phase != 1 && opts.phase != 2) throw ConfigError("phase must be 1 or 2");

  TrainOutput out;
  std::string& log = out.log;
  log += "stage ingest: " + std::to_string(raw.size()) + " rows, " + std::to_string(raw.feature_count()) +
         " features\n";

  const CleanRules rules = resolve_clean_rules(opts.clean, raw.schema);
  auto [cleaned, report] = clean(raw, rules);
  log += "stage clean: retained " + std::to_string(report.retained) + " (dropped missing " +
         std::to_string(report.dropped_missing) + ", negative-duration " +
         std::to_string(report.dropped_negative_duration) + ", invalid-flags " +
         std::to_string(report.dropped_invalid_flags) + ")\n";

  Dataset phase_data = opts.phase == 2 ? build_phase2_dataset(cleaned) : std::move(cleaned);
  if (opts.phase == 2) {
    const auto counts = class_counts(phase_data);
    log += "stage phase2: " + std::to_string(phase_data.size()) + " rows (" + std::to_string(counts[1]) + " " +
           phase_data.class_names[1] + ", " + std::to_string(counts[0]) + " " + phase_data.class_names[0] + ")\n";
  }

  FeatureMask mask = prune_constant(phase_data);
  mask = prune_correlated(phase_data, mask, opts.correlation_threshold);
  log += "stage prune: retained " + std::to_string(mask.retained.size()) + " features (constant " +
         std::to_string(mask.removed_constant.size()) + ", correlated " +
         std::to_string(mask.removed_correlated.size()) + ")\n";

  SplitSpec split_spec = opts.split;
  split_spec.seed = opts.seed;
  auto [train, test] = stratified_split(phase_data, split_spec);
  {
    const auto tr = class_counts(train);
    const auto te = class_counts(test);
    log += "stage split: train " + std::to_string(train.size()) + " (" + std::to_string(tr[0]) + "/" +
           std::to_string(tr[1]) + "), test " + std::to_string(test.size()) + " (" + std::to_string(te[0]) + "/" +
           std::to_string(te[1]) + ")\n";
  }

  if (opts.imbalance == ImbalanceMode::Undersample) {
    train = undersample_majority(train, mix_seed(opts.seed, 0x756e6472));  // "undr"
    const auto tr = class_counts(train);
    log += "stage undersample: train " + std::to_string(train.size()) + " (" + std::to_string(tr[0]) + "/" +
           std::to_string(tr[1]) + ")\n";
  }

  const ScalerParams scaler = fit_scaler(train, mask);
  const Matrix X_train = apply_scaler(train, scaler, mask);
  const Matrix X_test = apply_scaler(test, scaler, mask);
  const std::vector<int> y_train = labels_of(train);
  const std::vector<int> y_test = labels_of(test);

  PhaseBundle bundle;
  bundle.threshold = opts.threshold;
  bundle.positive_class_name = phase_data.class_names[1];
  bundle.artifacts.feature_names = phase_data.schema.feature_names;
  bundle.artifacts.cleaning = report;
  bundle.artifacts.mask = mask;
  bundle.artifacts.scaler = scaler;
  bundle.artifacts.split = split_spec;
  bundle.artifacts.correlation_threshold = opts.correlation_threshold;

  const auto counts = class_counts(train);
  if (opts.model == ModelKind::Forest) {
    ForestConfig cfg = opts.forest;
    cfg.seed = opts.seed;
    if (opts.imbalance != ImbalanceMode::Weights) cfg.class_weight_mode = ClassWeightMode::None;
    bundle.model = fit_forest(X_train, y_train, cfg);
    log += "stage fit: forest, " + std::to_string(cfg.n_trees) + " trees\n";
  } else {
    GbtConfig cfg = opts.model == ModelKind::GbtXgb ? GbtConfig::xgb_like() : GbtConfig::lgbm_like();
    cfg.n_rounds = opts.gbt_base.n_rounds;
    cfg.lambda = opts.gbt_base.lambda;
    cfg.seed = opts.seed;
    cfg.scale_pos_weight = opts.gbt_base.scale_pos_weight;
    if (opts.auto_scale_pos_weight) {
      cfg.scale_pos_weight =
          opts.imbalance == ImbalanceMode::Weights ? scale_pos_weight_from_counts(counts[0], counts[1]) : 1.0;
    }
    bundle.model = fit_gbt(X_train, y_train, cfg);
    log += "stage fit: " + std::string(model_kind_name(opts.model)) + ", " + std::to_string(cfg.n_rounds) +
           " rounds, scale_pos_weight " + format_double(cfg.scale_pos_weight) + "\n";
  }

  const std::vector<double> train_scores = score_matrix(bundle.model, X_train);
  const std::vector<double> test_scores = score_matrix(bundle.model, X_test);
  out.train_metrics = evaluate_scores(y_train, train_scores, opts.threshold);
  out.test_metrics = evaluate_scores(y_test, test_scores, opts.threshold);
  out.test_curves.roc_points = roc_auc(y_test, test_scores).second;
  out.test_curves.pr_points = pr_curve(y_test, test_scores);
  out.importance = feature_importance(bundle.model);

  char line[160];
  std::snprintf(line, sizeof(line), "train accuracy %.6f auc %.6f | test accuracy %.6f auc %.6f\n",
                out.train_metrics.accuracy, out.train_metrics.roc_auc, out.test_metrics.accuracy,
                out.test_metrics.roc_auc);
  log += line;

  out.bundle = std::move(bundle);
  out.train = std::move(train);
  out.test = std::move(test);
  return out;
}

EvalOutput evaluate_bundle(const PhaseBundle& bundle, const Dataset& ds) {
  if (ds.rows.empty()) throw SchemaError("evaluate: empty dataset");
  EvalOutput out;
  out.y_true = labels_of(ds);
  out.scores.reserve(ds.rows.size());
  for (std::size_t i = 0; i < ds.rows.size(); ++i) {
    try {
      out.scores.push_back(bundle.score(ds.rows[i].record));
    } catch (const SchemaError& e) {
      throw SchemaError("row " + std::to_string(i) + ": " + e.what());
    }
  }
  out.metrics = evaluate_scores(out.y_true, out.scores, bundle.threshold);
  out.curves.roc_points = roc_auc(out.y_true, out.scores).second;
  out.curves.pr_points = pr_curve(out.y_true, out.scores);
  return out;
}

}  // namespace i2pflow
