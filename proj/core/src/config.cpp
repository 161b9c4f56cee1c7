#include "i2pflow/config.hpp"

#include <algorithm>
#include <set>

#include "i2pflow/errors.hpp"
#include "i2pflow/io_util.hpp"

namespace i2pflow {

namespace {

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
      "paths.flows",
      "paths.columns",
      "paths.partner_bundle",
      "paths.bundle",
      "paths.eval_flows",
      "paths.cascade",
      "paths.score_flows",
      "synth.spec",
      "synth.n",
      "synth.separation",
      "split.test_fraction",
      "preprocess.correlation_threshold",
      "preprocess.critical_features",
      "preprocess.duration_feature",
      "preprocess.flag_features",
      "preprocess.packet_count_features",
      "imbalance.mode",
      "forest.n_trees",
      "forest.max_depth",
      "forest.min_samples_split",
      "forest.features_per_split",
      "forest.bootstrap",
      "gbt.rounds",
      "gbt.lambda",
      "gbt.scale_pos_weight",
      "cascade.threshold1",
      "cascade.threshold2",
      "report.daily_flows",
      "report.i2p_fraction",
      "seed",
  };
  return keys;
}

std::vector<std::string> name_list(const std::string& value) {
  std::vector<std::string> out;
  for (const auto& part : split(value, ',')) {
    const std::string name = trim(part);
    if (!name.empty()) out.push_back(name);
  }
  return out;
}

double require_double(const KvFile& kv, const std::string& key, double def, const std::string& origin) {
  if (!kv.has(key)) return def;
  const auto v = parse_double(kv.get(key));
  if (!v) throw ConfigError(origin + ": `" + key + "` must be a decimal");
  return *v;
}

long long require_int(const KvFile& kv, const std::string& key, long long def, const std::string& origin) {
  if (!kv.has(key)) return def;
  const auto v = parse_int(kv.get(key));
  if (!v) throw ConfigError(origin + ": `" + key + "` must be an integer");
  return *v;
}

bool require_bool(const KvFile& kv, const std::string& key, bool def, const std::string& origin) {
  if (!kv.has(key)) return def;
  const std::string v = kv.get(key);
  if (v == "true") return true;
  if (v == "false") return false;
  throw ConfigError(origin + ": `" + key + "` must be true or false");
}

}  // namespace

RunConfig parse_run_config_text(const std::string& text, const std::string& origin) {
  const KvFile kv = KvFile::parse_text(text, origin);
  for (const auto& [key, value] : kv.entries()) {
    if (!known_keys().count(key)) throw ConfigError(origin + ": unknown config key `" + key + "`");
  }

  RunConfig cfg;
  cfg.flows_path = kv.get_or("paths.flows", "");
  cfg.columns_path = kv.get_or("paths.columns", "");
  cfg.partner_bundle = kv.get_or("paths.partner_bundle", "");
  cfg.bundle_path = kv.get_or("paths.bundle", "");
  cfg.eval_flows = kv.get_or("paths.eval_flows", "");
  cfg.cascade_path = kv.get_or("paths.cascade", "");
  cfg.score_flows = kv.get_or("paths.score_flows", "");

  cfg.synth_spec_path = kv.get_or("synth.spec", "");
  const auto n = require_int(kv, "synth.n", static_cast<long long>(cfg.synth_n), origin);
  if (n < 1) throw ConfigError(origin + ": synth.n must be >= 1");
  cfg.synth_n = static_cast<std::size_t>(n);
  cfg.synth_separation = require_double(kv, "synth.separation", cfg.synth_separation, origin);

  cfg.test_fraction = require_double(kv, "split.test_fraction", cfg.test_fraction, origin);
  if (!(cfg.test_fraction > 0.0 && cfg.test_fraction < 1.0)) {
    throw ConfigError(origin + ": split.test_fraction must lie in (0,1)");
  }
  cfg.correlation_threshold =
      require_double(kv, "preprocess.correlation_threshold", cfg.correlation_threshold, origin);

  const std::string critical = kv.get_or("preprocess.critical_features", "all");
  if (critical == "all") {
    cfg.critical_all = true;
  } else {
    cfg.critical_all = false;
    cfg.critical_features = name_list(critical);
  }
  cfg.duration_feature = kv.get_or("preprocess.duration_feature", "");
  cfg.flag_features = name_list(kv.get_or("preprocess.flag_features", ""));
  cfg.packet_count_features = name_list(kv.get_or("preprocess.packet_count_features", ""));

  const std::string mode = kv.get_or("imbalance.mode", "weights");
  if (mode == "weights") cfg.imbalance = ImbalanceMode::Weights;
  else if (mode == "undersample") cfg.imbalance = ImbalanceMode::Undersample;
  else if (mode == "none") cfg.imbalance = ImbalanceMode::None;
  else throw ConfigError(origin + ": imbalance.mode must be weights, undersample, or none");

  cfg.forest_trees = static_cast<int>(require_int(kv, "forest.n_trees", cfg.forest_trees, origin));
  cfg.forest_max_depth = static_cast<int>(require_int(kv, "forest.max_depth", cfg.forest_max_depth, origin));
  cfg.forest_min_samples_split =
      static_cast<int>(require_int(kv, "forest.min_samples_split", cfg.forest_min_samples_split, origin));
  const std::string fps = kv.get_or("forest.features_per_split", "sqrt");
  if (fps == "sqrt") {
    cfg.forest_features_per_split = kFeaturesSqrt;
  } else if (fps == "all") {
    cfg.forest_features_per_split = kFeaturesAll;
  } else {
    const auto v = parse_int(fps);
    if (!v || *v < 1) throw ConfigError(origin + ": forest.features_per_split must be sqrt, all, or a positive int");
    cfg.forest_features_per_split = static_cast<int>(*v);
  }
  cfg.forest_bootstrap = require_bool(kv, "forest.bootstrap", cfg.forest_bootstrap, origin);

  cfg.gbt_rounds = static_cast<int>(require_int(kv, "gbt.rounds", cfg.gbt_rounds, origin));
  cfg.gbt_lambda = require_double(kv, "gbt.lambda", cfg.gbt_lambda, origin);
  const std::string spw = kv.get_or("gbt.scale_pos_weight", "auto");
  if (spw == "auto") {
    cfg.gbt_auto_scale_pos_weight = true;
  } else {
    cfg.gbt_auto_scale_pos_weight = false;
    const auto v = parse_double(spw);
    if (!v || *v <= 0.0) throw ConfigError(origin + ": gbt.scale_pos_weight must be auto or a positive decimal");
    cfg.gbt_scale_pos_weight = *v;
  }

  cfg.threshold_phase1 = require_double(kv, "cascade.threshold1", cfg.threshold_phase1, origin);
  cfg.threshold_phase2 = require_double(kv, "cascade.threshold2", cfg.threshold_phase2, origin);
  cfg.report_daily_flows = require_double(kv, "report.daily_flows", cfg.report_daily_flows, origin);
  cfg.report_i2p_fraction = require_double(kv, "report.i2p_fraction", cfg.report_i2p_fraction, origin);

  const auto seed = require_int(kv, "seed", static_cast<long long>(cfg.seed), origin);
  cfg.seed = static_cast<std::uint64_t>(seed);
  return cfg;
}

RunConfig parse_run_config(const std::string& path) {
  return parse_run_config_text(read_file(path), path);
}

std::string resolved_config_text(const RunConfig& cfg) {
  std::vector<std::pair<std::string, std::string>> kv;
  kv.emplace_back("paths.flows", cfg.flows_path);
  kv.emplace_back("paths.columns", cfg.columns_path);
  kv.emplace_back("paths.partner_bundle", cfg.partner_bundle);
  kv.emplace_back("paths.bundle", cfg.bundle_path);
  kv.emplace_back("paths.eval_flows", cfg.eval_flows);
  kv.emplace_back("paths.cascade", cfg.cascade_path);
  kv.emplace_back("paths.score_flows", cfg.score_flows);
  kv.emplace_back("synth.spec", cfg.synth_spec_path);
  kv.emplace_back("synth.n", std::to_string(cfg.synth_n));
  kv.emplace_back("synth.separation", format_double(cfg.synth_separation));
  kv.emplace_back("split.test_fraction", format_double(cfg.test_fraction));
  kv.emplace_back("preprocess.correlation_threshold", format_double(cfg.correlation_threshold));
  kv.emplace_back("preprocess.critical_features",
                  cfg.critical_all ? std::string("all") : join(cfg.critical_features, ','));
  kv.emplace_back("preprocess.duration_feature", cfg.duration_feature);
  kv.emplace_back("preprocess.flag_features", join(cfg.flag_features, ','));
  kv.emplace_back("preprocess.packet_count_features", join(cfg.packet_count_features, ','));
  kv.emplace_back("imbalance.mode", cfg.imbalance == ImbalanceMode::Weights       ? "weights"
                                    : cfg.imbalance == ImbalanceMode::Undersample ? "undersample"
                                                                                  : "none");
  kv.emplace_back("forest.n_trees", std::to_string(cfg.forest_trees));
  kv.emplace_back("forest.max_depth", std::to_string(cfg.forest_max_depth));
  kv.emplace_back("forest.min_samples_split", std::to_string(cfg.forest_min_samples_split));
  kv.emplace_back("forest.features_per_split", cfg.forest_features_per_split == kFeaturesSqrt ? "sqrt"
                                               : cfg.forest_features_per_split == kFeaturesAll
                                                   ? "all"
                                                   : std::to_string(cfg.forest_features_per_split));
  kv.emplace_back("forest.bootstrap", cfg.forest_bootstrap ? "true" : "false");
  kv.emplace_back("gbt.rounds", std::to_string(cfg.gbt_rounds));
  kv.emplace_back("gbt.lambda", format_double(cfg.gbt_lambda));
  kv.emplace_back("gbt.scale_pos_weight",
                  cfg.gbt_auto_scale_pos_weight ? std::string("auto") : format_double(cfg.gbt_scale_pos_weight));
  kv.emplace_back("cascade.threshold1", format_double(cfg.threshold_phase1));
  kv.emplace_back("cascade.threshold2", format_double(cfg.threshold_phase2));
  kv.emplace_back("report.daily_flows", format_double(cfg.report_daily_flows));
  kv.emplace_back("report.i2p_fraction", format_double(cfg.report_i2p_fraction));
  kv.emplace_back("seed", std::to_string(cfg.seed));

  std::sort(kv.begin(), kv.end());
  std::string out = "# resolved run configuration\n";
  for (const auto& [key, value] : kv) out += key + " = " + value + "\n";
  return out;
}

PipelineOptions pipeline_options(const RunConfig& cfg, int phase, ModelKind model) {
  PipelineOptions opts;
  opts.phase = phase;
  opts.clean.critical_all = cfg.critical_all;
  opts.clean.critical = cfg.critical_features;
  opts.clean.duration_feature = cfg.duration_feature;
  opts.clean.flag_features = cfg.flag_features;
  opts.clean.packet_count_features = cfg.packet_count_features;
  opts.correlation_threshold = cfg.correlation_threshold;
  opts.split.test_fraction = cfg.test_fraction;
  opts.split.seed = cfg.seed;
  opts.imbalance = cfg.imbalance;
  opts.model = model;
  opts.forest.n_trees = cfg.forest_trees;
  opts.forest.tree.max_depth = cfg.forest_max_depth;
  opts.forest.tree.min_samples_split = cfg.forest_min_samples_split;
  opts.forest.tree.features_per_split = cfg.forest_features_per_split;
  opts.forest.bootstrap = cfg.forest_bootstrap;
  opts.gbt_base.n_rounds = cfg.gbt_rounds;
  opts.gbt_base.lambda = cfg.gbt_lambda;
  opts.gbt_base.scale_pos_weight = cfg.gbt_scale_pos_weight;
  opts.auto_scale_pos_weight = cfg.gbt_auto_scale_pos_weight;
  opts.threshold = phase == 1 ? cfg.threshold_phase1 : cfg.threshold_phase2;
  opts.seed = cfg.seed;
  return opts;
}

std::optional<ModelKind> model_kind_from_name(const std::string& name) {
  if (name == "forest") return ModelKind::Forest;
  if (name == "gbt-xgb") return ModelKind::GbtXgb;
  if (name == "gbt-lgbm") return ModelKind::GbtLgbm;
  return std::nullopt;
}

}  // namespace i2pflow
