#include "i2pflow/commands.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>

#include "i2pflow/errors.hpp"
#include "i2pflow/io_util.hpp"
#include "i2pflow/synth.hpp"

namespace i2pflow {

namespace fs = std::filesystem;

namespace {

void ensure_out_dir(const std::string& out_dir) {
  if (out_dir.empty()) throw ConfigError("output directory not set (--out)");
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create output directory " + out_dir + ": " + ec.message());
}

std::string out_path(const std::string& out_dir, const std::string& name) {
  return (fs::path(out_dir) / name).string();
}

std::string iso_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::tm tm_utc{};
  gmtime_r(&t, &tm_utc);
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
  return buf;
}

Dataset ingest_from_config(const RunConfig& cfg, const std::string& flows, const std::string& what) {
  if (flows.empty()) throw ConfigError("config does not name a " + what + " file");
  if (cfg.columns_path.empty()) throw ConfigError("config does not name a columns file (paths.columns)");
  return ingest_csv(flows, load_column_config(cfg.columns_path));
}

std::string importance_csv(const std::vector<double>& scores, const PreprocessArtifacts& artifacts) {
  std::vector<std::pair<double, std::size_t>> ranked;
  for (std::size_t k = 0; k < scores.size(); ++k) ranked.emplace_back(scores[k], k);
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  std::string out = "rank,feature,importance\n";
  char buf[32];
  for (std::size_t r = 0; r < ranked.size(); ++r) {
    const std::size_t raw_index = artifacts.mask.retained[ranked[r].second];
    std::snprintf(buf, sizeof(buf), "%.6f", ranked[r].first);
    out += std::to_string(r + 1) + "," + artifacts.feature_names[raw_index] + "," + buf + "\n";
  }
  return out;
}

void check_schema_compat(const PreprocessArtifacts& artifacts, const FeatureSchema& schema,
                         const std::string& data_path) {
  if (artifacts.feature_names == schema.feature_names) return;
  std::string diff = data_path + ": schema does not match the trained bundle";
  diff += " (bundle " + std::to_string(artifacts.feature_names.size()) + " features, data " +
          std::to_string(schema.feature_count()) + ")";
  const std::size_t n = std::min(artifacts.feature_names.size(), schema.feature_names.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (artifacts.feature_names[i] != schema.feature_names[i]) {
      diff += "; first mismatch at index " + std::to_string(i) + ": bundle `" + artifacts.feature_names[i] +
              "` vs data `" + schema.feature_names[i] + "`";
      break;
    }
  }
  throw SchemaError(diff);
}

PhaseBundle single_phase_of(const CascadeModel& cm, const std::string& path) {
  if (cm.phase1 && cm.phase2) {
    throw ConfigError(path + " holds a full cascade; evaluate expects a single-phase bundle (use `score`)");
  }
  if (cm.phase1) return *cm.phase1;
  if (cm.phase2) return *cm.phase2;
  throw ModelFormatError(path + ": container holds no phase bundle");
}

}  // namespace

std::string bundle_filename(int phase, ModelKind model) {
  return "phase" + std::to_string(phase) + "_" + model_kind_name(model) + ".bundle";
}

void cmd_ingest(const RunConfig& cfg, const std::string& out_dir) {
  ensure_out_dir(out_dir);
  const Dataset ds = ingest_from_config(cfg, cfg.flows_path, "flow");
  write_file(out_path(out_dir, "summary.txt"), summary_text(dataset_summary(ds)));
  write_file(out_path(out_dir, "resolved_config.cfg"), resolved_config_text(cfg));
}

void cmd_train(const RunConfig& cfg, int phase, ModelKind model, const std::string& out_dir) {
  ensure_out_dir(out_dir);
  const Dataset raw = ingest_from_config(cfg, cfg.flows_path, "flow");

  const PipelineOptions opts = pipeline_options(cfg, phase, model);
  const auto started = std::chrono::steady_clock::now();
  TrainOutput result = train_phase(raw, opts);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

  CascadeModel container;
  container.provenance = std::string("train phase") + std::to_string(phase) + " " + model_kind_name(model) +
                         " on " + cfg.flows_path;
  (phase == 1 ? container.phase1 : container.phase2) = result.bundle;
  save_cascade(container, out_path(out_dir, bundle_filename(phase, model)));

  write_file(out_path(out_dir, "artifacts.txt"), artifacts_text(result.bundle.artifacts));
  write_csv(result.train, out_path(out_dir, "train.csv"));
  write_csv(result.test, out_path(out_dir, "test.csv"));
  write_file(out_path(out_dir, "columns.cfg"), column_config_text(canonical_column_config(result.train)));

  const std::string name = std::string(model_kind_name(model)) + "-phase" + std::to_string(phase);
  std::string metrics = metrics_csv_header();
  metrics += metrics_csv_row(name + "-train", result.train_metrics);
  metrics += metrics_csv_row(name + "-test", result.test_metrics);
  write_file(out_path(out_dir, "metrics.csv"), metrics);
  write_file(out_path(out_dir, "roc.csv"), roc_csv(result.test_curves.roc_points));
  write_file(out_path(out_dir, "pr.csv"), pr_csv(result.test_curves.pr_points));
  write_file(out_path(out_dir, "importance.csv"), importance_csv(result.importance, result.bundle.artifacts));
  write_file(out_path(out_dir, "train_log.txt"), result.log);
  write_file(out_path(out_dir, "resolved_config.cfg"), resolved_config_text(cfg));

  char meta[160];
  std::snprintf(meta, sizeof(meta), "created = %s\ntrain_seconds = %.3f\n", iso_timestamp().c_str(), seconds);
  write_file(out_path(out_dir, "run_meta.txt"), meta);

  if (!cfg.partner_bundle.empty()) {
    const CascadeModel partner = load_cascade(cfg.partner_bundle);
    CascadeModel full;
    full.provenance = container.provenance + " + " + cfg.partner_bundle;
    if (phase == 1) {
      if (!partner.phase2) throw ConfigError(cfg.partner_bundle + " does not hold a phase 2 bundle");
      full.phase1 = result.bundle;
      full.phase2 = partner.phase2;
    } else {
      if (!partner.phase1) throw ConfigError(cfg.partner_bundle + " does not hold a phase 1 bundle");
      full.phase1 = partner.phase1;
      full.phase2 = result.bundle;
    }
    save_cascade(full, out_path(out_dir, "cascade.i2pc"));
  }
}

void cmd_evaluate(const RunConfig& cfg, const std::string& out_dir) {
  ensure_out_dir(out_dir);
  if (cfg.bundle_path.empty()) throw ConfigError("config does not name a bundle (paths.bundle)");
  const CascadeModel container = load_cascade(cfg.bundle_path);
  const PhaseBundle bundle = single_phase_of(container, cfg.bundle_path);

  const Dataset ds = ingest_from_config(cfg, cfg.eval_flows, "test flow");
  check_schema_compat(bundle.artifacts, ds.schema, cfg.eval_flows);

  const EvalOutput eval = evaluate_bundle(bundle, ds);
  std::string metrics = metrics_csv_header();
  metrics += metrics_csv_row("bundle-eval", eval.metrics);
  write_file(out_path(out_dir, "metrics.csv"), metrics);
  write_file(out_path(out_dir, "roc.csv"), roc_csv(eval.curves.roc_points));
  write_file(out_path(out_dir, "pr.csv"), pr_csv(eval.curves.pr_points));

  const ConfusionMatrix& cm = eval.metrics.cm;
  std::string confusion = "tp = " + std::to_string(cm.tp) + "\ntn = " + std::to_string(cm.tn) +
                          "\nfp = " + std::to_string(cm.fp) + "\nfn = " + std::to_string(cm.fn) + "\n";
  write_file(out_path(out_dir, "confusion.txt"), confusion);
  write_file(out_path(out_dir, "resolved_config.cfg"), resolved_config_text(cfg));
}

void cmd_score(const RunConfig& cfg, const std::string& out_dir) {
  ensure_out_dir(out_dir);
  if (cfg.cascade_path.empty()) throw ConfigError("config does not name a cascade (paths.cascade)");
  const CascadeModel cascade = load_cascade(cfg.cascade_path);
  if (!cascade.complete()) {
    throw ConfigError(cfg.cascade_path + " does not hold both phases; train with paths.partner_bundle set");
  }
  const Dataset ds = ingest_from_config(cfg, cfg.score_flows, "score flow");
  const auto [records, summary] = score_batch(cascade, ds);
  write_file(out_path(out_dir, "alerts.csv"), alerts_csv(records));
  write_file(out_path(out_dir, "summary.txt"), summary_text(summary));
  write_file(out_path(out_dir, "resolved_config.cfg"), resolved_config_text(cfg));
}

namespace {

struct MetricsRow {
  std::string name;
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double auc = 0.0;
  double fpr = 0.0;
};

std::vector<MetricsRow> parse_metrics_csv(const std::string& text) {
  std::vector<MetricsRow> rows;
  const auto lines = split(text, '\n');
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (trim(lines[i]).empty()) continue;
    const auto cells = split(lines[i], ',');
    if (cells.size() < 11) continue;
    MetricsRow row;
    row.name = cells[0];
    row.accuracy = parse_double(cells[2]).value_or(0.0);
    row.precision = parse_double(cells[3]).value_or(0.0);
    row.recall = parse_double(cells[4]).value_or(0.0);
    row.f1 = parse_double(cells[5]).value_or(0.0);
    row.auc = parse_double(cells[6]).value_or(0.0);
    const double tn = parse_double(cells[8]).value_or(0.0);
    const double fp = parse_double(cells[9]).value_or(0.0);
    row.fpr = fp + tn > 0.0 ? fp / (fp + tn) : 0.0;
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string fmt4(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

}  // namespace

void cmd_report(const std::string& run_dir) {
  if (!fs::exists(run_dir)) throw IoError("run directory does not exist: " + run_dir);
  std::string report = "# i2pflow run report\n\n";
  std::vector<std::string> omissions;

  double train_seconds = -1.0;
  if (fs::exists(out_path(run_dir, "run_meta.txt"))) {
    const KvFile meta = KvFile::parse_file(out_path(run_dir, "run_meta.txt"));
    if (meta.has("train_seconds")) train_seconds = parse_double(meta.get("train_seconds")).value_or(-1.0);
  }

  RunConfig cfg;
  if (fs::exists(out_path(run_dir, "resolved_config.cfg"))) {
    cfg = parse_run_config_text(read_file(out_path(run_dir, "resolved_config.cfg")), "resolved_config.cfg");
  } else {
    omissions.push_back("resolved_config.cfg missing; projection uses defaults");
  }

  std::vector<MetricsRow> rows;
  if (fs::exists(out_path(run_dir, "metrics.csv"))) {
    rows = parse_metrics_csv(read_file(out_path(run_dir, "metrics.csv")));
  } else {
    omissions.push_back("metrics.csv missing");
  }

  report += "## Metrics\n\n";
  report += "| Model | Acc | Prec | Rec | F1 | AUC | Time(s) |\n";
  report += "|---|---|---|---|---|---|---|\n";
  for (const auto& row : rows) {
    report += "| " + row.name + " | " + fmt4(row.accuracy) + " | " + fmt4(row.precision) + " | " +
              fmt4(row.recall) + " | " + fmt4(row.f1) + " | " + fmt4(row.auc) + " | " +
              (train_seconds >= 0.0 ? fmt4(train_seconds) : std::string("-")) + " |\n";
  }
  report += "\n";

  report += "## Top features\n\n";
  if (fs::exists(out_path(run_dir, "importance.csv"))) {
    const auto lines = split(read_file(out_path(run_dir, "importance.csv")), '\n');
    report += "| Rank | Feature | Importance |\n|---|---|---|\n";
    double total = 0.0;
    std::size_t shown = 0;
    for (std::size_t i = 1; i < lines.size(); ++i) {
      if (trim(lines[i]).empty()) continue;
      const auto cells = split(lines[i], ',');
      if (cells.size() != 3) continue;
      total += parse_double(cells[2]).value_or(0.0);
      if (shown < 20) {
        report += "| " + cells[0] + " | " + cells[1] + " | " + cells[2] + " |\n";
        ++shown;
      }
    }
    char buf[64];
    std::snprintf(buf, sizeof(buf), "\nImportance sum over all features: %.3f\n\n", total);
    report += buf;
  } else {
    omissions.push_back("importance.csv missing");
  }

  report += "## Alert volume projection\n\n";
  char proj_hdr[96];
  std::snprintf(proj_hdr, sizeof(proj_hdr), "Assuming %.0f flows/day, positive-class fraction %.4f:\n\n",
                cfg.report_daily_flows, cfg.report_i2p_fraction);
  report += proj_hdr;
  for (const auto& row : rows) {
    if (row.name.find("-test") == std::string::npos && row.name.find("-eval") == std::string::npos) continue;
    const AlertVolumeProjection p =
        project_alert_volume(row.fpr, row.recall, cfg.report_daily_flows, cfg.report_i2p_fraction);
    char line[192];
    std::snprintf(line, sizeof(line), "- %s: %.1f false alerts/day, %.1f true alerts/day, %.1f missed/day\n",
                  row.name.c_str(), p.false_alerts_per_day, p.true_alerts_per_day, p.missed_flows_per_day);
    report += line;
  }

  for (const std::string& curve : {std::string("roc.csv"), std::string("pr.csv")}) {
    if (!fs::exists(out_path(run_dir, curve))) omissions.push_back(curve + " missing (no curve rendered)");
  }
  if (!omissions.empty()) {
    report += "\n## Omissions\n\n";
    for (const auto& o : omissions) report += "- " + o + "\n";
  }
  write_file(out_path(run_dir, "report.md"), report);
}

void cmd_synth(const RunConfig& cfg, const std::string& out_dir) {
  ensure_out_dir(out_dir);
  const GeneratorSpec spec = cfg.synth_spec_path.empty()
                                 ? default_synth_spec(cfg.synth_separation)
                                 : parse_synth_spec(read_file(cfg.synth_spec_path), cfg.synth_spec_path);
  const SyntheticDataset sd = generate(spec, cfg.synth_n, cfg.seed);
  write_csv(sd.data, out_path(out_dir, "flows.csv"));
  write_file(out_path(out_dir, "columns.cfg"), column_config_text(canonical_column_config(sd.data)));
  write_file(out_path(out_dir, "oracle.csv"), oracle_csv(sd));
  write_file(out_path(out_dir, "spec.txt"), synth_spec_text(spec));
  write_file(out_path(out_dir, "resolved_config.cfg"), resolved_config_text(cfg));
}

}  // namespace i2pflow
