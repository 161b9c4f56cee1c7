#include "i2pflow/cascade.hpp"

#include <algorithm>
#include <cstdio>

#include "i2pflow/errors.hpp"
#include "i2pflow/io_util.hpp"

namespace i2pflow {

double PhaseBundle::score(const FlowRecord& record) const {
  const std::vector<double> x = apply_artifacts(artifacts, record);
  return predict_proba(model, x);
}

const char* tier_name(AlertTier t) {
  switch (t) {
    case AlertTier::None: return "None";
    case AlertTier::Low: return "Low";
    case AlertTier::High: return "High";
  }
  return "?";
}

Dataset build_phase2_dataset(const Dataset& ds) {
  if (ds.schema.activity_column.empty()) {
    throw TrainError("phase 2 needs activity labels; dataset has no activity column");
  }
  Dataset out;
  out.schema = ds.schema;
  out.schema.activity_column.clear();  // the behavior label replaces the class label
  out.provenance = ds.provenance + " [phase2]";
  out.class_names = {"Legitimate", "Exfiltration"};
  const bool has_ids = !ds.row_ids.empty();
  for (std::size_t i = 0; i < ds.rows.size(); ++i) {
    const LabeledFlow& row = ds.rows[i];
    if (row.label != kClassPositive || !row.activity) continue;
    int new_label = 0;
    switch (*row.activity) {
      case Activity::FTP:
      case Activity::P2P: new_label = kClassPositive; break;
      case Activity::Browsing: new_label = kClassNegative; break;
      case Activity::Email:
      case Activity::Chat: continue;  // excluded behaviors
    }
    LabeledFlow copy;
    copy.record = row.record;
    copy.label = new_label;
    out.rows.push_back(std::move(copy));
    if (has_ids) out.row_ids.push_back(ds.row_ids[i]);
  }
  if (out.rows.empty()) throw TrainError("phase 2: no FTP/P2P/Browsing rows in the positive class");
  return out;
}

AlertRecord score_flow(const CascadeModel& cm, const FlowRecord& record, const std::string& flow_id) {
  if (!cm.phase1) throw ConfigError("cascade has no phase 1 bundle");
  AlertRecord alert;
  alert.flow_id = flow_id;
  alert.p1_score = cm.phase1->score(record);
  if (alert.p1_score <= cm.phase1->threshold) {
    alert.tier = AlertTier::None;
    return alert;
  }
  if (!cm.phase2) throw ConfigError("cascade has no phase 2 bundle");
  alert.p2_score = cm.phase2->score(record);
  alert.tier = *alert.p2_score > cm.phase2->threshold ? AlertTier::High : AlertTier::Low;
  return alert;
}

std::pair<std::vector<AlertRecord>, BatchSummary> score_batch(const CascadeModel& cm, const Dataset& ds) {
  std::vector<AlertRecord> records;
  records.reserve(ds.rows.size());
  BatchSummary summary;
  summary.total = ds.rows.size();
  for (std::size_t i = 0; i < ds.rows.size(); ++i) {
    const std::string id = ds.row_ids.empty() ? std::to_string(i) : ds.row_ids[i];
    try {
      records.push_back(score_flow(cm, ds.rows[i].record, id));
    } catch (const SchemaError& e) {
      throw SchemaError("row " + std::to_string(i) + ": " + e.what());
    }
    switch (records.back().tier) {
      case AlertTier::None: ++summary.none; break;
      case AlertTier::Low: ++summary.low; break;
      case AlertTier::High: ++summary.high; break;
    }
  }
  return {std::move(records), summary};
}

AlertVolumeProjection project_alert_volume(double fpr, double recall, double daily_flows, double i2p_fraction) {
  for (const double rate : {fpr, recall, i2p_fraction}) {
    if (rate < 0.0 || rate > 1.0) throw ConfigError("project_alert_volume: rates must lie in [0,1]");
  }
  AlertVolumeProjection p;
  p.false_alerts_per_day = fpr * daily_flows * (1.0 - i2p_fraction);
  p.true_alerts_per_day = recall * daily_flows * i2p_fraction;
  p.missed_flows_per_day = (1.0 - recall) * daily_flows * i2p_fraction;
  return p;
}

namespace {

constexpr const char* kMagicPrefix = "i2pflow-cascade v";

void append_block(std::string& out, const std::string& name, const std::string& text) {
  // Blocks embed verbatim with a line count so content never collides with
  // the framing.
  std::size_t lines = 0;
  for (const char c : text) lines += c == '\n' ? 1 : 0;
  if (!text.empty() && text.back() != '\n') ++lines;
  out += name + " lines " + std::to_string(lines) + "\n";
  out += text;
  if (!text.empty() && text.back() != '\n') out.push_back('\n');
}

void append_phase(std::string& out, int n, const PhaseBundle& bundle) {
  out += "phase " + std::to_string(n) + " begin\n";
  out += "positive_class = " + bundle.positive_class_name + "\n";
  out += "threshold = " + format_double(bundle.threshold) + "\n";
  append_block(out, "artifacts", artifacts_text(bundle.artifacts));
  append_block(out, "model", model_text(bundle.model));
  out += "phase " + std::to_string(n) + " end\n";
}

struct Cursor {
  const std::vector<std::string>& lines;
  std::size_t pos = 0;
  const std::string& origin;

  std::string next() {
    if (pos >= lines.size()) throw ModelFormatError(origin + ": truncated cascade file");
    return lines[pos++];
  }
  void expect(const std::string& literal) {
    const std::string line = next();
    if (trim(line) != literal) {
      throw ModelFormatError(origin + ": expected `" + literal + "`, got `" + line + "`");
    }
  }
  std::string expect_kv(const std::string& key) {
    const std::string line = next();
    const auto eq = line.find('=');
    if (eq == std::string::npos || trim(line.substr(0, eq)) != key) {
      throw ModelFormatError(origin + ": expected `" + key + " = ...`, got `" + line + "`");
    }
    return trim(line.substr(eq + 1));
  }
  std::string read_block(const std::string& name) {
    const std::string header = next();
    const auto parts = split(trim(header), ' ');
    if (parts.size() != 3 || parts[0] != name || parts[1] != "lines") {
      throw ModelFormatError(origin + ": expected `" + name + " lines <n>`, got `" + header + "`");
    }
    const auto count = parse_int(parts[2]);
    if (!count || *count < 0) throw ModelFormatError(origin + ": bad block length in `" + header + "`");
    std::string block;
    for (long long i = 0; i < *count; ++i) block += next() + "\n";
    return block;
  }
};

PhaseBundle parse_phase(Cursor& cur, int n, const std::string& origin) {
  cur.expect("phase " + std::to_string(n) + " begin");
  PhaseBundle bundle;
  bundle.positive_class_name = cur.expect_kv("positive_class");
  const auto thr = parse_double(cur.expect_kv("threshold"));
  if (!thr) throw ModelFormatError(origin + ": bad phase threshold");
  bundle.threshold = *thr;
  bundle.artifacts = parse_artifacts(cur.read_block("artifacts"), origin);
  bundle.model = parse_model_text(cur.read_block("model"), origin);
  cur.expect("phase " + std::to_string(n) + " end");
  if (model_feature_count(bundle.model) != bundle.artifacts.mask.retained.size()) {
    throw ModelFormatError(origin + ": model feature count does not match artifact mask");
  }
  return bundle;
}

}  // namespace

std::string cascade_text(const CascadeModel& cm) {
  std::string body = kMagicPrefix + std::to_string(cm.version) + "\n";
  body += "meta.created = " + cm.created + "\n";
  body += "meta.provenance = " + cm.provenance + "\n";
  body += std::string("phase1 = ") + (cm.phase1 ? "present" : "absent") + "\n";
  body += std::string("phase2 = ") + (cm.phase2 ? "present" : "absent") + "\n";
  if (cm.phase1) append_phase(body, 1, *cm.phase1);
  if (cm.phase2) append_phase(body, 2, *cm.phase2);
  char crc[16];
  std::snprintf(crc, sizeof(crc), "%08x", crc32(body));
  return body + "crc32 = " + crc + "\n";
}

CascadeModel parse_cascade_text(const std::string& text, const std::string& origin) {
  const auto anchor = text.rfind("\ncrc32 = ");
  if (anchor == std::string::npos) throw ModelFormatError(origin + ": missing crc32 trailer (truncated file?)");
  const std::string body = text.substr(0, anchor + 1);
  const std::string crc_line = trim(text.substr(anchor + 1));
  char expected[24];
  std::snprintf(expected, sizeof(expected), "crc32 = %08x", crc32(body));
  if (crc_line != expected) {
    throw ModelFormatError(origin + ": checksum mismatch (file corrupt): stored `" + crc_line + "`, computed `" +
                           expected + "`");
  }

  std::vector<std::string> lines = split(body, '\n');
  if (!lines.empty() && lines.back().empty()) lines.pop_back();
  Cursor cur{lines, 0, origin};
  const std::string magic = trim(cur.next());
  if (!magic.starts_with(kMagicPrefix)) {
    throw ModelFormatError(origin + ": not a cascade model file (bad magic `" + magic + "`)");
  }
  const auto version = parse_int(magic.substr(std::string(kMagicPrefix).size()));
  if (!version) throw ModelFormatError(origin + ": bad format version in `" + magic + "`");
  if (*version != kCascadeFormatVersion) {
    throw ModelFormatError(origin + ": file format version " + std::to_string(*version) +
                           " is not supported (this build reads version " +
                           std::to_string(kCascadeFormatVersion) + ")");
  }

  CascadeModel cm;
  cm.version = static_cast<std::uint32_t>(*version);
  cm.created = cur.expect_kv("meta.created");
  cm.provenance = cur.expect_kv("meta.provenance");
  const bool has1 = cur.expect_kv("phase1") == "present";
  const bool has2 = cur.expect_kv("phase2") == "present";
  if (has1) cm.phase1 = parse_phase(cur, 1, origin);
  if (has2) cm.phase2 = parse_phase(cur, 2, origin);
  return cm;
}

void save_cascade(const CascadeModel& cm, const std::string& path) { write_file(path, cascade_text(cm)); }

CascadeModel load_cascade(const std::string& path) { return parse_cascade_text(read_file(path), path); }

std::string alerts_csv(const std::vector<AlertRecord>& records) {
  std::string out = "flow_id,p1_score,p2_score,tier\n";
  for (const auto& r : records) {
    out += r.flow_id + "," + format_double(r.p1_score) + ",";
    if (r.p2_score) out += format_double(*r.p2_score);
    out += std::string(",") + tier_name(r.tier) + "\n";
  }
  return out;
}

std::string summary_text(const BatchSummary& s) {
  std::string out = "total = " + std::to_string(s.total) + "\n";
  out += "tier.None = " + std::to_string(s.none) + "\n";
  out += "tier.Low = " + std::to_string(s.low) + "\n";
  out += "tier.High = " + std::to_string(s.high) + "\n";
  return out;
}

}  // namespace i2pflow
