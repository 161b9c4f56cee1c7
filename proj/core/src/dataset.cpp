#include "i2pflow/dataset.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include "i2pflow/errors.hpp"
#include "i2pflow/io_util.hpp"

namespace i2pflow {

bool FlowRecord::is_missing(std::size_t feature) const {
  return std::binary_search(missing.begin(), missing.end(), static_cast<std::uint16_t>(feature));
}

namespace {

struct ColumnLayout {
  // Per header column: feature index, or one of the pseudo-indices below.
  static constexpr int kLabel = -1;
  static constexpr int kActivity = -2;
  static constexpr int kId = -3;
  static constexpr int kIgnoredId = -4;  // id columns beyond the first
  std::vector<int> roles;
};

ColumnLayout map_columns(const std::vector<std::string>& header, const FeatureSchema& schema,
                         const ColumnConfig& cfg, const std::string& path) {
  ColumnLayout layout;
  layout.roles.reserve(header.size());
  std::size_t next_feature = 0;
  bool id_taken = false;
  for (const auto& raw : header) {
    const std::string name = trim(raw);
    if (name == cfg.label_column) {
      layout.roles.push_back(ColumnLayout::kLabel);
    } else if (!cfg.activity_column.empty() && name == cfg.activity_column) {
      layout.roles.push_back(ColumnLayout::kActivity);
    } else if (std::find(cfg.id_columns.begin(), cfg.id_columns.end(), name) != cfg.id_columns.end()) {
      layout.roles.push_back(id_taken ? ColumnLayout::kIgnoredId : ColumnLayout::kId);
      id_taken = true;
    } else {
      if (next_feature >= schema.feature_count() || schema.feature_names[next_feature] != name) {
        throw SchemaError(path + ": header column `" + name + "` does not match schema (expected `" +
                          (next_feature < schema.feature_count() ? schema.feature_names[next_feature] : "<end>") +
                          "`)");
      }
      layout.roles.push_back(static_cast<int>(next_feature));
      ++next_feature;
    }
  }
  if (next_feature != schema.feature_count()) {
    throw SchemaError(path + ": header has " + std::to_string(next_feature) + " feature columns, schema expects " +
                      std::to_string(schema.feature_count()));
  }
  return layout;
}

}  // namespace

Dataset ingest_csv(const std::string& path, const FeatureSchema& schema, const ColumnConfig& cfg) {
  const std::string text = read_file(path);
  std::vector<std::string> lines = split(text, '\n');
  for (auto& line : lines) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
  }
  if (lines.empty() || trim(lines[0]).empty()) throw SchemaError(path + ": missing header line");

  const std::vector<std::string> header = split(lines[0], ',');
  const ColumnLayout layout = map_columns(header, schema, cfg, path);
  const bool has_id = std::find(layout.roles.begin(), layout.roles.end(), ColumnLayout::kId) != layout.roles.end();

  Dataset ds;
  ds.schema = schema;
  ds.provenance = path;
  ds.class_names = {cfg.negative_class_name, cfg.positive_class_name};

  const std::size_t ncols = header.size();
  for (std::size_t li = 1; li < lines.size(); ++li) {
    const std::string& line = lines[li];
    if (li == lines.size() - 1 && line.empty()) break;  // trailing newline
    const std::vector<std::string> cells = split(line, ',');
    if (cells.size() != ncols) {
      throw SchemaError(path + ": row " + std::to_string(li) + " has " + std::to_string(cells.size()) +
                        " columns, expected " + std::to_string(ncols));
    }

    LabeledFlow row;
    row.record.values.assign(schema.feature_count(), 0.0);
    std::string id;
    bool drop = false;
    for (std::size_t c = 0; c < ncols && !drop; ++c) {
      const int role = layout.roles[c];
      const std::string cell = trim(cells[c]);
      if (role >= 0) {
        if (const auto v = parse_double(cell)) {
          row.record.values[static_cast<std::size_t>(role)] = *v;
        } else {
          row.record.missing.push_back(static_cast<std::uint16_t>(role));
        }
      } else if (role == ColumnLayout::kLabel) {
        const auto it = cfg.class_map.find(cell);
        if (it == cfg.class_map.end()) {
          if (cfg.unknown_label == UnknownLabelPolicy::Drop) {
            drop = true;
          } else {
            throw SchemaError(path + ": row " + std::to_string(li) + ": unknown label string `" + cell + "`");
          }
        } else {
          row.label = it->second;
        }
      } else if (role == ColumnLayout::kActivity) {
        if (!cell.empty()) {
          const auto it = cfg.activity_map.find(cell);
          if (it == cfg.activity_map.end()) {
            if (cfg.unknown_label == UnknownLabelPolicy::Drop) {
              drop = true;
            } else {
              throw SchemaError(path + ": row " + std::to_string(li) + ": unknown activity string `" + cell + "`");
            }
          } else {
            row.activity = it->second;
          }
        }
      } else if (role == ColumnLayout::kId) {
        id = cell;
      }
    }
    if (drop) continue;
    if (row.activity && row.label != kClassPositive) {
      if (cfg.unknown_label == UnknownLabelPolicy::Drop) continue;
      throw SchemaError(path + ": row " + std::to_string(li) + ": activity label on a " + ds.class_names[0] + " row");
    }
    std::sort(row.record.missing.begin(), row.record.missing.end());
    ds.rows.push_back(std::move(row));
    if (has_id) ds.row_ids.push_back(id);
  }
  return ds;
}

Dataset ingest_csv(const std::string& path, const ColumnConfig& cfg) {
  const std::string text = read_file(path);
  const auto nl = text.find('\n');
  std::string header = nl == std::string::npos ? text : text.substr(0, nl);
  if (!header.empty() && header.back() == '\r') header.pop_back();
  return ingest_csv(path, parse_schema(header, cfg), cfg);
}

std::string csv_text(const Dataset& ds) {
  std::string out;
  const bool has_id = !ds.row_ids.empty();
  for (std::size_t f = 0; f < ds.schema.feature_count(); ++f) {
    if (f) out.push_back(',');
    out += ds.schema.feature_names[f];
  }
  if (has_id) out += ",flow_id";
  out += "," + (ds.schema.label_column.empty() ? std::string("label") : ds.schema.label_column);
  const bool has_activity = !ds.schema.activity_column.empty();
  if (has_activity) out += "," + ds.schema.activity_column;
  out.push_back('\n');

  for (std::size_t r = 0; r < ds.rows.size(); ++r) {
    const LabeledFlow& row = ds.rows[r];
    for (std::size_t f = 0; f < row.record.values.size(); ++f) {
      if (f) out.push_back(',');
      if (!row.record.is_missing(f)) out += format_double(row.record.values[f]);
    }
    if (has_id) out += "," + ds.row_ids[r];
    out += "," + ds.class_names[static_cast<std::size_t>(row.label)];
    if (has_activity) {
      out.push_back(',');
      if (row.activity) out += activity_name(*row.activity);
    }
    out.push_back('\n');
  }
  return out;
}

void write_csv(const Dataset& ds, const std::string& path) { write_file(path, csv_text(ds)); }

ColumnConfig canonical_column_config(const Dataset& ds) {
  ColumnConfig cfg;
  cfg.label_column = ds.schema.label_column.empty() ? "label" : ds.schema.label_column;
  cfg.activity_column = ds.schema.activity_column;
  if (!ds.row_ids.empty()) cfg.id_columns = {"flow_id"};
  cfg.negative_class_name = ds.class_names[0];
  cfg.positive_class_name = ds.class_names[1];
  cfg.class_map[ds.class_names[0]] = kClassNegative;
  cfg.class_map[ds.class_names[1]] = kClassPositive;
  for (const Activity a : {Activity::FTP, Activity::P2P, Activity::Browsing, Activity::Email, Activity::Chat}) {
    cfg.activity_map[activity_name(a)] = a;
  }
  return cfg;
}

DatasetSummary dataset_summary(const Dataset& ds) {
  DatasetSummary s;
  s.total = ds.rows.size();
  std::array<std::size_t, 2> class_counts{0, 0};
  std::map<Activity, std::size_t> act_counts;
  for (const auto& row : ds.rows) {
    ++class_counts[static_cast<std::size_t>(row.label)];
    if (row.activity) {
      ++act_counts[*row.activity];
      if (row.label == kClassPositive) ++s.positive_with_activity;
    }
  }
  for (std::size_t c = 0; c < 2; ++c) {
    SummaryRow r;
    r.name = ds.class_names[c];
    r.count = class_counts[c];
    r.percent = s.total ? 100.0 * static_cast<double>(r.count) / static_cast<double>(s.total) : 0.0;
    s.classes.push_back(r);
  }
  const std::size_t pos = class_counts[1];
  for (const auto& [act, count] : act_counts) {
    SummaryRow r;
    r.name = activity_name(act);
    r.count = count;
    r.percent = pos ? 100.0 * static_cast<double>(count) / static_cast<double>(pos) : 0.0;
    s.activities.push_back(r);
  }
  return s;
}

std::string summary_text(const DatasetSummary& s) {
  std::ostringstream out;
  out << "total rows: " << s.total << "\n";
  char buf[64];
  for (const auto& r : s.classes) {
    std::snprintf(buf, sizeof(buf), "%9zu  (%.1f%%)", r.count, r.percent);
    out << "  class " << r.name << ": " << buf << "\n";
  }
  if (!s.activities.empty()) {
    out << "activity breakdown (of positive class):\n";
    for (const auto& r : s.activities) {
      std::snprintf(buf, sizeof(buf), "%9zu  (%.1f%%)", r.count, r.percent);
      out << "  " << r.name << ": " << buf << "\n";
    }
  }
  return out.str();
}

}  // namespace i2pflow
