#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "i2pflow/schema.hpp"

namespace i2pflow {

// One bidirectional flow as a fixed-width numeric vector. Missing entries
// keep a canonical 0.0 payload and are tracked by index; they must never
// enter any statistic.
struct FlowRecord {
  std::vector<double> values;
  std::vector<std::uint16_t> missing;  // sorted feature indices

  bool is_missing(std::size_t feature) const;
  bool operator==(const FlowRecord&) const = default;
};

struct LabeledFlow {
  FlowRecord record;
  int label = kClassNegative;  // 0 or 1
  std::optional<Activity> activity;

  bool operator==(const LabeledFlow&) const = default;
};

struct Dataset {
  FeatureSchema schema;
  std::vector<LabeledFlow> rows;
  std::string provenance;
  std::array<std::string, 2> class_names{"Normal", "I2P"};
  std::vector<std::string> row_ids;  // empty, or one id per row

  std::size_t size() const { return rows.size(); }
  std::size_t feature_count() const { return schema.feature_count(); }

  bool operator==(const Dataset&) const = default;
};

// Reads a delimited flow file. The header must contain exactly the schema's
// features (in order) plus the mapped label/activity/id columns in any
// position. Non-numeric and non-finite feature cells become missing-flagged
// entries, not errors.
Dataset ingest_csv(const std::string& path, const FeatureSchema& schema, const ColumnConfig& cfg);

// Convenience: derive the schema from the file's own header, then ingest.
Dataset ingest_csv(const std::string& path, const ColumnConfig& cfg);

// Writes a dataset back out in the same dialect: feature columns in schema
// order, then id (when present), label, and activity columns. Missing cells
// are written empty; doubles round-trip exactly.
void write_csv(const Dataset& ds, const std::string& path);
std::string csv_text(const Dataset& ds);

// Column config whose mappings match write_csv output for this dataset.
ColumnConfig canonical_column_config(const Dataset& ds);

struct SummaryRow {
  std::string name;
  std::size_t count = 0;
  double percent = 0.0;
};

struct DatasetSummary {
  std::size_t total = 0;
  std::vector<SummaryRow> classes;              // percent of total
  std::size_t positive_with_activity = 0;
  std::vector<SummaryRow> activities;           // percent of positive-class rows
};

DatasetSummary dataset_summary(const Dataset& ds);
std::string summary_text(const DatasetSummary& s);

}  // namespace i2pflow
