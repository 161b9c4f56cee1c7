#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace i2pflow {

// Binary flow class. Index 0 is the negative class, 1 the positive one
// (I2P in phase 1, Exfiltration in phase 2).
inline constexpr int kClassNegative = 0;
inline constexpr int kClassPositive = 1;

enum class Activity { FTP, P2P, Browsing, Email, Chat };

const char* activity_name(Activity a);
std::optional<Activity> activity_from_name(const std::string& name);

// Ordered feature namespace. Feature order defines the index space for all
// downstream masks, scalers, and model feature indices.
struct FeatureSchema {
  std::vector<std::string> feature_names;
  std::string label_column;
  std::string activity_column;  // empty when the dataset carries no activity labels

  std::size_t feature_count() const { return feature_names.size(); }
  // Index of a feature by exact name, or nullopt.
  std::optional<std::size_t> feature_index(const std::string& name) const;

  bool operator==(const FeatureSchema&) const = default;
};

enum class UnknownLabelPolicy { Error, Drop };

// Column-mapping config for delimited flow files: which columns hold the
// label/activity/ids and how label strings map onto the class and activity
// enums. Loaded from a `key = value` file (see load_column_config).
struct ColumnConfig {
  std::string label_column;
  std::string activity_column;           // optional
  std::vector<std::string> id_columns;   // optional; first one becomes the row id
  std::map<std::string, int> class_map;          // label string -> 0/1
  std::map<std::string, Activity> activity_map;  // activity string -> enum
  UnknownLabelPolicy unknown_label = UnknownLabelPolicy::Error;
  std::string negative_class_name = "Normal";
  std::string positive_class_name = "I2P";
};

ColumnConfig load_column_config(const std::string& path);
ColumnConfig parse_column_config(const std::string& text, const std::string& origin);
std::string column_config_text(const ColumnConfig& cfg);

// Builds the feature schema from a delimited header line: every column that
// is not the label, activity, or an id column is a feature, in file order.
FeatureSchema parse_schema(const std::string& header_line, const ColumnConfig& cfg, char delim = ',');

}  // namespace i2pflow
