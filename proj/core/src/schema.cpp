#include "i2pflow/schema.hpp"

#include <algorithm>
#include <set>

#include "i2pflow/errors.hpp"
#include "i2pflow/io_util.hpp"

namespace i2pflow {

const char* activity_name(Activity a) {
  switch (a) {
    case Activity::FTP: return "FTP";
    case Activity::P2P: return "P2P";
    case Activity::Browsing: return "Browsing";
    case Activity::Email: return "Email";
    case Activity::Chat: return "Chat";
  }
  return "?";
}

std::optional<Activity> activity_from_name(const std::string& name) {
  if (name == "FTP") return Activity::FTP;
  if (name == "P2P") return Activity::P2P;
  if (name == "Browsing") return Activity::Browsing;
  if (name == "Email") return Activity::Email;
  if (name == "Chat") return Activity::Chat;
  return std::nullopt;
}

std::optional<std::size_t> FeatureSchema::feature_index(const std::string& name) const {
  const auto it = std::find(feature_names.begin(), feature_names.end(), name);
  if (it == feature_names.end()) return std::nullopt;
  return static_cast<std::size_t>(it - feature_names.begin());
}

ColumnConfig parse_column_config(const std::string& text, const std::string& origin) {
  const KvFile kv = KvFile::parse_text(text, origin);
  ColumnConfig cfg;
  cfg.label_column = kv.get("label_column");
  cfg.activity_column = kv.get_or("activity_column", "");
  for (auto& c : split(kv.get_or("id_columns", ""), ',')) {
    const std::string name = trim(c);
    if (!name.empty()) cfg.id_columns.push_back(name);
  }
  const std::string policy = kv.get_or("unknown_label", "error");
  if (policy == "error") {
    cfg.unknown_label = UnknownLabelPolicy::Error;
  } else if (policy == "drop") {
    cfg.unknown_label = UnknownLabelPolicy::Drop;
  } else {
    throw ConfigError(origin + ": unknown_label must be `error` or `drop`, got `" + policy + "`");
  }
  cfg.negative_class_name = kv.get_or("class_names.negative", "Normal");
  cfg.positive_class_name = kv.get_or("class_names.positive", "I2P");

  for (const auto& [key, value] : kv.entries()) {
    if (!key.starts_with("label_map.")) continue;
    const std::string from = key.substr(std::string("label_map.").size());
    if (from.empty()) throw ConfigError(origin + ": empty label string in `" + key + "`");
    if (value == "Normal") {
      cfg.class_map[from] = kClassNegative;
    } else if (value == "I2P") {
      cfg.class_map[from] = kClassPositive;
    } else if (auto act = activity_from_name(value)) {
      cfg.activity_map[from] = *act;
    } else {
      throw ConfigError(origin + ": `" + key + "` maps to unknown enum `" + value +
                        "` (expected Normal, I2P, FTP, P2P, Browsing, Email, or Chat)");
    }
  }
  return cfg;
}

ColumnConfig load_column_config(const std::string& path) {
  return parse_column_config(read_file(path), path);
}

std::string column_config_text(const ColumnConfig& cfg) {
  std::string out;
  out += "label_column = " + cfg.label_column + "\n";
  if (!cfg.activity_column.empty()) out += "activity_column = " + cfg.activity_column + "\n";
  if (!cfg.id_columns.empty()) out += "id_columns = " + join(cfg.id_columns, ',') + "\n";
  out += std::string("unknown_label = ") + (cfg.unknown_label == UnknownLabelPolicy::Error ? "error" : "drop") + "\n";
  out += "class_names.negative = " + cfg.negative_class_name + "\n";
  out += "class_names.positive = " + cfg.positive_class_name + "\n";
  for (const auto& [from, cls] : cfg.class_map) {
    out += "label_map." + from + " = " + (cls == kClassPositive ? "I2P" : "Normal") + "\n";
  }
  for (const auto& [from, act] : cfg.activity_map) {
    out += "label_map." + from + " = " + activity_name(act) + "\n";
  }
  return out;
}

FeatureSchema parse_schema(const std::string& header_line, const ColumnConfig& cfg, char delim) {
  if (trim(header_line).empty()) throw SchemaError("empty header line");
  FeatureSchema schema;
  schema.label_column = cfg.label_column;
  schema.activity_column = cfg.activity_column;

  std::set<std::string> seen;
  bool label_found = false;
  bool activity_found = cfg.activity_column.empty();
  for (const auto& raw : split(header_line, delim)) {
    const std::string name = trim(raw);
    if (name.empty()) throw SchemaError("empty column name in header");
    if (!seen.insert(name).second) throw SchemaError("duplicate column name `" + name + "` in header");
    if (name == cfg.label_column) {
      label_found = true;
      continue;
    }
    if (!cfg.activity_column.empty() && name == cfg.activity_column) {
      activity_found = true;
      continue;
    }
    if (std::find(cfg.id_columns.begin(), cfg.id_columns.end(), name) != cfg.id_columns.end()) continue;
    schema.feature_names.push_back(name);
  }
  if (!label_found) throw SchemaError("label column `" + cfg.label_column + "` absent from header");
  if (!activity_found) throw SchemaError("activity column `" + cfg.activity_column + "` absent from header");
  if (schema.feature_names.empty()) throw SchemaError("header contains zero feature columns");
  return schema;
}

}  // namespace i2pflow
