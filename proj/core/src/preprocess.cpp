#include "i2pflow/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "i2pflow/errors.hpp"
#include "i2pflow/io_util.hpp"
#include "i2pflow/rng.hpp"

namespace i2pflow {

namespace {

void validate_feature_index(std::size_t f, std::size_t count, const char* rule) {
  if (f >= count) {
    throw SchemaError(std::string(rule) + " rule references feature index " + std::to_string(f) +
                      " outside schema (F=" + std::to_string(count) + ")");
  }
}

Dataset dataset_subset(const Dataset& ds, const std::vector<std::size_t>& indices) {
  Dataset out;
  out.schema = ds.schema;
  out.provenance = ds.provenance;
  out.class_names = ds.class_names;
  out.rows.reserve(indices.size());
  for (const std::size_t i : indices) out.rows.push_back(ds.rows[i]);
  if (!ds.row_ids.empty()) {
    out.row_ids.reserve(indices.size());
    for (const std::size_t i : indices) out.row_ids.push_back(ds.row_ids[i]);
  }
  return out;
}

std::size_t round_half_up(double x) { return static_cast<std::size_t>(std::floor(x + 0.5)); }

}  // namespace

std::pair<Dataset, CleaningReport> clean(const Dataset& ds, const CleanRules& rules) {
  const std::size_t F = ds.feature_count();
  for (const std::size_t f : rules.critical_features) validate_feature_index(f, F, "missing-value");
  if (rules.duration_feature) validate_feature_index(*rules.duration_feature, F, "negative-duration");
  if (!rules.flag_features.empty() && rules.packet_count_features.empty()) {
    throw SchemaError("flag-count rule enabled without packet-count features");
  }
  for (const std::size_t f : rules.flag_features) validate_feature_index(f, F, "flag-count");
  for (const std::size_t f : rules.packet_count_features) validate_feature_index(f, F, "packet-count");

  CleaningReport report;
  std::vector<std::size_t> keep;
  keep.reserve(ds.rows.size());
  for (std::size_t i = 0; i < ds.rows.size(); ++i) {
    const FlowRecord& rec = ds.rows[i].record;

    bool missing_critical = false;
    for (const std::size_t f : rules.critical_features) {
      if (rec.is_missing(f)) {
        missing_critical = true;
        break;
      }
    }
    if (missing_critical) {
      ++report.dropped_missing;
      continue;
    }

    if (rules.duration_feature && !rec.is_missing(*rules.duration_feature) &&
        rec.values[*rules.duration_feature] < 0.0) {
      ++report.dropped_negative_duration;
      continue;
    }

    if (!rules.flag_features.empty()) {
      double total_packets = 0.0;
      bool total_known = true;
      for (const std::size_t f : rules.packet_count_features) {
        if (rec.is_missing(f)) {
          total_known = false;
          break;
        }
        total_packets += rec.values[f];
      }
      if (total_known) {
        bool bad = false;
        for (const std::size_t f : rules.flag_features) {
          if (rec.is_missing(f)) continue;
          const double v = rec.values[f];
          if (v < 0.0 || v > total_packets) {
            bad = true;
            break;
          }
        }
        if (bad) {
          ++report.dropped_invalid_flags;
          continue;
        }
      }
    }
    keep.push_back(i);
  }
  report.retained = keep.size();
  return {dataset_subset(ds, keep), report};
}

bool FeatureMask::is_retained(std::size_t feature) const {
  return std::binary_search(retained.begin(), retained.end(), feature);
}

FeatureMask prune_constant(const Dataset& ds) {
  if (ds.rows.empty()) throw TrainError("prune_constant on empty dataset");
  const std::size_t F = ds.feature_count();
  FeatureMask mask;
  mask.feature_count = F;
  for (std::size_t f = 0; f < F; ++f) {
    bool seen = false;
    double first = 0.0;
    bool constant = true;
    for (const auto& row : ds.rows) {
      if (row.record.is_missing(f)) continue;
      const double v = row.record.values[f];
      if (!seen) {
        seen = true;
        first = v;
      } else if (v != first) {
        constant = false;
        break;
      }
    }
    if (constant) {
      mask.removed_constant.push_back(f);
    } else {
      mask.retained.push_back(f);
    }
  }
  return mask;
}

std::optional<double> pearson(const Dataset& ds, std::size_t a, std::size_t b) {
  // Pairwise-complete two-pass computation.
  double mean_a = 0.0;
  double mean_b = 0.0;
  std::size_t n = 0;
  for (const auto& row : ds.rows) {
    if (row.record.is_missing(a) || row.record.is_missing(b)) continue;
    mean_a += row.record.values[a];
    mean_b += row.record.values[b];
    ++n;
  }
  if (n < 2) return std::nullopt;
  mean_a /= static_cast<double>(n);
  mean_b /= static_cast<double>(n);
  double saa = 0.0;
  double sbb = 0.0;
  double sab = 0.0;
  for (const auto& row : ds.rows) {
    if (row.record.is_missing(a) || row.record.is_missing(b)) continue;
    const double da = row.record.values[a] - mean_a;
    const double db = row.record.values[b] - mean_b;
    saa += da * da;
    sbb += db * db;
    sab += da * db;
  }
  if (saa == 0.0 || sbb == 0.0) return std::nullopt;
  return sab / std::sqrt(saa * sbb);
}

FeatureMask prune_correlated(const Dataset& ds, const FeatureMask& mask, double threshold) {
  FeatureMask out = mask;
  std::vector<std::size_t> alive = mask.retained;
  std::vector<bool> removed(mask.feature_count, false);
  for (std::size_t ii = 0; ii < alive.size(); ++ii) {
    const std::size_t i = alive[ii];
    if (removed[i]) continue;
    for (std::size_t jj = ii + 1; jj < alive.size(); ++jj) {
      const std::size_t j = alive[jj];
      if (removed[j]) continue;
      const auto r = pearson(ds, i, j);
      if (r && std::abs(*r) > threshold) {
        removed[j] = true;
        out.removed_correlated.push_back({j, i, *r});
      }
    }
  }
  out.retained.clear();
  for (const std::size_t f : alive) {
    if (!removed[f]) out.retained.push_back(f);
  }
  return out;
}

ScalerParams fit_scaler(const Dataset& train, const FeatureMask& mask) {
  if (train.rows.empty()) throw TrainError("fit_scaler on empty dataset");
  ScalerParams params;
  params.means.reserve(mask.retained.size());
  params.stds.reserve(mask.retained.size());
  for (const std::size_t f : mask.retained) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& row : train.rows) {
      if (row.record.is_missing(f)) continue;
      sum += row.record.values[f];
      ++n;
    }
    if (n == 0) throw TrainError("fit_scaler: retained feature " + std::to_string(f) + " has no observed values");
    const double mean = sum / static_cast<double>(n);
    double ss = 0.0;
    for (const auto& row : train.rows) {
      if (row.record.is_missing(f)) continue;
      const double d = row.record.values[f] - mean;
      ss += d * d;
    }
    const double var = ss / static_cast<double>(n);  // population formula
    if (var <= 0.0) {
      throw TrainError("fit_scaler: retained feature " + std::to_string(f) +
                       " has zero variance (constant pruning must run first)");
    }
    params.means.push_back(mean);
    params.stds.push_back(std::sqrt(var));
  }
  return params;
}

Matrix apply_scaler(const Dataset& ds, const ScalerParams& params, const FeatureMask& mask) {
  if (params.means.size() != mask.retained.size()) {
    throw SchemaError("scaler params cover " + std::to_string(params.means.size()) + " features, mask retains " +
                      std::to_string(mask.retained.size()));
  }
  if (ds.feature_count() != mask.feature_count) {
    throw SchemaError("dataset has " + std::to_string(ds.feature_count()) + " features, mask expects " +
                      std::to_string(mask.feature_count));
  }
  Matrix m(ds.rows.size(), mask.retained.size());
  for (std::size_t r = 0; r < ds.rows.size(); ++r) {
    const FlowRecord& rec = ds.rows[r].record;
    for (std::size_t k = 0; k < mask.retained.size(); ++k) {
      const std::size_t f = mask.retained[k];
      if (rec.is_missing(f)) {
        throw SchemaError("row " + std::to_string(r) + ": missing value in retained feature " + std::to_string(f));
      }
      m.at(r, k) = (rec.values[f] - params.means[k]) / params.stds[k];
    }
  }
  return m;
}

std::pair<Dataset, Dataset> stratified_split(const Dataset& ds, const SplitSpec& spec) {
  if (!(spec.test_fraction > 0.0 && spec.test_fraction < 1.0)) {
    throw ConfigError("test_fraction must be in (0,1)");
  }
  std::array<std::vector<std::size_t>, 2> strata;
  for (std::size_t i = 0; i < ds.rows.size(); ++i) {
    strata[static_cast<std::size_t>(ds.rows[i].label)].push_back(i);
  }
  Rng rng(spec.seed);
  std::vector<std::size_t> test_idx;
  std::vector<std::size_t> train_idx;
  for (std::size_t c = 0; c < 2; ++c) {
    auto& stratum = strata[c];
    if (stratum.empty()) continue;
    if (stratum.size() < 2) {
      throw TrainError("stratum `" + ds.class_names[c] + "` has fewer than 2 rows");
    }
    rng.shuffle(stratum);
    const std::size_t n_test = round_half_up(static_cast<double>(stratum.size()) * spec.test_fraction);
    for (std::size_t k = 0; k < stratum.size(); ++k) {
      (k < n_test ? test_idx : train_idx).push_back(stratum[k]);
    }
  }
  std::sort(test_idx.begin(), test_idx.end());
  std::sort(train_idx.begin(), train_idx.end());
  return {dataset_subset(ds, train_idx), dataset_subset(ds, test_idx)};
}

Dataset undersample_majority(const Dataset& train, std::uint64_t seed) {
  const auto counts = class_counts(train);
  if (counts[0] == 0 || counts[1] == 0) throw TrainError("undersample_majority needs both classes present");
  if (counts[0] == counts[1]) return train;
  const std::size_t majority = counts[0] > counts[1] ? 0 : 1;
  const std::size_t n_min = std::min(counts[0], counts[1]);

  std::vector<std::size_t> majority_idx;
  std::vector<std::size_t> minority_idx;
  for (std::size_t i = 0; i < train.rows.size(); ++i) {
    (static_cast<std::size_t>(train.rows[i].label) == majority ? majority_idx : minority_idx).push_back(i);
  }
  Rng rng(seed);
  rng.shuffle(majority_idx);
  majority_idx.resize(n_min);

  std::vector<std::size_t> all = std::move(majority_idx);
  all.insert(all.end(), minority_idx.begin(), minority_idx.end());
  rng.shuffle(all);
  return dataset_subset(train, all);
}

std::array<double, 2> class_weights_from_counts(std::size_t n_neg, std::size_t n_pos) {
  if (n_neg == 0 || n_pos == 0) throw TrainError("class_weights with an empty class");
  const double total = static_cast<double>(n_neg + n_pos);
  return {total / (2.0 * static_cast<double>(n_neg)), total / (2.0 * static_cast<double>(n_pos))};
}

std::array<double, 2> class_weights(const Dataset& train) {
  const auto counts = class_counts(train);
  return class_weights_from_counts(counts[0], counts[1]);
}

double scale_pos_weight_from_counts(std::size_t n_neg, std::size_t n_pos) {
  if (n_pos == 0) throw TrainError("scale_pos_weight with no positive rows");
  return static_cast<double>(n_neg) / static_cast<double>(n_pos);
}

std::vector<int> labels_of(const Dataset& ds) {
  std::vector<int> y;
  y.reserve(ds.rows.size());
  for (const auto& row : ds.rows) y.push_back(row.label);
  return y;
}

std::array<std::size_t, 2> class_counts(const Dataset& ds) {
  std::array<std::size_t, 2> counts{0, 0};
  for (const auto& row : ds.rows) ++counts[static_cast<std::size_t>(row.label)];
  return counts;
}

namespace {

std::string indices_csv(const std::vector<std::size_t>& v) {
  std::vector<std::string> parts;
  parts.reserve(v.size());
  for (const std::size_t x : v) parts.push_back(std::to_string(x));
  return join(parts, ',');
}

std::vector<std::size_t> parse_indices(const std::string& s, const std::string& origin) {
  std::vector<std::size_t> out;
  if (trim(s).empty()) return out;
  for (const auto& part : split(s, ',')) {
    const auto v = parse_int(trim(part));
    if (!v || *v < 0) throw ConfigError(origin + ": bad index `" + part + "`");
    out.push_back(static_cast<std::size_t>(*v));
  }
  return out;
}

std::string doubles_csv(const std::vector<double>& v) {
  std::vector<std::string> parts;
  parts.reserve(v.size());
  for (const double x : v) parts.push_back(format_double(x));
  return join(parts, ',');
}

std::vector<double> parse_doubles(const std::string& s, const std::string& origin) {
  std::vector<double> out;
  if (trim(s).empty()) return out;
  for (const auto& part : split(s, ',')) {
    const auto v = parse_double(trim(part));
    if (!v) throw ConfigError(origin + ": bad decimal `" + part + "`");
    out.push_back(*v);
  }
  return out;
}

}  // namespace

std::string artifacts_text(const PreprocessArtifacts& a) {
  std::string out = "i2pflow-artifacts v1\n";
  out += "features = " + std::to_string(a.feature_names.size()) + "\n";
  for (std::size_t i = 0; i < a.feature_names.size(); ++i) {
    out += "feature." + std::to_string(i) + " = " + a.feature_names[i] + "\n";
  }
  out += "cleaning.dropped_missing = " + std::to_string(a.cleaning.dropped_missing) + "\n";
  out += "cleaning.dropped_negative_duration = " + std::to_string(a.cleaning.dropped_negative_duration) + "\n";
  out += "cleaning.dropped_invalid_flags = " + std::to_string(a.cleaning.dropped_invalid_flags) + "\n";
  out += "cleaning.retained = " + std::to_string(a.cleaning.retained) + "\n";
  out += "mask.retained = " + indices_csv(a.mask.retained) + "\n";
  out += "mask.removed_constant = " + indices_csv(a.mask.removed_constant) + "\n";
  std::vector<std::string> corr;
  corr.reserve(a.mask.removed_correlated.size());
  for (const auto& c : a.mask.removed_correlated) {
    corr.push_back(std::to_string(c.removed) + ":" + std::to_string(c.kept) + ":" + format_double(c.correlation));
  }
  out += "mask.removed_correlated = " + join(corr, ';') + "\n";
  out += "scaler.means = " + doubles_csv(a.scaler.means) + "\n";
  out += "scaler.stds = " + doubles_csv(a.scaler.stds) + "\n";
  out += "split.test_fraction = " + format_double(a.split.test_fraction) + "\n";
  out += "split.seed = " + std::to_string(a.split.seed) + "\n";
  out += "split.stratify_on = class\n";
  out += "correlation_threshold = " + format_double(a.correlation_threshold) + "\n";
  return out;
}

PreprocessArtifacts parse_artifacts(const std::string& text, const std::string& origin) {
  const auto nl = text.find('\n');
  const std::string magic = trim(nl == std::string::npos ? text : text.substr(0, nl));
  if (magic != "i2pflow-artifacts v1") {
    throw ModelFormatError(origin + ": expected `i2pflow-artifacts v1` header, got `" + magic + "`");
  }
  const KvFile kv = KvFile::parse_text(nl == std::string::npos ? "" : text.substr(nl + 1), origin);

  PreprocessArtifacts a;
  const auto nfeat = parse_int(kv.get("features"));
  if (!nfeat || *nfeat < 1) throw ConfigError(origin + ": bad feature count");
  a.feature_names.resize(static_cast<std::size_t>(*nfeat));
  for (std::size_t i = 0; i < a.feature_names.size(); ++i) {
    a.feature_names[i] = kv.get("feature." + std::to_string(i));
  }
  a.cleaning.dropped_missing = static_cast<std::size_t>(*parse_int(kv.get("cleaning.dropped_missing")));
  a.cleaning.dropped_negative_duration =
      static_cast<std::size_t>(*parse_int(kv.get("cleaning.dropped_negative_duration")));
  a.cleaning.dropped_invalid_flags = static_cast<std::size_t>(*parse_int(kv.get("cleaning.dropped_invalid_flags")));
  a.cleaning.retained = static_cast<std::size_t>(*parse_int(kv.get("cleaning.retained")));
  a.mask.feature_count = a.feature_names.size();
  a.mask.retained = parse_indices(kv.get("mask.retained"), origin);
  a.mask.removed_constant = parse_indices(kv.get("mask.removed_constant"), origin);
  const std::string corr = trim(kv.get("mask.removed_correlated"));
  if (!corr.empty()) {
    for (const auto& item : split(corr, ';')) {
      const auto parts = split(item, ':');
      if (parts.size() != 3) throw ConfigError(origin + ": bad correlated-removal entry `" + item + "`");
      CorrelatedRemoval c;
      c.removed = static_cast<std::size_t>(*parse_int(trim(parts[0])));
      c.kept = static_cast<std::size_t>(*parse_int(trim(parts[1])));
      const auto r = parse_double(trim(parts[2]));
      if (!r) throw ConfigError(origin + ": bad correlation in `" + item + "`");
      c.correlation = *r;
      a.mask.removed_correlated.push_back(c);
    }
  }
  a.scaler.means = parse_doubles(kv.get("scaler.means"), origin);
  a.scaler.stds = parse_doubles(kv.get("scaler.stds"), origin);
  const auto frac = parse_double(kv.get("split.test_fraction"));
  if (!frac) throw ConfigError(origin + ": bad split.test_fraction");
  a.split.test_fraction = *frac;
  a.split.seed = static_cast<std::uint64_t>(*parse_int(kv.get("split.seed")));
  const auto thr = parse_double(kv.get("correlation_threshold"));
  if (!thr) throw ConfigError(origin + ": bad correlation_threshold");
  a.correlation_threshold = *thr;

  if (a.scaler.means.size() != a.mask.retained.size() || a.scaler.stds.size() != a.mask.retained.size()) {
    throw ConfigError(origin + ": scaler length does not match retained feature count");
  }
  return a;
}

std::vector<double> apply_artifacts(const PreprocessArtifacts& a, const FlowRecord& record) {
  if (record.values.size() != a.feature_count()) {
    throw SchemaError("record has " + std::to_string(record.values.size()) + " features, artifacts expect " +
                      std::to_string(a.feature_count()));
  }
  std::vector<double> out(a.mask.retained.size());
  for (std::size_t k = 0; k < a.mask.retained.size(); ++k) {
    const std::size_t f = a.mask.retained[k];
    if (record.is_missing(f)) {
      throw SchemaError("missing value in retained feature " + std::to_string(f) + " (" + a.feature_names[f] + ")");
    }
    out[k] = (record.values[f] - a.scaler.means[k]) / a.scaler.stds[k];
  }
  return out;
}

}  // namespace i2pflow
