#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "i2pflow/dataset.hpp"

namespace i2pflow {

// Dense row-major feature matrix (rows x retained features).
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}
  double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  const double* row(std::size_t r) const { return data.data() + r * cols; }
};

struct CleaningReport {
  std::size_t dropped_missing = 0;
  std::size_t dropped_negative_duration = 0;
  std::size_t dropped_invalid_flags = 0;
  std::size_t retained = 0;

  std::size_t total() const {
    return dropped_missing + dropped_negative_duration + dropped_invalid_flags + retained;
  }
  bool operator==(const CleaningReport&) const = default;
};

// Row-validity rules, checked in the order: missing-critical, negative
// duration, impossible flag counts. A row is attributed to the first rule
// it fails.
struct CleanRules {
  std::vector<std::size_t> critical_features;      // missing value here drops the row
  std::optional<std::size_t> duration_feature;     // value < 0 drops the row
  std::vector<std::size_t> flag_features;          // each needs 0 <= v <= total packets
  std::vector<std::size_t> packet_count_features;  // summed into the flow's total packet count
};

std::pair<Dataset, CleaningReport> clean(const Dataset& ds, const CleanRules& rules);

struct CorrelatedRemoval {
  std::size_t removed = 0;
  std::size_t kept = 0;
  double correlation = 0.0;
  bool operator==(const CorrelatedRemoval&) const = default;
};

struct FeatureMask {
  std::size_t feature_count = 0;
  std::vector<std::size_t> retained;           // ascending schema indices
  std::vector<std::size_t> removed_constant;   // ascending
  std::vector<CorrelatedRemoval> removed_correlated;

  bool is_retained(std::size_t feature) const;
  bool operator==(const FeatureMask&) const = default;
};

// Removes features whose non-missing values are identical across all rows
// (features with no observed value at all count as constant).
FeatureMask prune_constant(const Dataset& ds);

// Greedy keep-first-in-schema-order pruning of |pearson| > threshold pairs,
// applied on top of an existing (constant-pruned) mask.
FeatureMask prune_correlated(const Dataset& ds, const FeatureMask& mask, double threshold = 0.95);

// Pearson correlation between two feature columns over rows where both are
// present; nullopt when fewer than two complete rows or either side is
// constant on the complete subset.
std::optional<double> pearson(const Dataset& ds, std::size_t a, std::size_t b);

struct ScalerParams {
  std::vector<double> means;  // aligned with mask.retained
  std::vector<double> stds;   // population formula, strictly positive
  bool operator==(const ScalerParams&) const = default;
};

ScalerParams fit_scaler(const Dataset& train, const FeatureMask& mask);
Matrix apply_scaler(const Dataset& ds, const ScalerParams& params, const FeatureMask& mask);

enum class StratifyOn { ClassLabel };

struct SplitSpec {
  double test_fraction = 0.2;
  std::uint64_t seed = 42;
  StratifyOn stratify_on = StratifyOn::ClassLabel;
};

// Seeded stratified split: per class, round-half-up(n_c * test_fraction)
// rows go to test. Row order within each side follows the input dataset.
std::pair<Dataset, Dataset> stratified_split(const Dataset& ds, const SplitSpec& spec);

// Downsamples the majority class to the minority count without replacement;
// the output row order is a seeded shuffle.
Dataset undersample_majority(const Dataset& train, std::uint64_t seed);

// Balanced class weights w_c = N / (K * n_c).
std::array<double, 2> class_weights(const Dataset& train);
std::array<double, 2> class_weights_from_counts(std::size_t n_neg, std::size_t n_pos);
double scale_pos_weight_from_counts(std::size_t n_neg, std::size_t n_pos);

std::vector<int> labels_of(const Dataset& ds);
std::array<std::size_t, 2> class_counts(const Dataset& ds);

// The frozen preprocessing state of one phase: what must be applied
// identically to train, test, and live flows.
struct PreprocessArtifacts {
  std::vector<std::string> feature_names;  // raw schema, defines the index space
  CleaningReport cleaning;
  FeatureMask mask;
  ScalerParams scaler;
  SplitSpec split;
  double correlation_threshold = 0.95;

  std::size_t feature_count() const { return feature_names.size(); }
};

// Versioned structured-text serialization (exact double round-trip).
std::string artifacts_text(const PreprocessArtifacts& a);
PreprocessArtifacts parse_artifacts(const std::string& text, const std::string& origin);

// Select retained features from a raw record and scale them.
std::vector<double> apply_artifacts(const PreprocessArtifacts& a, const FlowRecord& record);

}  // namespace i2pflow
