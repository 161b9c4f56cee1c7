#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace i2pflow {

struct ConfusionMatrix {
  std::uint64_t tp = 0;
  std::uint64_t tn = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;

  std::uint64_t total() const { return tp + tn + fp + fn; }
  double fpr() const;  // fp / (fp + tn)
  bool operator==(const ConfusionMatrix&) const = default;
};

struct MetricsReport {
  ConfusionMatrix cm;
  double threshold = 0.5;
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double roc_auc = 0.0;
  // tp+fp = 0 (resp. tp+fn = 0): the metric is reported as 0 and flagged.
  bool degenerate_precision = false;
  bool degenerate_recall = false;
};

struct RocPoint {
  double fpr = 0.0;
  double tpr = 0.0;
};

struct PrPoint {
  double recall = 0.0;
  double precision = 0.0;
};

struct CurveSet {
  std::vector<RocPoint> roc_points;  // from (0,0) to (1,1), threshold descending
  std::vector<PrPoint> pr_points;    // threshold descending, last point at recall 1
};

// Predicted positive iff score > threshold (strict).
ConfusionMatrix confusion(const std::vector<int>& y_true, const std::vector<double>& scores,
                          double threshold = 0.5);

// Fills the scalar part (accuracy/precision/recall/f1 + degeneracy flags);
// roc_auc is left at 0 for the caller.
MetricsReport compute_metrics(const ConfusionMatrix& cm);

// AUC by the midrank statistic (exact under ties) plus the swept ROC curve.
// Both classes must be present.
std::pair<double, std::vector<RocPoint>> roc_auc(const std::vector<int>& y_true,
                                                 const std::vector<double>& scores);

// Precision-recall pairs at every distinct score threshold, descending.
std::vector<PrPoint> pr_curve(const std::vector<int>& y_true, const std::vector<double>& scores);

MetricsReport evaluate_scores(const std::vector<int>& y_true, const std::vector<double>& scores,
                              double threshold = 0.5);

// Trapezoidal area under a swept ROC curve (cross-check for the rank AUC).
double trapezoid_auc(const std::vector<RocPoint>& roc);

// Delimited exports (6-decimal fixed formatting).
std::string metrics_csv_header();
std::string metrics_csv_row(const std::string& model_name, const MetricsReport& r);
std::string roc_csv(const std::vector<RocPoint>& points);
std::string pr_csv(const std::vector<PrPoint>& points);

}  // namespace i2pflow
