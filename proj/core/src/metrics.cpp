#include "i2pflow/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>

#include "i2pflow/errors.hpp"

namespace i2pflow {

double ConfusionMatrix::fpr() const {
  const std::uint64_t negatives = fp + tn;
  return negatives ? static_cast<double>(fp) / static_cast<double>(negatives) : 0.0;
}

namespace {

void check_aligned(const std::vector<int>& y, const std::vector<double>& s) {
  if (y.empty()) throw SchemaError("empty label vector");
  if (y.size() != s.size()) throw SchemaError("labels and scores differ in length");
}

}  // namespace

ConfusionMatrix confusion(const std::vector<int>& y_true, const std::vector<double>& scores, double threshold) {
  check_aligned(y_true, scores);
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    const bool predicted = scores[i] > threshold;
    const bool actual = y_true[i] == 1;
    if (predicted && actual) ++cm.tp;
    else if (predicted && !actual) ++cm.fp;
    else if (!predicted && actual) ++cm.fn;
    else ++cm.tn;
  }
  return cm;
}

MetricsReport compute_metrics(const ConfusionMatrix& cm) {
  if (cm.total() == 0) throw SchemaError("compute_metrics on an empty confusion matrix");
  MetricsReport r;
  r.cm = cm;
  r.accuracy = static_cast<double>(cm.tp + cm.tn) / static_cast<double>(cm.total());
  if (cm.tp + cm.fp == 0) {
    r.degenerate_precision = true;
  } else {
    r.precision = static_cast<double>(cm.tp) / static_cast<double>(cm.tp + cm.fp);
  }
  if (cm.tp + cm.fn == 0) {
    r.degenerate_recall = true;
  } else {
    r.recall = static_cast<double>(cm.tp) / static_cast<double>(cm.tp + cm.fn);
  }
  if (r.precision + r.recall > 0.0) {
    r.f1 = 2.0 * r.precision * r.recall / (r.precision + r.recall);
  }
  return r;
}

std::pair<double, std::vector<RocPoint>> roc_auc(const std::vector<int>& y_true,
                                                 const std::vector<double>& scores) {
  check_aligned(y_true, scores);
  std::uint64_t n_pos = 0;
  for (const int v : y_true) n_pos += v == 1 ? 1 : 0;
  const std::uint64_t n_neg = y_true.size() - n_pos;
  if (n_pos == 0 || n_neg == 0) throw TrainError("roc_auc undefined: only one class present");

  std::vector<std::size_t> order(y_true.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Midrank sum over positives.
  double rank_sum_pos = 0.0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    const double midrank = 0.5 * static_cast<double>(i + 1 + j);  // ranks are 1-based
    for (std::size_t k = i; k < j; ++k) {
      if (y_true[order[k]] == 1) rank_sum_pos += midrank;
    }
    i = j;
  }
  const double auc = (rank_sum_pos - static_cast<double>(n_pos) * static_cast<double>(n_pos + 1) / 2.0) /
                     (static_cast<double>(n_pos) * static_cast<double>(n_neg));

  // Curve: one point per distinct threshold, descending; prediction is
  // score >= threshold at each sweep point.
  std::vector<RocPoint> curve;
  curve.push_back({0.0, 0.0});
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::size_t k = order.size();
  while (k > 0) {
    const double v = scores[order[k - 1]];
    while (k > 0 && scores[order[k - 1]] == v) {
      if (y_true[order[k - 1]] == 1) ++tp;
      else ++fp;
      --k;
    }
    curve.push_back({static_cast<double>(fp) / static_cast<double>(n_neg),
                     static_cast<double>(tp) / static_cast<double>(n_pos)});
  }
  return {auc, std::move(curve)};
}

std::vector<PrPoint> pr_curve(const std::vector<int>& y_true, const std::vector<double>& scores) {
  check_aligned(y_true, scores);
  std::uint64_t n_pos = 0;
  for (const int v : y_true) n_pos += v == 1 ? 1 : 0;
  if (n_pos == 0) throw TrainError("pr_curve undefined: no positive labels");

  std::vector<std::size_t> order(y_true.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  std::vector<PrPoint> curve;
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::size_t i = 0;
  while (i < order.size()) {
    const double v = scores[order[i]];
    while (i < order.size() && scores[order[i]] == v) {
      if (y_true[order[i]] == 1) ++tp;
      else ++fp;
      ++i;
    }
    curve.push_back({static_cast<double>(tp) / static_cast<double>(n_pos),
                     static_cast<double>(tp) / static_cast<double>(tp + fp)});
  }
  return curve;
}

MetricsReport evaluate_scores(const std::vector<int>& y_true, const std::vector<double>& scores,
                              double threshold) {
  MetricsReport r = compute_metrics(confusion(y_true, scores, threshold));
  r.threshold = threshold;
  r.roc_auc = roc_auc(y_true, scores).first;
  return r;
}

double trapezoid_auc(const std::vector<RocPoint>& roc) {
  double area = 0.0;
  for (std::size_t i = 1; i < roc.size(); ++i) {
    area += (roc[i].fpr - roc[i - 1].fpr) * (roc[i].tpr + roc[i - 1].tpr) / 2.0;
  }
  return area;
}

namespace {

std::string fixed6(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

}  // namespace

std::string metrics_csv_header() {
  return "model,threshold,accuracy,precision,recall,f1,roc_auc,tp,tn,fp,fn,"
         "degenerate_precision,degenerate_recall\n";
}

std::string metrics_csv_row(const std::string& model_name, const MetricsReport& r) {
  std::string out = model_name;
  out += "," + fixed6(r.threshold);
  out += "," + fixed6(r.accuracy);
  out += "," + fixed6(r.precision);
  out += "," + fixed6(r.recall);
  out += "," + fixed6(r.f1);
  out += "," + fixed6(r.roc_auc);
  out += "," + std::to_string(r.cm.tp);
  out += "," + std::to_string(r.cm.tn);
  out += "," + std::to_string(r.cm.fp);
  out += "," + std::to_string(r.cm.fn);
  out += r.degenerate_precision ? ",1" : ",0";
  out += r.degenerate_recall ? ",1" : ",0";
  out += "\n";
  return out;
}

std::string roc_csv(const std::vector<RocPoint>& points) {
  std::string out = "fpr,tpr\n";
  for (const auto& p : points) out += fixed6(p.fpr) + "," + fixed6(p.tpr) + "\n";
  return out;
}

std::string pr_csv(const std::vector<PrPoint>& points) {
  std::string out = "recall,precision\n";
  for (const auto& p : points) out += fixed6(p.recall) + "," + fixed6(p.precision) + "\n";
  return out;
}

}  // namespace i2pflow
