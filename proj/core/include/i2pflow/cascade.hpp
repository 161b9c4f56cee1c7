#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "i2pflow/ensemble.hpp"
#include "i2pflow/metrics.hpp"
#include "i2pflow/preprocess.hpp"

namespace i2pflow {

// One trained phase: model plus the preprocessing state fitted on that
// phase's own training data.
struct PhaseBundle {
  EnsembleModel model;
  PreprocessArtifacts artifacts;
  double threshold = 0.5;
  std::string positive_class_name;

  double score(const FlowRecord& record) const;
};

inline constexpr std::uint32_t kCascadeFormatVersion = 1;

struct CascadeModel {
  std::optional<PhaseBundle> phase1;  // positive = I2P
  std::optional<PhaseBundle> phase2;  // positive = Exfiltration
  std::uint32_t version = kCascadeFormatVersion;
  std::string created;     // left empty by deterministic writers
  std::string provenance;

  bool complete() const { return phase1.has_value() && phase2.has_value(); }
};

enum class AlertTier { None, Low, High };

const char* tier_name(AlertTier t);

struct AlertRecord {
  std::string flow_id;
  double p1_score = 0.0;
  std::optional<double> p2_score;  // absent whenever phase 1 gates the flow out
  AlertTier tier = AlertTier::None;
};

struct BatchSummary {
  std::size_t total = 0;
  std::size_t none = 0;
  std::size_t low = 0;
  std::size_t high = 0;
};

// Keeps I2P rows with FTP/P2P/Browsing activity; FTP and P2P become the
// positive Exfiltration class, Browsing the negative Legitimate class.
// Email/chat rows are excluded.
Dataset build_phase2_dataset(const Dataset& ds);

// Phase 1 gates phase 2: a flow at or below the phase-1 threshold gets tier
// None and no phase-2 score at all.
AlertRecord score_flow(const CascadeModel& cm, const FlowRecord& record, const std::string& flow_id = "");
std::pair<std::vector<AlertRecord>, BatchSummary> score_batch(const CascadeModel& cm, const Dataset& ds);

struct AlertVolumeProjection {
  double false_alerts_per_day = 0.0;
  double true_alerts_per_day = 0.0;
  double missed_flows_per_day = 0.0;
};

AlertVolumeProjection project_alert_volume(double fpr, double recall, double daily_flows, double i2p_fraction);

// Single versioned container: magic line, metadata, per-phase artifact and
// model blocks, trailing CRC-32 over everything above it. Round trips are
// score-exact.
std::string cascade_text(const CascadeModel& cm);
CascadeModel parse_cascade_text(const std::string& text, const std::string& origin);
void save_cascade(const CascadeModel& cm, const std::string& path);
CascadeModel load_cascade(const std::string& path);

std::string alerts_csv(const std::vector<AlertRecord>& records);
std::string summary_text(const BatchSummary& s);

}  // namespace i2pflow
