#pragma once

#include <string>

#include "i2pflow/config.hpp"

namespace i2pflow {

// Command bodies shared by the CLI binary and the test suites. Each writes
// its outputs under `out_dir` and throws typed errors (ConfigError, IoError,
// SchemaError, TrainError) that the CLI maps onto exit codes. Every output
// except run_meta.txt is byte-deterministic for identical inputs and seed.

void cmd_ingest(const RunConfig& cfg, const std::string& out_dir);
void cmd_train(const RunConfig& cfg, int phase, ModelKind model, const std::string& out_dir);
void cmd_evaluate(const RunConfig& cfg, const std::string& out_dir);
void cmd_score(const RunConfig& cfg, const std::string& out_dir);
void cmd_report(const std::string& run_dir);
void cmd_synth(const RunConfig& cfg, const std::string& out_dir);

// Bundle filename used by cmd_train, e.g. "phase1_forest.bundle".
std::string bundle_filename(int phase, ModelKind model);

}  // namespace i2pflow
