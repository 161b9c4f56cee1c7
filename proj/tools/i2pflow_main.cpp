// i2pflow — flow-based I2P detection and exfiltration triage toolkit.
//
// Subcommands: ingest, train, evaluate, score, report, synth.
// Everything that affects results lives in the config file; flags pick the
// command, paths, and an optional seed override.

#include <cstdio>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "i2pflow/commands.hpp"
#include "i2pflow/errors.hpp"

namespace {

struct CliArgs {
  std::string config;
  std::string out_dir;
  int phase = 1;
  std::string model = "forest";
  long long seed = -1;  // <0: keep config value
};

i2pflow::RunConfig load_config(const CliArgs& args) {
  if (args.config.empty()) throw i2pflow::ConfigError("--config is required for this command");
  i2pflow::RunConfig cfg = i2pflow::parse_run_config(args.config);
  if (args.seed >= 0) cfg.seed = static_cast<std::uint64_t>(args.seed);
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"flow-based I2P detection and exfiltration triage"};
  app.require_subcommand(1);

  CliArgs args;

  const auto add_common = [&](CLI::App* cmd, bool needs_config) {
    auto* config_opt = cmd->add_option("--config", args.config, "run config file");
    if (needs_config) config_opt->required();
    cmd->add_option("--out", args.out_dir, "output directory")->required();
    cmd->add_option("--seed", args.seed, "override the config seed");
  };

  auto* ingest = app.add_subcommand("ingest", "load a flow file and write class/activity summaries");
  add_common(ingest, true);

  auto* train = app.add_subcommand("train", "run the full preprocessing + fit pipeline for one phase");
  add_common(train, true);
  train->add_option("--phase", args.phase, "1 = detection, 2 = behavior")->check(CLI::Range(1, 2));
  train->add_option("--model", args.model, "forest | gbt-xgb | gbt-lgbm");

  auto* evaluate = app.add_subcommand("evaluate", "score a trained bundle against labeled flows");
  add_common(evaluate, true);

  auto* score = app.add_subcommand("score", "run the two-phase cascade over flows and emit alerts");
  add_common(score, true);

  auto* report = app.add_subcommand("report", "render a markdown report from a run directory");
  report->add_option("--out", args.out_dir, "run directory holding evaluation outputs")->required();

  auto* synth = app.add_subcommand("synth", "generate a synthetic labeled flow dataset with oracle");
  add_common(synth, true);

  CLI11_PARSE(app, argc, argv);

  try {
    if (ingest->parsed()) {
      i2pflow::cmd_ingest(load_config(args), args.out_dir);
    } else if (train->parsed()) {
      const auto kind = i2pflow::model_kind_from_name(args.model);
      if (!kind) throw i2pflow::ConfigError("unknown --model `" + args.model + "`");
      i2pflow::cmd_train(load_config(args), args.phase, *kind, args.out_dir);
    } else if (evaluate->parsed()) {
      i2pflow::cmd_evaluate(load_config(args), args.out_dir);
    } else if (score->parsed()) {
      i2pflow::cmd_score(load_config(args), args.out_dir);
    } else if (report->parsed()) {
      i2pflow::cmd_report(args.out_dir);
    } else if (synth->parsed()) {
      i2pflow::cmd_synth(load_config(args), args.out_dir);
    }
  } catch (const i2pflow::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return i2pflow::kExitConfig;
  } catch (const i2pflow::SchemaError& e) {
    std::cerr << "schema error: " << e.what() << "\n";
    return i2pflow::kExitSchema;
  } catch (const i2pflow::IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return i2pflow::kExitIo;
  } catch (const i2pflow::TrainError& e) {
    std::cerr << "training error: " << e.what() << "\n";
    return i2pflow::kExitTrain;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return i2pflow::kExitOk;
}
