#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "adarand/config.hpp"
#include "adarand/errors.hpp"
#include "adarand/sweep.hpp"
#include "adarand/trainer.hpp"

namespace {

void emit_error(const std::string& type, const std::string& message) {
  nlohmann::json err;
  err["error"]["type"] = type;
  err["error"]["message"] = message;
  std::cerr << err.dump() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"adarand: a desk-scale fine-tuning laboratory"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::string checkpoint_path;
  std::string data_path;
  std::string axis;
  std::vector<std::string> values;
  int seed_replicates = 1;

  CLI::App* cmd_pretrain = app.add_subcommand("pretrain", "Train a source-task model from scratch");
  cmd_pretrain->add_option("--config", config_path, "Experiment config (JSON)")->required();
  cmd_pretrain->add_option("--out", out_dir, "Output directory")->required();

  CLI::App* cmd_finetune =
      app.add_subcommand("finetune", "Fine-tune a pretrained extractor on the target task");
  cmd_finetune->add_option("--config", config_path, "Experiment config (JSON)")->required();
  cmd_finetune->add_option("--pretrained", checkpoint_path, "Pretrained checkpoint")->required();
  cmd_finetune->add_option("--out", out_dir, "Output directory")->required();

  CLI::App* cmd_sweep = app.add_subcommand("sweep", "Run a hyperparameter sweep");
  cmd_sweep->add_option("--config", config_path, "Base experiment config (JSON)")->required();
  cmd_sweep->add_option("--axis", axis, "Sweep axis: lambda, alpha, fraction or kind")->required();
  cmd_sweep->add_option("--values", values, "Comma-separated axis values")
      ->required()
      ->delimiter(',');
  cmd_sweep->add_option("--seeds", seed_replicates, "Seed replicates per value")
      ->check(CLI::PositiveNumber);
  cmd_sweep->add_option("--out", out_dir, "Output directory")->required();

  CLI::App* cmd_diag = app.add_subcommand("diag", "Feature diagnostics for a checkpoint");
  cmd_diag->add_option("--checkpoint", checkpoint_path, "Model checkpoint")->required();
  cmd_diag->add_option("--data", data_path, "Dataset CSV")->required();
  cmd_diag->add_option("--out", out_dir, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      return app.exit(e);  // --help / --version
    }
    emit_error("usage", e.what());
    return 2;
  }

  try {
    if (cmd_pretrain->parsed()) {
      adarand::run_pretrain_cmd(adarand::load_config_file(config_path), out_dir);
    } else if (cmd_finetune->parsed()) {
      adarand::run_finetune_cmd(adarand::load_config_file(config_path), checkpoint_path, out_dir);
    } else if (cmd_sweep->parsed()) {
      adarand::run_sweep_cmd(adarand::load_config_file(config_path), axis, values,
                             seed_replicates, out_dir);
    } else if (cmd_diag->parsed()) {
      adarand::run_diag_cmd(checkpoint_path, data_path, out_dir);
    }
  } catch (const adarand::ParseError& e) {
    emit_error("parse", e.what());
    return 1;
  } catch (const adarand::ContractViolation& e) {
    emit_error("contract", e.what());
    return 1;
  } catch (const adarand::NumericError& e) {
    emit_error("numeric", e.what());
    return 1;
  } catch (const std::exception& e) {
    emit_error("internal", e.what());
    return 1;
  }
  return 0;
}
