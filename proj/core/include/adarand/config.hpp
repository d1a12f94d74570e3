#ifndef ADARAND_CONFIG_HPP
#define ADARAND_CONFIG_HPP

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "adarand/dataset.hpp"
#include "adarand/regularizer.hpp"

namespace adarand {

struct OptimizerConfig {
  double learning_rate = 0.01;
  double momentum = 0.9;
  bool nesterov = true;
  std::size_t batch_size = 16;
  std::size_t epochs = 60;
  std::vector<std::size_t> lr_milestones{20, 40};
  double lr_decay = 0.1;
};

/// One explicit seed per named stream; no ambient randomness anywhere.
struct SeedConfig {
  std::uint64_t init = 1;
  std::uint64_t shuffle = 2;
  std::uint64_t noise = 3;
  std::uint64_t data = 4;
};

struct ModelConfig {
  std::vector<std::size_t> hidden_widths{32, 32};
  std::size_t feature_dim = 8;
};

struct ExperimentConfig {
  DatasetSpec dataset;
  ModelConfig model;
  RegSpec reg;
  OptimizerConfig optimizer;
  SeedConfig seeds;
  std::size_t pretrain_epochs = 0;  // 0 -> optimizer.epochs
  bool export_pca = false;
  std::string output_dir;

  std::size_t effective_pretrain_epochs() const {
    return pretrain_epochs == 0 ? optimizer.epochs : pretrain_epochs;
  }
};

/// Strict parse: unknown keys, wrong types, and out-of-range values are
/// all errors. Absent keys take the documented defaults.
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config_file(const std::filesystem::path& path);

/// The default scarce-target synthetic benchmark: 10 classes, 20 training
/// samples per class after the 9:1 split, a related-but-rotated source
/// task with ample data. The regularizer kind is AdaRand; sweeps swap it.
ExperimentConfig default_benchmark_config();

/// Full echo of the configuration with every default made explicit;
/// byte-stable for identical configs.
std::string resolved_config_json(const ExperimentConfig& config);

}  // namespace adarand

#endif
