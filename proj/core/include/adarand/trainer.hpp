#ifndef ADARAND_TRAINER_HPP
#define ADARAND_TRAINER_HPP

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "adarand/checkpoint.hpp"
#include "adarand/config.hpp"
#include "adarand/dataset.hpp"
#include "adarand/metrics.hpp"
#include "adarand/model.hpp"
#include "adarand/regularizer.hpp"

namespace adarand {

struct PretrainResult {
  ModelState model;
  std::vector<MetricsRow> metrics;
};

/// Trains a fresh model on the source task with plain fine-tuning
/// (config.reg.kind must be FT). The returned extractor stands in for a
/// large-scale pretrained backbone; its head is meant to be discarded.
PretrainResult pretrain(const ExperimentConfig& config);

struct FinetuneResult {
  ModelState model;  // best-validation snapshot
  std::optional<ConditionalPrior> prior;
  std::vector<MetricsRow> metrics;
  std::size_t best_epoch = 0;
  std::optional<double> best_val_accuracy;
  std::optional<double> test_accuracy;  // evaluated on the selected snapshot
  std::vector<std::uint64_t> epoch_param_hash;
};

/// The full fine-tuning loop: per epoch a seeded shuffle, then per batch
/// one reference draw, one joint model step on ce + lambda * penalty, and
/// the prior hook; per epoch validation, diagnostics on a fixed seeded
/// subset, and best-validation model selection.
FinetuneResult finetune(const ExperimentConfig& config, const ModelState& pretrained);

/// File-emitting wrappers used by the CLI. Every run directory receives
/// config.resolved.json, metrics.csv and summary.json; reruns with the
/// same config produce byte-identical files.
void run_pretrain_cmd(const ExperimentConfig& config, const std::filesystem::path& out_dir);
void run_finetune_cmd(const ExperimentConfig& config, const std::filesystem::path& checkpoint,
                      const std::filesystem::path& out_dir);
void run_diag_cmd(const std::filesystem::path& checkpoint, const std::filesystem::path& data_csv,
                  const std::filesystem::path& out_dir);

/// pc1,pc2,label rows for the given features.
std::string pca_csv(const RealMatrix& features, std::span<const int> labels);

}  // namespace adarand

#endif
