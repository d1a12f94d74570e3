#ifndef ADARAND_SWEEP_HPP
#define ADARAND_SWEEP_HPP

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "adarand/config.hpp"
#include "adarand/metrics.hpp"
#include "adarand/trainer.hpp"

namespace adarand {

enum class SweepAxis { Lambda, Alpha, Fraction, Kind };

SweepAxis parse_sweep_axis(const std::string& name);
std::string sweep_axis_name(SweepAxis axis);

/// Returns the base config with one axis value substituted.
ExperimentConfig apply_axis_value(const ExperimentConfig& base, SweepAxis axis,
                                  const std::string& value);

/// Replicate 0 runs on the base seeds; later replicates re-derive the
/// training streams (init/shuffle/noise) and keep the data seed fixed, so
/// every replicate sees the same dataset under fresh training randomness.
SeedConfig replicate_seeds(const SeedConfig& base, int replicate);

struct SweepCell {
  std::string value;
  int replicate = 0;
  bool ok = false;
  std::string error;
  std::optional<double> test_accuracy;
  std::optional<double> best_val_accuracy;
  std::size_t best_epoch = 0;
  std::vector<MetricsRow> metrics;
  ModelState model;  // best-validation snapshot, for in-process analysis
};

struct SweepSummaryRow {
  std::string value;
  int runs_ok = 0;
  int runs_failed = 0;
  double test_acc_mean = 0.0;
  double test_acc_std = 0.0;
  double val_acc_mean = 0.0;
  double val_acc_std = 0.0;
  double feature_norm_mean = 0.0;
  double entropy_mean = 0.0;
  double mutual_info_mean = 0.0;
  double ce_grad_norm_mean = 0.0;
};

struct SweepResult {
  SweepAxis axis = SweepAxis::Lambda;
  std::vector<std::string> values;
  int seed_replicates = 1;
  std::vector<SweepCell> cells;  // ordered by (value index, replicate)
  std::vector<SweepSummaryRow> summary;
};

/// One pretrain per replicate, shared across axis values; independent
/// fine-tuning cells may run concurrently. A failing cell records its
/// error and the sweep completes the remaining cells.
SweepResult run_sweep(const ExperimentConfig& base, SweepAxis axis,
                      const std::vector<std::string>& values, int seed_replicates);

std::string sweep_summary_csv(const SweepResult& result);

/// CLI wrapper: writes config.resolved.json, per-cell run directories and
/// sweep_summary.csv under out_dir.
void run_sweep_cmd(const ExperimentConfig& base, const std::string& axis,
                   const std::vector<std::string>& values, int seed_replicates,
                   const std::filesystem::path& out_dir);

}  // namespace adarand

#endif
