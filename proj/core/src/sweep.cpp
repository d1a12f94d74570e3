#include "adarand/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <thread>

#include <json.hpp>

#include "adarand/errors.hpp"
#include "adarand/rng.hpp"
#include "adarand/text_io.hpp"

namespace adarand {
namespace {

using nlohmann::json;

double parse_numeric_value(const std::string& value, const std::string& axis) {
  double v = 0.0;
  if (!parse_double(value, v)) {
    throw ContractViolation("sweep: value '" + value + "' on axis " + axis + " is not numeric");
  }
  return v;
}

void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn) {
  const unsigned workers =
      std::min<unsigned>(std::max(1u, std::thread::hardware_concurrency()),
                         static_cast<unsigned>(count));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      while (true) {
        const std::size_t i = next.fetch_add(1);
        if (i >= count) return;
        fn(i);
      }
    });
  }
  for (std::thread& t : pool) t.join();
}

struct Stat {
  double mean = 0.0;
  double stddev = 0.0;
};

Stat mean_std(const std::vector<double>& xs) {
  Stat s;
  if (xs.empty()) return s;
  double sum = 0.0;
  for (double x : xs) sum += x;
  s.mean = sum / static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double sq = 0.0;
    for (double x : xs) sq += (x - s.mean) * (x - s.mean);
    s.stddev = std::sqrt(sq / static_cast<double>(xs.size() - 1));
  }
  return s;
}

}  // namespace

SweepAxis parse_sweep_axis(const std::string& name) {
  if (name == "lambda") return SweepAxis::Lambda;
  if (name == "alpha") return SweepAxis::Alpha;
  if (name == "fraction") return SweepAxis::Fraction;
  if (name == "kind") return SweepAxis::Kind;
  throw ContractViolation("sweep: unknown axis '" + name +
                          "' (expected lambda, alpha, fraction or kind)");
}

std::string sweep_axis_name(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::Lambda: return "lambda";
    case SweepAxis::Alpha: return "alpha";
    case SweepAxis::Fraction: return "fraction";
    case SweepAxis::Kind: return "kind";
  }
  return "unknown";
}

ExperimentConfig apply_axis_value(const ExperimentConfig& base, SweepAxis axis,
                                  const std::string& value) {
  ExperimentConfig config = base;
  switch (axis) {
    case SweepAxis::Lambda: {
      const double v = parse_numeric_value(value, "lambda");
      if (v < 0.0) throw ContractViolation("sweep: lambda must be >= 0");
      config.reg.lambda = v;
      break;
    }
    case SweepAxis::Alpha: {
      const double v = parse_numeric_value(value, "alpha");
      if (v < 0.0 || v > 1.0) throw ContractViolation("sweep: alpha must be in [0, 1]");
      config.reg.alpha = v;
      break;
    }
    case SweepAxis::Fraction: {
      const double v = parse_numeric_value(value, "fraction");
      if (!(v > 0.0) || v > 1.0) throw ContractViolation("sweep: fraction must be in (0, 1]");
      config.dataset.fraction = v;
      break;
    }
    case SweepAxis::Kind:
      config.reg.kind = parse_reg_kind(value);
      break;
  }
  return config;
}

SeedConfig replicate_seeds(const SeedConfig& base, int replicate) {
  if (replicate == 0) return base;
  const std::string tag = "replicate-" + std::to_string(replicate);
  SeedConfig seeds = base;
  seeds.init = derive_seed(base.init, tag);
  seeds.shuffle = derive_seed(base.shuffle, tag);
  seeds.noise = derive_seed(base.noise, tag);
  return seeds;  // data seed untouched: same dataset, fresh training randomness
}

SweepResult run_sweep(const ExperimentConfig& base, SweepAxis axis,
                      const std::vector<std::string>& values, int seed_replicates) {
  if (values.empty()) {
    throw ContractViolation("sweep: values must be non-empty");
  }
  if (seed_replicates < 1) {
    throw ContractViolation("sweep: seed replicates must be >= 1");
  }
  // Validate the axis values up front so a typo fails fast.
  for (const std::string& v : values) apply_axis_value(base, axis, v);

  SweepResult result;
  result.axis = axis;
  result.values = values;
  result.seed_replicates = seed_replicates;

  // One pretraining run per replicate, shared by every axis value.
  std::vector<ModelState> pretrained(static_cast<std::size_t>(seed_replicates));
  std::vector<std::string> pretrain_error(static_cast<std::size_t>(seed_replicates));
  parallel_for(static_cast<std::size_t>(seed_replicates), [&](std::size_t r) {
    ExperimentConfig config = base;
    config.seeds = replicate_seeds(base.seeds, static_cast<int>(r));
    config.reg = RegSpec{};  // pretraining is plain fine-tuning
    try {
      pretrained[r] = pretrain(config).model;
    } catch (const std::exception& e) {
      pretrain_error[r] = e.what();
    }
  });

  result.cells.resize(values.size() * static_cast<std::size_t>(seed_replicates));
  parallel_for(result.cells.size(), [&](std::size_t idx) {
    const std::size_t value_idx = idx / static_cast<std::size_t>(seed_replicates);
    const auto rep = static_cast<int>(idx % static_cast<std::size_t>(seed_replicates));
    SweepCell& cell = result.cells[idx];
    cell.value = values[value_idx];
    cell.replicate = rep;
    if (!pretrain_error[static_cast<std::size_t>(rep)].empty()) {
      cell.error = "pretrain failed: " + pretrain_error[static_cast<std::size_t>(rep)];
      return;
    }
    try {
      ExperimentConfig config = apply_axis_value(base, axis, cell.value);
      config.seeds = replicate_seeds(base.seeds, rep);
      FinetuneResult run = finetune(config, pretrained[static_cast<std::size_t>(rep)]);
      cell.ok = true;
      cell.test_accuracy = run.test_accuracy;
      cell.best_val_accuracy = run.best_val_accuracy;
      cell.best_epoch = run.best_epoch;
      cell.metrics = std::move(run.metrics);
      cell.model = std::move(run.model);
    } catch (const std::exception& e) {
      cell.error = e.what();
    }
  });

  for (std::size_t v = 0; v < values.size(); ++v) {
    SweepSummaryRow row;
    row.value = values[v];
    std::vector<double> test_accs;
    std::vector<double> val_accs;
    std::vector<double> norms;
    std::vector<double> entropies;
    std::vector<double> mis;
    std::vector<double> grad_norms;
    for (int r = 0; r < seed_replicates; ++r) {
      const SweepCell& cell =
          result.cells[v * static_cast<std::size_t>(seed_replicates) + static_cast<std::size_t>(r)];
      if (!cell.ok) {
        ++row.runs_failed;
        continue;
      }
      ++row.runs_ok;
      if (cell.test_accuracy.has_value()) test_accs.push_back(*cell.test_accuracy);
      if (cell.best_val_accuracy.has_value()) val_accs.push_back(*cell.best_val_accuracy);
      if (!cell.metrics.empty() && cell.metrics.back().diag.has_value()) {
        const DiagnosticsReport& final_diag = *cell.metrics.back().diag;
        norms.push_back(final_diag.mean_feature_norm);
        entropies.push_back(final_diag.entropy);
        mis.push_back(final_diag.mutual_info);
        grad_norms.push_back(final_diag.mean_ce_grad_norm);
      }
    }
    const Stat test_stat = mean_std(test_accs);
    const Stat val_stat = mean_std(val_accs);
    row.test_acc_mean = test_stat.mean;
    row.test_acc_std = test_stat.stddev;
    row.val_acc_mean = val_stat.mean;
    row.val_acc_std = val_stat.stddev;
    row.feature_norm_mean = mean_std(norms).mean;
    row.entropy_mean = mean_std(entropies).mean;
    row.mutual_info_mean = mean_std(mis).mean;
    row.ce_grad_norm_mean = mean_std(grad_norms).mean;
    result.summary.push_back(std::move(row));
  }
  return result;
}

std::string sweep_summary_csv(const SweepResult& result) {
  std::string out =
      "axis,value,runs_ok,runs_failed,test_acc_mean,test_acc_std,val_acc_mean,val_acc_std,"
      "feature_norm_mean,entropy_mean,mutual_info_mean,ce_grad_norm_mean\n";
  for (const SweepSummaryRow& row : result.summary) {
    out += sweep_axis_name(result.axis);
    out += ',' + row.value;
    out += ',' + std::to_string(row.runs_ok);
    out += ',' + std::to_string(row.runs_failed);
    out += ',' + format_double(row.test_acc_mean);
    out += ',' + format_double(row.test_acc_std);
    out += ',' + format_double(row.val_acc_mean);
    out += ',' + format_double(row.val_acc_std);
    out += ',' + format_double(row.feature_norm_mean);
    out += ',' + format_double(row.entropy_mean);
    out += ',' + format_double(row.mutual_info_mean);
    out += ',' + format_double(row.ce_grad_norm_mean);
    out += '\n';
  }
  return out;
}

void run_sweep_cmd(const ExperimentConfig& base, const std::string& axis,
                   const std::vector<std::string>& values, int seed_replicates,
                   const std::filesystem::path& out_dir) {
  const SweepAxis parsed_axis = parse_sweep_axis(axis);
  std::filesystem::create_directories(out_dir);
  ExperimentConfig effective = base;
  effective.output_dir = out_dir.string();
  write_text_file(out_dir / "config.resolved.json", resolved_config_json(effective));

  const SweepResult result = run_sweep(base, parsed_axis, values, seed_replicates);

  for (const SweepCell& cell : result.cells) {
    const std::filesystem::path cell_dir =
        out_dir / "cells" / (axis + "=" + cell.value) / ("rep" + std::to_string(cell.replicate));
    std::filesystem::create_directories(cell_dir);
    if (!cell.ok) {
      json err;
      err["error"]["type"] = "run";
      err["error"]["message"] = cell.error;
      write_text_file(cell_dir / "error.json", err.dump(2) + "\n");
      continue;
    }
    write_text_file(cell_dir / "metrics.csv", metrics_to_csv(cell.metrics));
    json summary;
    summary["command"] = "sweep-cell";
    summary["axis"] = axis;
    summary["value"] = cell.value;
    summary["replicate"] = cell.replicate;
    summary["best_epoch"] = cell.best_epoch;
    if (cell.best_val_accuracy.has_value()) {
      summary["best_val_accuracy"] = *cell.best_val_accuracy;
    }
    if (cell.test_accuracy.has_value()) {
      summary["test_accuracy"] = *cell.test_accuracy;
    }
    write_text_file(cell_dir / "summary.json", summary.dump(2) + "\n");
  }
  write_text_file(out_dir / "sweep_summary.csv", sweep_summary_csv(result));
}

}  // namespace adarand
