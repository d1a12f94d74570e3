#ifndef ADARAND_METRICS_HPP
#define ADARAND_METRICS_HPP

#include <optional>
#include <string>
#include <vector>

#include "adarand/diagnostics.hpp"

namespace adarand {

/// One epoch of training diagnostics. The CSV schema is identical across
/// regularizer kinds; fields a kind does not produce stay empty.
struct MetricsRow {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double train_accuracy = 0.0;
  std::optional<double> val_accuracy;
  std::optional<double> test_accuracy;
  double loss_cls = 0.0;
  double loss_reg = 0.0;  // already weighted by lambda
  std::optional<double> loss_ada;
  // Absent when the diagnostics subset cannot support the estimators
  // (fewer than 2 samples, or no class with 2).
  std::optional<DiagnosticsReport> diag;
};

extern const char* const kMetricsCsvHeader;

std::string metrics_to_csv(const std::vector<MetricsRow>& rows);
std::vector<MetricsRow> metrics_from_csv(const std::string& text);

}  // namespace adarand

#endif
