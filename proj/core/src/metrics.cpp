#include "adarand/metrics.hpp"

#include <sstream>

#include "adarand/errors.hpp"
#include "adarand/text_io.hpp"

namespace adarand {
namespace {

std::string opt_field(const std::optional<double>& v) {
  return v.has_value() ? format_double(*v) : std::string();
}

std::optional<double> parse_opt(const std::string& field, std::size_t line) {
  if (field.empty()) return std::nullopt;
  double v = 0.0;
  if (!parse_double(field, v)) {
    throw ParseError("metrics: non-numeric field '" + field + "'", line);
  }
  return v;
}

}  // namespace

const char* const kMetricsCsvHeader =
    "epoch,train_loss,train_accuracy,val_accuracy,test_accuracy,loss_cls,loss_reg,loss_ada,"
    "feature_norm,entropy,cond_entropy,mutual_info,ce_grad_norm";

std::string metrics_to_csv(const std::vector<MetricsRow>& rows) {
  std::string out = kMetricsCsvHeader;
  out += '\n';
  for (const MetricsRow& r : rows) {
    out += std::to_string(r.epoch);
    out += ',' + format_double(r.train_loss);
    out += ',' + format_double(r.train_accuracy);
    out += ',' + opt_field(r.val_accuracy);
    out += ',' + opt_field(r.test_accuracy);
    out += ',' + format_double(r.loss_cls);
    out += ',' + format_double(r.loss_reg);
    out += ',' + opt_field(r.loss_ada);
    if (r.diag.has_value()) {
      out += ',' + format_double(r.diag->mean_feature_norm);
      out += ',' + format_double(r.diag->entropy);
      out += ',' + format_double(r.diag->cond_entropy);
      out += ',' + format_double(r.diag->mutual_info);
      out += ',' + format_double(r.diag->mean_ce_grad_norm);
    } else {
      out += ",,,,,";
    }
    out += '\n';
  }
  return out;
}

std::vector<MetricsRow> metrics_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kMetricsCsvHeader) {
    throw ParseError("metrics: unexpected header", 1);
  }
  std::vector<MetricsRow> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::string cur;
    for (char ch : line) {
      if (ch == ',') {
        fields.push_back(cur);
        cur.clear();
      } else {
        cur += ch;
      }
    }
    fields.push_back(cur);
    if (fields.size() != 13) {
      throw ParseError("metrics: expected 13 fields", line_no);
    }
    MetricsRow r;
    long long epoch = 0;
    if (!parse_int(fields[0], epoch) || epoch < 0) {
      throw ParseError("metrics: bad epoch field", line_no);
    }
    r.epoch = static_cast<std::size_t>(epoch);
    r.train_loss = parse_opt(fields[1], line_no).value_or(0.0);
    r.train_accuracy = parse_opt(fields[2], line_no).value_or(0.0);
    r.val_accuracy = parse_opt(fields[3], line_no);
    r.test_accuracy = parse_opt(fields[4], line_no);
    r.loss_cls = parse_opt(fields[5], line_no).value_or(0.0);
    r.loss_reg = parse_opt(fields[6], line_no).value_or(0.0);
    r.loss_ada = parse_opt(fields[7], line_no);
    if (!fields[8].empty()) {
      DiagnosticsReport diag;
      diag.mean_feature_norm = parse_opt(fields[8], line_no).value_or(0.0);
      diag.entropy = parse_opt(fields[9], line_no).value_or(0.0);
      diag.cond_entropy = parse_opt(fields[10], line_no).value_or(0.0);
      diag.mutual_info = parse_opt(fields[11], line_no).value_or(0.0);
      diag.mean_ce_grad_norm = parse_opt(fields[12], line_no).value_or(0.0);
      r.diag = diag;
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace adarand
