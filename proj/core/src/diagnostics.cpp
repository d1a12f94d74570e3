#include "adarand/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "adarand/errors.hpp"
#include "adarand/rng.hpp"

namespace adarand {
namespace {

constexpr double kDistanceFloor = 1e-12;

RealMatrix take_rows(const RealMatrix& m, const std::vector<std::size_t>& rows) {
  RealMatrix out(rows.size(), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) out(i, j) = m(rows[i], j);
  }
  return out;
}

double pairwise_entropy(const RealMatrix& x) {
  const std::size_t n = x.rows();
  const std::size_t d = x.cols();
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      double dist2 = 0.0;
      for (std::size_t c = 0; c < d; ++c) {
        const double dv = x(i, c) - x(j, c);
        dist2 += dv * dv;
      }
      sum += std::log(std::max(dist2, kDistanceFloor));
    }
  }
  // Ordered pairs: each unordered pair contributes twice.
  return static_cast<double>(d) * 2.0 * sum / (static_cast<double>(n) * (n - 1.0));
}

struct PowerIterOutcome {
  std::vector<double> eigvec;
  double eigval = 0.0;
};

PowerIterOutcome power_iteration(const RealMatrix& cov, double scale, double tolerance,
                                 std::size_t max_iters, std::size_t component) {
  const std::size_t d = cov.rows();
  // Deterministic pseudo-random start, re-derived per component: the
  // deflated matrix annihilates the span of the previous start's
  // projection, so reusing one start would stall on tied eigenvalues.
  RngStream start_rng(0x50CA2ULL + component, StreamId::Init);
  std::vector<double> v(d);
  for (double& e : v) e = 0.1 + start_rng.next_double();
  double norm = std::sqrt(squared_norm(v));
  for (double& e : v) e /= norm;

  const double zero_floor = std::max(scale, 1.0) * 1e-14;
  std::vector<double> w(d);
  for (std::size_t iter = 1; iter <= max_iters; ++iter) {
    for (std::size_t i = 0; i < d; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < d; ++j) s += cov(i, j) * v[j];
      w[i] = s;
    }
    const double wn = std::sqrt(squared_norm(w));
    if (wn <= zero_floor) {
      // Remaining spectrum is numerically zero; v spans a null direction.
      return {v, 0.0};
    }
    double diff = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      w[i] /= wn;
      const double dv = w[i] - v[i];
      diff += dv * dv;
    }
    v = w;
    if (std::sqrt(diff) < tolerance) {
      double rayleigh = 0.0;
      for (std::size_t i = 0; i < d; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < d; ++j) s += cov(i, j) * v[j];
        rayleigh += v[i] * s;
      }
      return {v, std::max(rayleigh, 0.0)};
    }
  }
  throw NumericError("pca2: power iteration did not converge within " +
                     std::to_string(max_iters) + " iterations");
}

void fix_sign(std::vector<double>& v) {
  for (double e : v) {
    if (std::abs(e) > 1e-12) {
      if (e < 0.0) {
        for (double& x : v) x = -x;
      }
      return;
    }
  }
}

}  // namespace

double entropy_estimate(const RealMatrix& features, std::size_t n_cap,
                        std::uint64_t subsample_seed) {
  if (features.rows() < 2) {
    throw ContractViolation("entropy_estimate: need at least 2 samples");
  }
  if (features.rows() <= n_cap) {
    return pairwise_entropy(features);
  }
  RngStream rng(subsample_seed, StreamId::Data);
  const std::vector<std::size_t> rows = rng.sample_without_replacement(features.rows(), n_cap);
  return pairwise_entropy(take_rows(features, rows));
}

double conditional_entropy(const RealMatrix& features, std::span<const int> labels,
                           std::size_t class_count, std::size_t n_cap,
                           std::uint64_t subsample_seed) {
  if (labels.size() != features.rows()) {
    throw ContractViolation("conditional_entropy: label count mismatch");
  }
  std::vector<std::vector<std::size_t>> by_class(class_count);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int y = labels[i];
    if (y < 0 || static_cast<std::size_t>(y) >= class_count) {
      throw ContractViolation("conditional_entropy: label out of range");
    }
    by_class[static_cast<std::size_t>(y)].push_back(i);
  }
  double weighted = 0.0;
  std::size_t contributing = 0;
  for (const auto& rows : by_class) {
    if (rows.size() < 2) continue;
    contributing += rows.size();
    weighted += static_cast<double>(rows.size()) *
                entropy_estimate(take_rows(features, rows), n_cap, subsample_seed);
  }
  if (contributing == 0) {
    throw ContractViolation("conditional_entropy: no class has at least 2 samples");
  }
  return weighted / static_cast<double>(contributing);
}

GradNormPair ce_grad_norm(const HeadMatrix& head, const RealMatrix& features,
                          std::span<const int> labels) {
  const std::size_t batch = features.rows();
  if (batch == 0) {
    throw ContractViolation("ce_grad_norm: empty batch");
  }
  GradNormPair pair;
  RealMatrix row(1, features.cols());
  for (std::size_t i = 0; i < batch; ++i) {
    for (std::size_t j = 0; j < features.cols(); ++j) row(0, j) = features(i, j);
    const int label = labels[i];

    // Direct route: the analytic head gradient of the per-sample loss.
    const CeResult ce = ce_loss(head, row, std::span<const int>(&label, 1));
    pair.direct += squared_frobenius(ce.grad_head);

    // Identity route: sum_k (softmax[k] - delta_yk)^2 * ||g||^2.
    const RealMatrix z = logits(head, row);
    double max_logit = z(0, 0);
    for (std::size_t k = 1; k < z.cols(); ++k) max_logit = std::max(max_logit, z(0, k));
    double sum_exp = 0.0;
    for (std::size_t k = 0; k < z.cols(); ++k) sum_exp += std::exp(z(0, k) - max_logit);
    const double lse = max_logit + std::log(sum_exp);
    double residual = 0.0;
    for (std::size_t k = 0; k < z.cols(); ++k) {
      const double p = std::exp(z(0, k) - lse);
      const double delta = static_cast<std::size_t>(label) == k ? 1.0 : 0.0;
      residual += (p - delta) * (p - delta);
    }
    pair.identity += residual * squared_norm(row.values());
  }
  pair.direct /= static_cast<double>(batch);
  pair.identity /= static_cast<double>(batch);
  return pair;
}

double mean_squared_feature_norm(const RealMatrix& features) {
  if (features.rows() == 0) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < features.rows(); ++i) sum += squared_norm(features.row(i));
  return sum / static_cast<double>(features.rows());
}

Pca2Result pca2(const RealMatrix& features) {
  const std::size_t n = features.rows();
  const std::size_t d = features.cols();
  if (n < 3 || d < 2) {
    throw ContractViolation("pca2: need at least 3 samples and 2 dimensions");
  }

  RealMatrix centered = features;
  std::vector<double> mean(d, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) mean[j] += features(i, j);
  }
  for (double& m : mean) m /= static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) centered(i, j) -= mean[j];
  }

  RealMatrix cov = matmul(transpose(centered), centered);
  cov *= 1.0 / static_cast<double>(n - 1);
  double scale = 0.0;
  for (double v : cov.values()) scale = std::max(scale, std::abs(v));

  Pca2Result result;
  result.projection = RealMatrix(n, 2);
  RealMatrix deflated = cov;
  std::vector<std::vector<double>> eigvecs;
  for (int comp = 0; comp < 2; ++comp) {
    PowerIterOutcome outcome =
        power_iteration(deflated, scale, 1e-10, 1000, static_cast<std::size_t>(comp));
    fix_sign(outcome.eigvec);
    result.explained[comp] = outcome.eigval;
    for (std::size_t i = 0; i < deflated.rows(); ++i) {
      for (std::size_t j = 0; j < deflated.cols(); ++j) {
        deflated(i, j) -= outcome.eigval * outcome.eigvec[i] * outcome.eigvec[j];
      }
    }
    eigvecs.push_back(std::move(outcome.eigvec));
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (int comp = 0; comp < 2; ++comp) {
      result.projection(i, comp) = dot(centered.row(i), eigvecs[comp]);
    }
  }
  return result;
}

ScatterResult scatter_ratio(const RealMatrix& projection, std::span<const int> labels) {
  if (labels.size() != projection.rows()) {
    throw ContractViolation("scatter_ratio: label count mismatch");
  }
  int max_label = -1;
  for (int y : labels) {
    if (y < 0) throw ContractViolation("scatter_ratio: negative label");
    max_label = std::max(max_label, y);
  }
  const std::size_t class_count = static_cast<std::size_t>(max_label) + 1;
  if (class_count < 2) {
    throw ContractViolation("scatter_ratio: need at least 2 classes");
  }

  const std::size_t dims = projection.cols();
  std::vector<std::size_t> counts(class_count, 0);
  RealMatrix class_mean(class_count, dims);
  std::vector<double> global_mean(dims, 0.0);
  for (std::size_t i = 0; i < projection.rows(); ++i) {
    const auto k = static_cast<std::size_t>(labels[i]);
    ++counts[k];
    for (std::size_t j = 0; j < dims; ++j) {
      class_mean(k, j) += projection(i, j);
      global_mean[j] += projection(i, j);
    }
  }
  for (std::size_t k = 0; k < class_count; ++k) {
    if (counts[k] == 0) {
      throw ContractViolation("scatter_ratio: class " + std::to_string(k) + " has no samples");
    }
    for (std::size_t j = 0; j < dims; ++j) class_mean(k, j) /= static_cast<double>(counts[k]);
  }
  for (double& g : global_mean) g /= static_cast<double>(projection.rows());

  double between = 0.0;
  for (std::size_t k = 0; k < class_count; ++k) {
    double db = 0.0;
    for (std::size_t j = 0; j < dims; ++j) {
      const double dv = class_mean(k, j) - global_mean[j];
      db += dv * dv;
    }
    between += static_cast<double>(counts[k]) * db;
  }
  double within = 0.0;
  for (std::size_t i = 0; i < projection.rows(); ++i) {
    const auto k = static_cast<std::size_t>(labels[i]);
    for (std::size_t j = 0; j < dims; ++j) {
      const double dv = projection(i, j) - class_mean(k, j);
      within += dv * dv;
    }
  }

  ScatterResult result;
  if (within == 0.0) {
    result.ratio = std::numeric_limits<double>::max();
    result.degenerate = true;
    return result;
  }
  result.ratio = between / within;
  return result;
}

DiagnosticsReport compute_report(const HeadMatrix& head, const RealMatrix& features,
                                 std::span<const int> labels, std::size_t class_count,
                                 std::size_t n_cap, std::uint64_t subsample_seed) {
  DiagnosticsReport report;
  report.mean_feature_norm = mean_squared_feature_norm(features);
  report.entropy = entropy_estimate(features, n_cap, subsample_seed);
  report.cond_entropy = conditional_entropy(features, labels, class_count, n_cap, subsample_seed);
  report.mutual_info = report.entropy - report.cond_entropy;
  report.mean_ce_grad_norm = ce_grad_norm(head, features, labels).direct;
  return report;
}

}  // namespace adarand
