#include "adarand/prior.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "adarand/errors.hpp"

namespace adarand {
namespace {

constexpr double kNormEps = 1e-12;

void check_prior_labels(std::span<const int> labels, std::size_t batch, std::size_t class_count,
                        const std::string& context) {
  if (labels.size() != batch) {
    throw ContractViolation(context + ": label count does not match row count");
  }
  for (int y : labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= class_count) {
      throw ContractViolation(context + ": label " + std::to_string(y) + " out of range [0," +
                              std::to_string(class_count) + ")");
    }
  }
}

// d/du and d/dv of cosine_distance(u, v).
void cosine_distance_grad(std::span<const double> u, std::span<const double> v,
                          std::span<double> grad_u, std::span<double> grad_v) {
  const double nu = std::sqrt(squared_norm(u));
  const double nv = std::sqrt(squared_norm(v));
  const double a = nu + kNormEps;
  const double b = nv + kNormEps;
  const double s = dot(u, v);
  for (std::size_t i = 0; i < u.size(); ++i) {
    double gu = -v[i] / (a * b);
    if (nu > 0.0) gu += s * u[i] / (nu * a * a * b);
    grad_u[i] += gu;
    double gv = -u[i] / (a * b);
    if (nv > 0.0) gv += s * v[i] / (nv * a * b * b);
    grad_v[i] += gv;
  }
}

void distance_grad(DistanceKind kind, std::span<const double> u, std::span<const double> v,
                   std::span<double> grad_u, std::span<double> grad_v) {
  if (kind == DistanceKind::Cosine) {
    cosine_distance_grad(u, v, grad_u, grad_v);
    return;
  }
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double d = 2.0 * (u[i] - v[i]);
    grad_u[i] += d;
    grad_v[i] -= d;
  }
}

}  // namespace

ConditionalPrior init_from_features(const RealMatrix& features, std::span<const int> labels,
                                    std::size_t class_count, double alpha, double xi,
                                    double variance_floor, DistanceKind distance) {
  if (class_count == 0) {
    throw ContractViolation("init_from_features: class_count must be >= 1");
  }
  check_prior_labels(labels, features.rows(), class_count, "init_from_features");

  const std::size_t d = features.cols();
  std::vector<std::size_t> counts(class_count, 0);
  for (int y : labels) ++counts[static_cast<std::size_t>(y)];

  std::string missing;
  for (std::size_t k = 0; k < class_count; ++k) {
    if (counts[k] == 0) {
      if (!missing.empty()) missing += ", ";
      missing += std::to_string(k);
    }
  }
  if (!missing.empty()) {
    throw ContractViolation("init_from_features: classes with no samples: " + missing);
  }

  ConditionalPrior prior;
  prior.mu = RealMatrix(class_count, d);
  prior.sigma2 = RealMatrix(class_count, d);
  prior.alpha = alpha;
  prior.xi = xi;
  prior.distance = distance;

  for (std::size_t i = 0; i < features.rows(); ++i) {
    const auto k = static_cast<std::size_t>(labels[i]);
    for (std::size_t j = 0; j < d; ++j) prior.mu(k, j) += features(i, j);
  }
  for (std::size_t k = 0; k < class_count; ++k) {
    for (std::size_t j = 0; j < d; ++j) prior.mu(k, j) /= static_cast<double>(counts[k]);
  }
  for (std::size_t i = 0; i < features.rows(); ++i) {
    const auto k = static_cast<std::size_t>(labels[i]);
    for (std::size_t j = 0; j < d; ++j) {
      const double dev = features(i, j) - prior.mu(k, j);
      prior.sigma2(k, j) += dev * dev;
    }
  }
  for (std::size_t k = 0; k < class_count; ++k) {
    for (std::size_t j = 0; j < d; ++j) {
      prior.sigma2(k, j) = std::max(prior.sigma2(k, j) / static_cast<double>(counts[k]),
                                    variance_floor);
    }
  }
  prior.mu_bar = prior.mu;
  return prior;
}

RealMatrix sample_reference(const ConditionalPrior& prior, std::span<const int> labels,
                            RngStream& noise) {
  check_prior_labels(labels, labels.size(), prior.class_count(), "sample_reference");
  const std::size_t d = prior.feature_dim();
  RealMatrix mu_rows(labels.size(), d);
  RealMatrix sigma2_rows(labels.size(), d);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto k = static_cast<std::size_t>(labels[i]);
    for (std::size_t j = 0; j < d; ++j) {
      mu_rows(i, j) = prior.mu(k, j);
      sigma2_rows(i, j) = prior.sigma2(k, j);
    }
  }
  return gaussian_sample(noise, mu_rows, sigma2_rows);
}

void ema_update(ConditionalPrior& prior, const RealMatrix& features,
                std::span<const int> labels) {
  check_prior_labels(labels, features.rows(), prior.class_count(), "ema_update");
  if (features.cols() != prior.feature_dim()) {
    throw ContractViolation("ema_update: feature dim mismatch");
  }
  if (prior.alpha == 1.0) return;  // past-only endpoint: mu_bar frozen

  const std::size_t d = prior.feature_dim();
  std::vector<std::size_t> counts(prior.class_count(), 0);
  RealMatrix sums(prior.class_count(), d);
  for (std::size_t i = 0; i < features.rows(); ++i) {
    const auto k = static_cast<std::size_t>(labels[i]);
    ++counts[k];
    for (std::size_t j = 0; j < d; ++j) sums(k, j) += features(i, j);
  }
  for (std::size_t k = 0; k < prior.class_count(); ++k) {
    if (counts[k] == 0) continue;  // EMA update skipped for absent classes
    for (std::size_t j = 0; j < d; ++j) {
      const double batch_mean = sums(k, j) / static_cast<double>(counts[k]);
      prior.mu_bar(k, j) = prior.alpha * prior.mu_bar(k, j) + (1.0 - prior.alpha) * batch_mean;
    }
  }
}

double cosine_distance(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) {
    throw ContractViolation("cosine_distance: lengths differ");
  }
  const double a = std::sqrt(squared_norm(u)) + kNormEps;
  const double b = std::sqrt(squared_norm(v)) + kNormEps;
  return 1.0 - dot(u, v) / (a * b);
}

double mean_distance(DistanceKind kind, std::span<const double> u, std::span<const double> v) {
  if (kind == DistanceKind::Cosine) return cosine_distance(u, v);
  double s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double d = u[i] - v[i];
    s += d * d;
  }
  return s;
}

double intra_loss(const ConditionalPrior& prior) {
  const std::size_t k_count = prior.class_count();
  double sum = 0.0;
  for (std::size_t k = 0; k < k_count; ++k) {
    sum += mean_distance(prior.distance, prior.mu.row(k), prior.mu_bar.row(k));
  }
  return sum / static_cast<double>(k_count);
}

double inter_loss(const ConditionalPrior& prior) {
  const std::size_t k_count = prior.class_count();
  if (k_count < 2) return 0.0;
  double sum = 0.0;
  for (std::size_t k = 0; k < k_count; ++k) {
    for (std::size_t l = 0; l < k_count; ++l) {
      if (l == k) continue;
      sum += mean_distance(prior.distance, prior.mu.row(k), prior.mu.row(l));
    }
  }
  return -sum / static_cast<double>(k_count * (k_count - 1));
}

double ada_objective(const ConditionalPrior& prior) {
  return intra_loss(prior) + inter_loss(prior);
}

RealMatrix ada_gradient(const ConditionalPrior& prior) {
  const std::size_t k_count = prior.class_count();
  const std::size_t d = prior.feature_dim();
  RealMatrix grad(k_count, d);
  std::vector<double> discard(d, 0.0);

  const double intra_coeff = 1.0 / static_cast<double>(k_count);
  RealMatrix intra_grad(k_count, d);
  for (std::size_t k = 0; k < k_count; ++k) {
    // mu_bar is a constant in this objective; its gradient is discarded.
    std::fill(discard.begin(), discard.end(), 0.0);
    distance_grad(prior.distance, prior.mu.row(k), prior.mu_bar.row(k), intra_grad.row(k),
                  discard);
  }
  for (std::size_t i = 0; i < grad.values().size(); ++i) {
    grad.values()[i] += intra_coeff * intra_grad.values()[i];
  }

  if (k_count >= 2) {
    const double inter_coeff = -1.0 / static_cast<double>(k_count * (k_count - 1));
    RealMatrix inter_grad(k_count, d);
    for (std::size_t k = 0; k < k_count; ++k) {
      for (std::size_t l = 0; l < k_count; ++l) {
        if (l == k) continue;
        distance_grad(prior.distance, prior.mu.row(k), prior.mu.row(l), inter_grad.row(k),
                      inter_grad.row(l));
      }
    }
    for (std::size_t i = 0; i < grad.values().size(); ++i) {
      grad.values()[i] += inter_coeff * inter_grad.values()[i];
    }
  }
  return grad;
}

void adaptive_step(ConditionalPrior& prior) {
  if (prior.xi == 0.0) return;
  RealMatrix grad = ada_gradient(prior);
  grad.validate_finite("adaptive_step gradient");
  for (std::size_t i = 0; i < prior.mu.values().size(); ++i) {
    prior.mu.values()[i] -= prior.xi * grad.values()[i];
  }
}

}  // namespace adarand
