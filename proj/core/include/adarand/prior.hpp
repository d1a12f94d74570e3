#ifndef ADARAND_PRIOR_HPP
#define ADARAND_PRIOR_HPP

#include <span>

#include "adarand/matrix.hpp"
#include "adarand/rng.hpp"

namespace adarand {

/// Distance between mean vectors. Cosine is the default; squared
/// Euclidean is kept behind a config switch for ablations.
enum class DistanceKind { Cosine, SquaredEuclidean };

/// Class-conditional diagonal Gaussian prior. sigma2 is frozen after
/// initialization; only mu moves, and mu_bar tracks running feature means.
struct ConditionalPrior {
  RealMatrix mu;      // [K x d] class means, updated by adaptive_step
  RealMatrix sigma2;  // [K x d] class variances, never modified after init
  RealMatrix mu_bar;  // [K x d] running feature means (EMA)
  double alpha = 0.5; // EMA decay on the past running mean
  double xi = 0.1;    // step size for the adaptive mean update
  DistanceKind distance = DistanceKind::Cosine;

  std::size_t class_count() const { return mu.rows(); }
  std::size_t feature_dim() const { return mu.cols(); }
};

inline constexpr double kVarianceFloor = 1e-4;

/// Class-wise mean and population variance of the given features, with
/// each variance entry floored at `variance_floor`; mu_bar starts at mu.
/// Throws ContractViolation listing any class with no samples.
ConditionalPrior init_from_features(const RealMatrix& features, std::span<const int> labels,
                                    std::size_t class_count, double alpha, double xi,
                                    double variance_floor = kVarianceFloor,
                                    DistanceKind distance = DistanceKind::Cosine);

/// Row i is a draw from the diagonal Gaussian of class labels[i].
RealMatrix sample_reference(const ConditionalPrior& prior, std::span<const int> labels,
                            RngStream& noise);

/// EMA update of mu_bar from the batch's per-class feature means.
/// Classes absent from the batch are skipped (rows bit-identical).
void ema_update(ConditionalPrior& prior, const RealMatrix& features, std::span<const int> labels);

/// 1 - u.v / ((||u|| + eps)(||v|| + eps)); zero vectors are safe.
double cosine_distance(std::span<const double> u, std::span<const double> v);
double mean_distance(DistanceKind kind, std::span<const double> u, std::span<const double> v);

/// Mean distance between prior means and running means.
double intra_loss(const ConditionalPrior& prior);
/// Negated mean pairwise distance among prior means; 0 for a single class.
double inter_loss(const ConditionalPrior& prior);
double ada_objective(const ConditionalPrior& prior);

/// Analytic gradient of intra_loss + inter_loss with respect to mu.
RealMatrix ada_gradient(const ConditionalPrior& prior);

/// One plain gradient step on mu: mu <- mu - xi * grad. mu_bar and
/// sigma2 are untouched.
void adaptive_step(ConditionalPrior& prior);

}  // namespace adarand

#endif
