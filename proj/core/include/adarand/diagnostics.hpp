#ifndef ADARAND_DIAGNOSTICS_HPP
#define ADARAND_DIAGNOSTICS_HPP

#include <array>
#include <cstdint>
#include <span>

#include "adarand/matrix.hpp"
#include "adarand/model.hpp"

namespace adarand {

inline constexpr std::size_t kEntropyCap = 512;
inline constexpr std::uint64_t kDiagSeed = 0xD1A6ULL;

/// One epoch's feature-space diagnostics. mutual_info is constructed as
/// entropy - cond_entropy, so the decomposition holds exactly.
struct DiagnosticsReport {
  double mean_feature_norm = 0.0;  // mean squared feature norm
  double entropy = 0.0;            // pairwise differential entropy estimate
  double cond_entropy = 0.0;       // class-weighted per-class estimate
  double mutual_info = 0.0;
  double mean_ce_grad_norm = 0.0;  // mean squared head-gradient norm
};

/// Pairwise estimator d/(N(N-1)) * sum_{i!=j} log ||x_i - x_j||^2 with
/// squared distances floored at 1e-12 before the log. Above n_cap rows a
/// seeded uniform subsample of n_cap rows is used.
double entropy_estimate(const RealMatrix& features, std::size_t n_cap = kEntropyCap,
                        std::uint64_t subsample_seed = kDiagSeed);

/// N_k-weighted average of per-class entropy estimates; classes with
/// fewer than 2 samples are excluded from the weighted average.
double conditional_entropy(const RealMatrix& features, std::span<const int> labels,
                           std::size_t class_count, std::size_t n_cap = kEntropyCap,
                           std::uint64_t subsample_seed = kDiagSeed);

struct GradNormPair {
  double direct = 0.0;    // per-sample squared Frobenius norm of the head gradient
  double identity = 0.0;  // sum_k (softmax[k] - delta_yk)^2 * ||g||^2
};

/// Both sides of the cross-entropy gradient-norm identity, batch-averaged.
GradNormPair ce_grad_norm(const HeadMatrix& head, const RealMatrix& features,
                          std::span<const int> labels);

double mean_squared_feature_norm(const RealMatrix& features);

struct Pca2Result {
  RealMatrix projection;             // [N x 2]
  std::array<double, 2> explained;   // top-2 covariance eigenvalues
};

/// Mean-centered projection onto the top-2 covariance eigenvectors,
/// computed by power iteration with deflation. The first nonzero
/// component of each eigenvector is made positive.
Pca2Result pca2(const RealMatrix& features);

struct ScatterResult {
  double ratio = 0.0;
  bool degenerate = false;  // zero within-class scatter
};

/// Between-class over within-class scatter of a 2-D projection.
ScatterResult scatter_ratio(const RealMatrix& projection, std::span<const int> labels);

DiagnosticsReport compute_report(const HeadMatrix& head, const RealMatrix& features,
                                 std::span<const int> labels, std::size_t class_count,
                                 std::size_t n_cap = kEntropyCap,
                                 std::uint64_t subsample_seed = kDiagSeed);

}  // namespace adarand

#endif
