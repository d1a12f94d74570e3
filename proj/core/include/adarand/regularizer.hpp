#ifndef ADARAND_REGULARIZER_HPP
#define ADARAND_REGULARIZER_HPP

#include <cstdint>
#include <optional>
#include <span>
#include <string>

#include "adarand/matrix.hpp"
#include "adarand/model.hpp"
#include "adarand/prior.hpp"
#include "adarand/rng.hpp"

namespace adarand {

enum class RegKind {
  FT,                   // plain fine-tuning, no penalty
  FNP,                  // feature norm penalty (reference vector fixed at 0)
  L2SP,                 // parameter-space pull toward the source snapshot
  RandRegUniform01,     // references ~ U(0,1)
  RandRegStdNormal,     // references ~ N(0, I)
  RandRegPrecompStats,  // references ~ N(mu_s, sigma2_s I), class-agnostic
  RandRegCP,            // fixed class-conditional prior
  AdaRand,              // conditional prior with adaptive mean updates
};

std::string reg_kind_name(RegKind kind);
RegKind parse_reg_kind(const std::string& name);
bool is_conditional_kind(RegKind kind);
bool consumes_noise(RegKind kind);

/// Declarative choice of regularizer plus its hyperparameters.
struct RegSpec {
  RegKind kind = RegKind::FT;
  double lambda = 1.0;
  double alpha = 0.5;  // AdaRand EMA decay
  double xi = 0.1;     // AdaRand prior step size
  double variance_floor = kVarianceFloor;
  DistanceKind distance = DistanceKind::Cosine;
  double l2sp_head_weight = 1.0;
};

/// Features extracted with a known extractor; the fingerprint ties them
/// to the model they came from so build_state can check provenance.
struct FeatureSnapshot {
  RealMatrix features;
  std::uint64_t extractor_fingerprint = 0;
};

FeatureSnapshot snapshot_features(const ModelState& model, const RealMatrix& inputs);

/// Materialized regularizer state. Exactly the fields demanded by the
/// kind are populated.
struct RegState {
  RegSpec spec;
  std::optional<ConditionalPrior> prior;          // RandRegCP, AdaRand
  std::optional<RealMatrix> stats_mu;             // [1 x d], RandRegPrecompStats
  std::optional<RealMatrix> stats_sigma2;         // [1 x d]
  std::optional<ExtractorParams> source_extractor;  // L2SP

  RegKind kind() const { return spec.kind; }
};

RegState build_state(const RegSpec& spec, const ModelState& pretrained,
                     const FeatureSnapshot& target_features, std::span<const int> labels,
                     std::size_t class_count);

struct PenaltyResult {
  double value = 0.0;
  RealMatrix grad_features;  // [B x d], before the lambda weight
};

/// Batch mean of ||g_i - z_i||^2 with z drawn per kind; z is a constant
/// in the gradient. FT and L2SP contribute nothing here and consume no rng.
PenaltyResult penalty(const RegState& state, const RealMatrix& features,
                      std::span<const int> labels, RngStream& noise);

struct L2spResult {
  double value = 0.0;
  ExtractorGrads extractor;
  RealMatrix head;
};

/// ||phi - phi_s||^2 over extractor parameters plus head_weight * ||W||^2
/// for the new head, with matching gradients.
L2spResult l2sp_penalty(const ExtractorParams& current, const ExtractorParams& source,
                        const HeadMatrix& head, double head_weight = 1.0);

/// Once per training step, after the model step, with the step's detached
/// features: AdaRand runs its EMA and adaptive prior updates; every other
/// kind is a no-op.
void post_step_hook(RegState& state, const RealMatrix& features, std::span<const int> labels);

}  // namespace adarand

#endif
