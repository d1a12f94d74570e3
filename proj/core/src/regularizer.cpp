#include "adarand/regularizer.hpp"

#include <cmath>
#include <utility>

#include "adarand/errors.hpp"

namespace adarand {

std::string reg_kind_name(RegKind kind) {
  switch (kind) {
    case RegKind::FT: return "ft";
    case RegKind::FNP: return "fnp";
    case RegKind::L2SP: return "l2sp";
    case RegKind::RandRegUniform01: return "randreg-uniform01";
    case RegKind::RandRegStdNormal: return "randreg-stdnormal";
    case RegKind::RandRegPrecompStats: return "randreg-precompstats";
    case RegKind::RandRegCP: return "randreg-cp";
    case RegKind::AdaRand: return "adarand";
  }
  return "unknown";
}

RegKind parse_reg_kind(const std::string& name) {
  for (RegKind kind : {RegKind::FT, RegKind::FNP, RegKind::L2SP, RegKind::RandRegUniform01,
                       RegKind::RandRegStdNormal, RegKind::RandRegPrecompStats, RegKind::RandRegCP,
                       RegKind::AdaRand}) {
    if (reg_kind_name(kind) == name) return kind;
  }
  throw ContractViolation("unknown regularizer kind: " + name);
}

bool is_conditional_kind(RegKind kind) {
  return kind == RegKind::RandRegCP || kind == RegKind::AdaRand;
}

bool consumes_noise(RegKind kind) {
  switch (kind) {
    case RegKind::RandRegUniform01:
    case RegKind::RandRegStdNormal:
    case RegKind::RandRegPrecompStats:
    case RegKind::RandRegCP:
    case RegKind::AdaRand:
      return true;
    default:
      return false;
  }
}

FeatureSnapshot snapshot_features(const ModelState& model, const RealMatrix& inputs) {
  FeatureSnapshot snap;
  snap.features = extract_features(model.extractor, inputs);
  snap.extractor_fingerprint = extractor_fingerprint(model.extractor);
  return snap;
}

RegState build_state(const RegSpec& spec, const ModelState& pretrained,
                     const FeatureSnapshot& target_features, std::span<const int> labels,
                     std::size_t class_count) {
  RegState state;
  state.spec = spec;

  switch (spec.kind) {
    case RegKind::FT:
    case RegKind::FNP:
    case RegKind::RandRegUniform01:
    case RegKind::RandRegStdNormal:
      return state;  // no payload
    case RegKind::L2SP:
      state.source_extractor = pretrained.extractor;  // deep copy of the snapshot
      return state;
    default:
      break;
  }

  // The remaining kinds consume feature statistics, which must have been
  // computed with the pretrained extractor.
  if (target_features.extractor_fingerprint != extractor_fingerprint(pretrained.extractor)) {
    throw ContractViolation(
        "build_state: feature snapshot was not extracted with the supplied pretrained model");
  }
  const RealMatrix& feats = target_features.features;

  if (spec.kind == RegKind::RandRegPrecompStats) {
    const std::size_t n = feats.rows();
    const std::size_t d = feats.cols();
    if (n == 0) {
      throw ContractViolation("build_state: precomputed stats need at least one feature row");
    }
    RealMatrix mu(1, d);
    RealMatrix sigma2(1, d);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < d; ++j) mu(0, j) += feats(i, j);
    }
    for (std::size_t j = 0; j < d; ++j) mu(0, j) /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < d; ++j) {
        const double dev = feats(i, j) - mu(0, j);
        sigma2(0, j) += dev * dev;
      }
    }
    for (std::size_t j = 0; j < d; ++j) sigma2(0, j) /= static_cast<double>(n);
    state.stats_mu = std::move(mu);
    state.stats_sigma2 = std::move(sigma2);
    return state;
  }

  // RandRegCP and AdaRand: class-conditional prior.
  state.prior = init_from_features(feats, labels, class_count, spec.alpha, spec.xi,
                                   spec.variance_floor, spec.distance);
  return state;
}

PenaltyResult penalty(const RegState& state, const RealMatrix& features,
                      std::span<const int> labels, RngStream& noise) {
  const std::size_t batch = features.rows();
  const std::size_t d = features.cols();
  PenaltyResult result;
  result.grad_features = RealMatrix(batch, d);

  if (state.kind() == RegKind::FT || state.kind() == RegKind::L2SP) {
    return result;  // exactly zero, no rng consumed
  }

  RealMatrix reference(batch, d);  // FNP: z = 0
  switch (state.kind()) {
    case RegKind::FNP:
      break;
    case RegKind::RandRegUniform01:
      reference = uniform_sample(noise, batch, d);
      break;
    case RegKind::RandRegStdNormal:
      reference = normal_sample(noise, batch, d);
      break;
    case RegKind::RandRegPrecompStats: {
      RealMatrix mu_rows(batch, d);
      RealMatrix sigma2_rows(batch, d);
      for (std::size_t i = 0; i < batch; ++i) {
        for (std::size_t j = 0; j < d; ++j) {
          mu_rows(i, j) = (*state.stats_mu)(0, j);
          sigma2_rows(i, j) = (*state.stats_sigma2)(0, j);
        }
      }
      reference = gaussian_sample(noise, mu_rows, sigma2_rows);
      break;
    }
    case RegKind::RandRegCP:
    case RegKind::AdaRand:
      if (labels.size() != batch) {
        throw ContractViolation("penalty: conditional kind called without per-sample labels");
      }
      reference = sample_reference(*state.prior, labels, noise);
      break;
    default:
      break;
  }

  double value = 0.0;
  for (std::size_t i = 0; i < batch; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      const double gap = features(i, j) - reference(i, j);
      value += gap * gap;
      result.grad_features(i, j) = 2.0 * gap / static_cast<double>(batch);
    }
  }
  result.value = value / static_cast<double>(batch);
  return result;
}

L2spResult l2sp_penalty(const ExtractorParams& current, const ExtractorParams& source,
                        const HeadMatrix& head, double head_weight) {
  if (current.layers.size() != source.layers.size()) {
    throw ContractViolation("l2sp_penalty: layer count mismatch");
  }
  L2spResult result;
  result.extractor.layers.resize(current.layers.size());
  for (std::size_t l = 0; l < current.layers.size(); ++l) {
    const LayerParams& cur = current.layers[l];
    const LayerParams& src = source.layers[l];
    require_same_shape(cur.weight, src.weight, "l2sp_penalty layer " + std::to_string(l));
    if (cur.bias.size() != src.bias.size()) {
      throw ContractViolation("l2sp_penalty: bias length mismatch at layer " + std::to_string(l));
    }
    LayerParams& g = result.extractor.layers[l];
    g.weight = RealMatrix(cur.weight.rows(), cur.weight.cols());
    g.bias.assign(cur.bias.size(), 0.0);
    for (std::size_t i = 0; i < cur.weight.values().size(); ++i) {
      const double dev = cur.weight.values()[i] - src.weight.values()[i];
      result.value += dev * dev;
      g.weight.values()[i] = 2.0 * dev;
    }
    for (std::size_t i = 0; i < cur.bias.size(); ++i) {
      const double dev = cur.bias[i] - src.bias[i];
      result.value += dev * dev;
      g.bias[i] = 2.0 * dev;
    }
  }
  result.head = RealMatrix(head.weight.rows(), head.weight.cols());
  for (std::size_t i = 0; i < head.weight.values().size(); ++i) {
    const double w = head.weight.values()[i];
    result.value += head_weight * w * w;
    result.head.values()[i] = 2.0 * head_weight * w;
  }
  return result;
}

void post_step_hook(RegState& state, const RealMatrix& features, std::span<const int> labels) {
  if (state.kind() != RegKind::AdaRand) return;
  ema_update(*state.prior, features, labels);
  adaptive_step(*state.prior);
}

}  // namespace adarand
