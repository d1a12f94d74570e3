#ifndef ADARAND_MODEL_HPP
#define ADARAND_MODEL_HPP

#include <cstdint>
#include <span>
#include <vector>

#include "adarand/matrix.hpp"
#include "adarand/rng.hpp"

namespace adarand {

/// One affine layer: weight [in x out], bias [out]. Doubles as the
/// gradient container for the same layer.
struct LayerParams {
  RealMatrix weight;
  std::vector<double> bias;
};

/// Feature extractor: affine layers with rectifier activations between
/// them and no activation after the final layer.
struct ExtractorParams {
  std::vector<LayerParams> layers;

  std::size_t input_dim() const { return layers.front().weight.rows(); }
  std::size_t feature_dim() const { return layers.back().weight.cols(); }
};

/// Bias-free linear head, weight [d x K]. Logits are exactly linear in
/// the features, which the gradient-norm identity in diagnostics relies on.
struct HeadMatrix {
  RealMatrix weight;

  std::size_t feature_dim() const { return weight.rows(); }
  std::size_t class_count() const { return weight.cols(); }
};

struct SgdConfig {
  double learning_rate = 0.01;
  double momentum = 0.9;
  bool nesterov = true;
};

/// Trainable classifier plus its optimizer momentum buffers.
struct ModelState {
  ExtractorParams extractor;
  HeadMatrix head;
  std::vector<LayerParams> extractor_momentum;
  RealMatrix head_momentum;
  SgdConfig sgd;
};

struct ExtractorGrads {
  std::vector<LayerParams> layers;
};

struct ModelGrads {
  ExtractorGrads extractor;
  RealMatrix head;
};

/// Per-layer inputs and pre-activations kept from a forward pass so the
/// backward pass can be run later.
struct ForwardCache {
  std::vector<RealMatrix> layer_inputs;  // input to each layer
  std::vector<RealMatrix> preacts;       // affine outputs before activation
  const RealMatrix& features() const { return preacts.back(); }
};

RealMatrix extract_features(const ExtractorParams& params, const RealMatrix& x);
ForwardCache forward_cached(const ExtractorParams& params, const RealMatrix& x);
ExtractorGrads backprop_features(const ExtractorParams& params, const ForwardCache& cache,
                                 const RealMatrix& grad_features);

struct CeResult {
  double loss;
  RealMatrix grad_head;      // [d x K]
  RealMatrix grad_features;  // [B x d]
};

/// Batch-mean softmax cross-entropy on logits W^T g, with batch-mean
/// gradients for the head and the features.
CeResult ce_loss(const HeadMatrix& head, const RealMatrix& features, std::span<const int> labels);

/// Logits [B x K] for accuracy evaluation.
RealMatrix logits(const HeadMatrix& head, const RealMatrix& features);
double accuracy(const HeadMatrix& head, const RealMatrix& features, std::span<const int> labels);

/// Nesterov momentum update applied in place to every parameter tensor.
/// Throws NumericError naming the offending tensor on non-finite gradients.
void sgd_step(ModelState& state, const ModelGrads& grads);

/// Fan-in-scaled uniform initialization from the init stream.
ExtractorParams init_extractor(std::size_t input_dim, const std::vector<std::size_t>& hidden,
                               std::size_t feature_dim, RngStream& init_rng);
HeadMatrix init_head(std::size_t feature_dim, std::size_t class_count, RngStream& init_rng);
ModelState make_model_state(ExtractorParams extractor, HeadMatrix head, SgdConfig sgd);

/// Order-sensitive hash of the extractor parameter bytes; used as the
/// provenance tag on feature snapshots.
std::uint64_t extractor_fingerprint(const ExtractorParams& params);
std::uint64_t model_fingerprint(const ModelState& state);

}  // namespace adarand

#endif
