#include "adarand/model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <utility>

#include "adarand/errors.hpp"

namespace adarand {
namespace {

RealMatrix affine(const RealMatrix& x, const LayerParams& layer) {
  RealMatrix out = matmul(x, layer.weight);
  for (std::size_t i = 0; i < out.rows(); ++i) {
    for (std::size_t j = 0; j < out.cols(); ++j) {
      out(i, j) += layer.bias[j];
    }
  }
  return out;
}

void check_labels(std::span<const int> labels, std::size_t batch, std::size_t class_count,
                  const std::string& context) {
  if (labels.size() != batch) {
    throw ContractViolation(context + ": label count " + std::to_string(labels.size()) +
                            " does not match batch size " + std::to_string(batch));
  }
  for (int y : labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= class_count) {
      throw ContractViolation(context + ": label " + std::to_string(y) + " out of range [0," +
                              std::to_string(class_count) + ")");
    }
  }
}

void fnv_accumulate(std::uint64_t& h, const double* data, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint64_t bits = std::bit_cast<std::uint64_t>(data[i]);
    for (int b = 0; b < 8; ++b) {
      h ^= (bits >> (8 * b)) & 0xFF;
      h *= 0x100000001B3ULL;
    }
  }
}

void momentum_update(std::span<double> param, std::span<double> velocity,
                     std::span<const double> grad, const SgdConfig& sgd,
                     const std::string& tensor_name) {
  for (double g : grad) {
    if (!std::isfinite(g)) {
      throw NumericError("sgd_step: non-finite gradient in " + tensor_name);
    }
  }
  for (std::size_t i = 0; i < param.size(); ++i) {
    velocity[i] = sgd.momentum * velocity[i] + grad[i];
    const double step = sgd.nesterov ? grad[i] + sgd.momentum * velocity[i] : velocity[i];
    param[i] -= sgd.learning_rate * step;
  }
}

}  // namespace

RealMatrix extract_features(const ExtractorParams& params, const RealMatrix& x) {
  if (x.cols() != params.input_dim()) {
    throw ContractViolation("extract_features: input width " + std::to_string(x.cols()) +
                            " does not match first layer input " +
                            std::to_string(params.input_dim()));
  }
  RealMatrix h = x;
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    h = affine(h, params.layers[l]);
    if (l + 1 < params.layers.size()) {
      for (double& v : h.values()) v = std::max(v, 0.0);
    }
  }
  return h;
}

ForwardCache forward_cached(const ExtractorParams& params, const RealMatrix& x) {
  if (x.cols() != params.input_dim()) {
    throw ContractViolation("forward_cached: input width mismatch");
  }
  ForwardCache cache;
  RealMatrix h = x;
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    cache.layer_inputs.push_back(h);
    RealMatrix z = affine(h, params.layers[l]);
    cache.preacts.push_back(z);
    if (l + 1 < params.layers.size()) {
      for (double& v : z.values()) v = std::max(v, 0.0);
    }
    h = std::move(z);
  }
  return cache;
}

ExtractorGrads backprop_features(const ExtractorParams& params, const ForwardCache& cache,
                                 const RealMatrix& grad_features) {
  const std::size_t num_layers = params.layers.size();
  ExtractorGrads grads;
  grads.layers.resize(num_layers);

  RealMatrix grad_z = grad_features;  // gradient wrt the final pre-activation
  for (std::size_t l = num_layers; l-- > 0;) {
    const RealMatrix& input = cache.layer_inputs[l];
    LayerParams& g = grads.layers[l];
    g.weight = matmul(transpose(input), grad_z);
    g.bias.assign(params.layers[l].weight.cols(), 0.0);
    for (std::size_t i = 0; i < grad_z.rows(); ++i) {
      for (std::size_t j = 0; j < grad_z.cols(); ++j) {
        g.bias[j] += grad_z(i, j);
      }
    }
    if (l > 0) {
      RealMatrix grad_input = matmul(grad_z, transpose(params.layers[l].weight));
      // Rectifier mask of the previous layer's pre-activation.
      const RealMatrix& prev_z = cache.preacts[l - 1];
      for (std::size_t i = 0; i < grad_input.values().size(); ++i) {
        if (prev_z.values()[i] <= 0.0) grad_input.values()[i] = 0.0;
      }
      grad_z = std::move(grad_input);
    }
  }
  return grads;
}

RealMatrix logits(const HeadMatrix& head, const RealMatrix& features) {
  if (features.cols() != head.feature_dim()) {
    throw ContractViolation("logits: feature dim " + std::to_string(features.cols()) +
                            " does not match head " + std::to_string(head.feature_dim()));
  }
  return matmul(features, head.weight);
}

CeResult ce_loss(const HeadMatrix& head, const RealMatrix& features, std::span<const int> labels) {
  const std::size_t batch = features.rows();
  if (batch == 0) {
    throw ContractViolation("ce_loss: empty batch");
  }
  check_labels(labels, batch, head.class_count(), "ce_loss");

  RealMatrix z = logits(head, features);
  const std::size_t num_classes = z.cols();

  double loss = 0.0;
  RealMatrix grad_logits(batch, num_classes);
  for (std::size_t i = 0; i < batch; ++i) {
    double max_logit = z(i, 0);
    for (std::size_t k = 1; k < num_classes; ++k) max_logit = std::max(max_logit, z(i, k));
    double sum_exp = 0.0;
    for (std::size_t k = 0; k < num_classes; ++k) sum_exp += std::exp(z(i, k) - max_logit);
    const double lse = max_logit + std::log(sum_exp);
    loss += lse - z(i, static_cast<std::size_t>(labels[i]));
    for (std::size_t k = 0; k < num_classes; ++k) {
      const double p = std::exp(z(i, k) - lse);
      grad_logits(i, k) = (p - (static_cast<std::size_t>(labels[i]) == k ? 1.0 : 0.0)) /
                          static_cast<double>(batch);
    }
  }
  loss /= static_cast<double>(batch);

  CeResult result;
  result.loss = loss;
  result.grad_head = matmul(transpose(features), grad_logits);
  result.grad_features = matmul(grad_logits, transpose(head.weight));
  return result;
}

double accuracy(const HeadMatrix& head, const RealMatrix& features, std::span<const int> labels) {
  const RealMatrix z = logits(head, features);
  check_labels(labels, z.rows(), head.class_count(), "accuracy");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < z.rows(); ++i) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < z.cols(); ++k) {
      if (z(i, k) > z(i, best)) best = k;
    }
    if (best == static_cast<std::size_t>(labels[i])) ++correct;
  }
  return z.rows() == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(z.rows());
}

void sgd_step(ModelState& state, const ModelGrads& grads) {
  if (grads.extractor.layers.size() != state.extractor.layers.size()) {
    throw ContractViolation("sgd_step: gradient layer count mismatch");
  }
  for (std::size_t l = 0; l < state.extractor.layers.size(); ++l) {
    LayerParams& p = state.extractor.layers[l];
    LayerParams& v = state.extractor_momentum[l];
    const LayerParams& g = grads.extractor.layers[l];
    require_same_shape(p.weight, g.weight, "sgd_step layer " + std::to_string(l));
    const std::string tag = "layer" + std::to_string(l);
    momentum_update(p.weight.values(), v.weight.values(), g.weight.values(), state.sgd,
                    tag + ".weight");
    momentum_update(p.bias, v.bias, g.bias, state.sgd, tag + ".bias");
  }
  require_same_shape(state.head.weight, grads.head, "sgd_step head");
  momentum_update(state.head.weight.values(), state.head_momentum.values(), grads.head.values(),
                  state.sgd, "head.weight");
}

ExtractorParams init_extractor(std::size_t input_dim, const std::vector<std::size_t>& hidden,
                               std::size_t feature_dim, RngStream& init_rng) {
  std::vector<std::size_t> widths;
  widths.push_back(input_dim);
  widths.insert(widths.end(), hidden.begin(), hidden.end());
  widths.push_back(feature_dim);

  ExtractorParams params;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    const std::size_t fan_in = widths[l];
    const std::size_t fan_out = widths[l + 1];
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    LayerParams layer;
    layer.weight = RealMatrix(fan_in, fan_out);
    for (double& w : layer.weight.values()) w = (2.0 * init_rng.next_double() - 1.0) * bound;
    layer.bias.resize(fan_out);
    for (double& b : layer.bias) b = (2.0 * init_rng.next_double() - 1.0) * bound;
    params.layers.push_back(std::move(layer));
  }
  return params;
}

HeadMatrix init_head(std::size_t feature_dim, std::size_t class_count, RngStream& init_rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(feature_dim));
  HeadMatrix head;
  head.weight = RealMatrix(feature_dim, class_count);
  for (double& w : head.weight.values()) w = (2.0 * init_rng.next_double() - 1.0) * bound;
  return head;
}

ModelState make_model_state(ExtractorParams extractor, HeadMatrix head, SgdConfig sgd) {
  ModelState state;
  state.extractor = std::move(extractor);
  state.head = std::move(head);
  state.sgd = sgd;
  state.extractor_momentum.clear();
  for (const LayerParams& layer : state.extractor.layers) {
    LayerParams buf;
    buf.weight = RealMatrix(layer.weight.rows(), layer.weight.cols());
    buf.bias.assign(layer.bias.size(), 0.0);
    state.extractor_momentum.push_back(std::move(buf));
  }
  state.head_momentum = RealMatrix(state.head.weight.rows(), state.head.weight.cols());
  return state;
}

std::uint64_t extractor_fingerprint(const ExtractorParams& params) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (const LayerParams& layer : params.layers) {
    fnv_accumulate(h, layer.weight.values().data(), layer.weight.size());
    fnv_accumulate(h, layer.bias.data(), layer.bias.size());
  }
  return h;
}

std::uint64_t model_fingerprint(const ModelState& state) {
  std::uint64_t h = extractor_fingerprint(state.extractor);
  fnv_accumulate(h, state.head.weight.values().data(), state.head.weight.size());
  return h;
}

}  // namespace adarand
