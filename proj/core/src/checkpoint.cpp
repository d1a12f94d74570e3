#include "adarand/checkpoint.hpp"

#include <json.hpp>

#include "adarand/errors.hpp"
#include "adarand/text_io.hpp"

namespace adarand {
namespace {

using nlohmann::json;

constexpr const char* kFormat = "adarand-checkpoint";
constexpr int kVersion = 1;

json matrix_to_json(const RealMatrix& m) {
  json j;
  j["rows"] = m.rows();
  j["cols"] = m.cols();
  j["data"] = std::vector<double>(m.values().begin(), m.values().end());
  return j;
}

RealMatrix matrix_from_json(const json& j, const std::string& context) {
  if (!j.is_object() || !j.contains("rows") || !j.contains("cols") || !j.contains("data")) {
    throw ParseError(context + ": malformed matrix record");
  }
  return RealMatrix(j["rows"].get<std::size_t>(), j["cols"].get<std::size_t>(),
                    j["data"].get<std::vector<double>>());
}

json container(const char* section, json payload) {
  json j;
  j["format"] = kFormat;
  j["version"] = kVersion;
  j[section] = std::move(payload);
  return j;
}

json parse_container(const std::filesystem::path& path, const char* section) {
  json j;
  try {
    j = json::parse(read_text_file(path));
  } catch (const json::parse_error& e) {
    throw ParseError("checkpoint " + path.string() + ": " + e.what());
  }
  if (j.value("format", "") != kFormat) {
    throw ParseError("checkpoint " + path.string() + ": unexpected format tag");
  }
  if (j.value("version", 0) != kVersion) {
    throw ParseError("checkpoint " + path.string() + ": unsupported version " +
                     std::to_string(j.value("version", 0)));
  }
  if (!j.contains(section)) {
    throw ParseError("checkpoint " + path.string() + ": missing '" + section + "' section");
  }
  return j[section];
}

}  // namespace

void save_model_checkpoint(const std::filesystem::path& path, const ExtractorParams& extractor,
                           const HeadMatrix* head) {
  json layers = json::array();
  for (const LayerParams& layer : extractor.layers) {
    json l;
    l["weight"] = matrix_to_json(layer.weight);
    l["bias"] = layer.bias;
    layers.push_back(std::move(l));
  }
  json model;
  model["layers"] = std::move(layers);
  if (head != nullptr) {
    model["head"] = matrix_to_json(head->weight);
  }
  write_text_file(path, container("model", std::move(model)).dump(2) + "\n");
}

LoadedCheckpoint load_model_checkpoint(const std::filesystem::path& path) {
  const json model = parse_container(path, "model");
  LoadedCheckpoint out;
  if (!model.contains("layers") || !model["layers"].is_array() || model["layers"].empty()) {
    throw ParseError("checkpoint " + path.string() + ": missing layers");
  }
  for (const json& l : model["layers"]) {
    LayerParams layer;
    layer.weight = matrix_from_json(l.at("weight"), "layer weight");
    layer.bias = l.at("bias").get<std::vector<double>>();
    if (layer.bias.size() != layer.weight.cols()) {
      throw ParseError("checkpoint " + path.string() + ": bias length mismatch");
    }
    out.extractor.layers.push_back(std::move(layer));
  }
  for (std::size_t l = 0; l + 1 < out.extractor.layers.size(); ++l) {
    if (out.extractor.layers[l].weight.cols() != out.extractor.layers[l + 1].weight.rows()) {
      throw ParseError("checkpoint " + path.string() + ": layer shapes do not compose");
    }
  }
  if (model.contains("head")) {
    HeadMatrix head;
    head.weight = matrix_from_json(model["head"], "head");
    if (head.weight.rows() != out.extractor.feature_dim()) {
      throw ParseError("checkpoint " + path.string() + ": head rows do not match feature dim");
    }
    out.head = std::move(head);
  }
  return out;
}

void save_prior_checkpoint(const std::filesystem::path& path, const ConditionalPrior& prior) {
  json p;
  p["mu"] = matrix_to_json(prior.mu);
  p["sigma2"] = matrix_to_json(prior.sigma2);
  p["mu_bar"] = matrix_to_json(prior.mu_bar);
  p["alpha"] = prior.alpha;
  p["xi"] = prior.xi;
  p["distance"] = prior.distance == DistanceKind::Cosine ? "cosine" : "squared-euclidean";
  write_text_file(path, container("prior", std::move(p)).dump(2) + "\n");
}

ConditionalPrior load_prior_checkpoint(const std::filesystem::path& path) {
  const json p = parse_container(path, "prior");
  ConditionalPrior prior;
  prior.mu = matrix_from_json(p.at("mu"), "prior mu");
  prior.sigma2 = matrix_from_json(p.at("sigma2"), "prior sigma2");
  prior.mu_bar = matrix_from_json(p.at("mu_bar"), "prior mu_bar");
  prior.alpha = p.at("alpha").get<double>();
  prior.xi = p.at("xi").get<double>();
  const std::string distance = p.value("distance", "cosine");
  prior.distance =
      distance == "squared-euclidean" ? DistanceKind::SquaredEuclidean : DistanceKind::Cosine;
  if (!prior.mu.same_shape(prior.sigma2) || !prior.mu.same_shape(prior.mu_bar)) {
    throw ParseError("checkpoint " + path.string() + ": prior tables disagree on shape");
  }
  return prior;
}

}  // namespace adarand
