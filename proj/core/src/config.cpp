#include "adarand/config.hpp"

#include <cmath>
#include <set>

#include <json.hpp>

#include "adarand/errors.hpp"
#include "adarand/text_io.hpp"

namespace adarand {
namespace {

using nlohmann::json;

void reject_unknown_keys(const json& obj, const std::set<std::string>& allowed,
                         const std::string& section) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (!allowed.contains(it.key())) {
      throw ParseError("config: unknown key '" + it.key() + "' in " + section);
    }
  }
}

template <typename T>
T get_or(const json& obj, const char* key, T fallback) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ParseError(std::string("config: key '") + key + "' has the wrong type");
  }
}

void check_range(bool ok, const std::string& what) {
  if (!ok) throw ParseError("config: " + what);
}

DatasetSpec parse_dataset(const json& obj) {
  reject_unknown_keys(obj,
                      {"source", "input_dim", "class_count", "samples_per_class",
                       "test_samples_per_class", "source_samples_per_class", "cluster_spread",
                       "cluster_separation", "rotation_angle", "shift", "csv_path",
                       "csv_test_path", "fraction", "split_seed"},
                      "dataset");
  DatasetSpec spec;
  const std::string source = get_or<std::string>(obj, "source", "synthetic-blobs");
  if (source == "synthetic-blobs") {
    spec.source = DatasetSpec::Source::SyntheticBlobs;
  } else if (source == "csv-file") {
    spec.source = DatasetSpec::Source::CsvFile;
  } else {
    throw ParseError("config: dataset.source must be 'synthetic-blobs' or 'csv-file'");
  }
  spec.synthetic.input_dim = get_or<std::size_t>(obj, "input_dim", spec.synthetic.input_dim);
  spec.synthetic.class_count = get_or<std::size_t>(obj, "class_count", spec.synthetic.class_count);
  spec.synthetic.samples_per_class =
      get_or<std::size_t>(obj, "samples_per_class", spec.synthetic.samples_per_class);
  spec.synthetic.test_samples_per_class =
      get_or<std::size_t>(obj, "test_samples_per_class", spec.synthetic.test_samples_per_class);
  spec.synthetic.source_samples_per_class = get_or<std::size_t>(
      obj, "source_samples_per_class", spec.synthetic.source_samples_per_class);
  spec.synthetic.cluster_spread =
      get_or<double>(obj, "cluster_spread", spec.synthetic.cluster_spread);
  spec.synthetic.cluster_separation =
      get_or<double>(obj, "cluster_separation", spec.synthetic.cluster_separation);
  spec.synthetic.rotation_angle =
      get_or<double>(obj, "rotation_angle", spec.synthetic.rotation_angle);
  spec.synthetic.shift = get_or<double>(obj, "shift", spec.synthetic.shift);
  spec.csv_path = get_or<std::string>(obj, "csv_path", "");
  spec.csv_test_path = get_or<std::string>(obj, "csv_test_path", "");
  spec.fraction = get_or<double>(obj, "fraction", 1.0);
  spec.split_seed = get_or<std::uint64_t>(obj, "split_seed", spec.split_seed);

  check_range(spec.fraction > 0.0 && spec.fraction <= 1.0, "dataset.fraction must be in (0, 1]");
  if (spec.source == DatasetSpec::Source::SyntheticBlobs) {
    check_range(spec.synthetic.input_dim >= 1, "dataset.input_dim must be >= 1");
    check_range(spec.synthetic.class_count >= 2, "dataset.class_count must be >= 2");
    check_range(spec.synthetic.samples_per_class >= 2,
                "dataset.samples_per_class must be >= 2");
    check_range(spec.synthetic.cluster_spread > 0.0, "dataset.cluster_spread must be positive");
  } else {
    check_range(!spec.csv_path.empty(), "dataset.csv_path is required for csv-file datasets");
  }
  return spec;
}

ModelConfig parse_model(const json& obj) {
  reject_unknown_keys(obj, {"hidden_widths", "feature_dim"}, "model");
  ModelConfig model;
  model.hidden_widths =
      get_or<std::vector<std::size_t>>(obj, "hidden_widths", model.hidden_widths);
  model.feature_dim = get_or<std::size_t>(obj, "feature_dim", model.feature_dim);
  check_range(model.feature_dim >= 2, "model.feature_dim must be >= 2");
  for (std::size_t w : model.hidden_widths) {
    check_range(w >= 1, "model.hidden_widths entries must be >= 1");
  }
  return model;
}

RegSpec parse_reg(const json& obj) {
  reject_unknown_keys(
      obj, {"kind", "lambda", "alpha", "xi", "variance_floor", "distance", "l2sp_head_weight"},
      "reg");
  RegSpec reg;
  reg.kind = parse_reg_kind(get_or<std::string>(obj, "kind", "ft"));
  reg.lambda = get_or<double>(obj, "lambda", 1.0);
  reg.alpha = get_or<double>(obj, "alpha", 0.5);
  reg.xi = get_or<double>(obj, "xi", 0.1);
  reg.variance_floor = get_or<double>(obj, "variance_floor", kVarianceFloor);
  reg.l2sp_head_weight = get_or<double>(obj, "l2sp_head_weight", 1.0);
  const std::string distance = get_or<std::string>(obj, "distance", "cosine");
  if (distance == "cosine") {
    reg.distance = DistanceKind::Cosine;
  } else if (distance == "squared-euclidean") {
    reg.distance = DistanceKind::SquaredEuclidean;
  } else {
    throw ParseError("config: reg.distance must be 'cosine' or 'squared-euclidean'");
  }
  check_range(std::isfinite(reg.lambda) && reg.lambda >= 0.0, "reg.lambda must be >= 0");
  check_range(reg.alpha >= 0.0 && reg.alpha <= 1.0, "reg.alpha must be in [0, 1]");
  check_range(std::isfinite(reg.xi) && reg.xi >= 0.0, "reg.xi must be >= 0");
  check_range(reg.variance_floor >= 0.0, "reg.variance_floor must be >= 0");
  check_range(reg.l2sp_head_weight >= 0.0, "reg.l2sp_head_weight must be >= 0");
  return reg;
}

OptimizerConfig parse_optimizer(const json& obj) {
  reject_unknown_keys(obj,
                      {"learning_rate", "momentum", "nesterov", "batch_size", "epochs",
                       "lr_milestones", "lr_decay"},
                      "optimizer");
  OptimizerConfig opt;
  opt.learning_rate = get_or<double>(obj, "learning_rate", opt.learning_rate);
  opt.momentum = get_or<double>(obj, "momentum", opt.momentum);
  opt.nesterov = get_or<bool>(obj, "nesterov", opt.nesterov);
  opt.batch_size = get_or<std::size_t>(obj, "batch_size", opt.batch_size);
  opt.epochs = get_or<std::size_t>(obj, "epochs", opt.epochs);
  opt.lr_milestones = get_or<std::vector<std::size_t>>(obj, "lr_milestones", opt.lr_milestones);
  opt.lr_decay = get_or<double>(obj, "lr_decay", opt.lr_decay);
  check_range(opt.learning_rate > 0.0, "optimizer.learning_rate must be positive");
  check_range(opt.momentum >= 0.0 && opt.momentum < 1.0, "optimizer.momentum must be in [0, 1)");
  check_range(opt.batch_size >= 1, "optimizer.batch_size must be >= 1");
  check_range(opt.lr_decay > 0.0 && opt.lr_decay <= 1.0, "optimizer.lr_decay must be in (0, 1]");
  for (std::size_t i = 1; i < opt.lr_milestones.size(); ++i) {
    check_range(opt.lr_milestones[i - 1] < opt.lr_milestones[i],
                "optimizer.lr_milestones must be strictly increasing");
  }
  return opt;
}

SeedConfig parse_seeds(const json& obj) {
  reject_unknown_keys(obj, {"init", "shuffle", "noise", "data"}, "seeds");
  SeedConfig seeds;
  seeds.init = get_or<std::uint64_t>(obj, "init", seeds.init);
  seeds.shuffle = get_or<std::uint64_t>(obj, "shuffle", seeds.shuffle);
  seeds.noise = get_or<std::uint64_t>(obj, "noise", seeds.noise);
  seeds.data = get_or<std::uint64_t>(obj, "data", seeds.data);
  return seeds;
}

}  // namespace

ExperimentConfig parse_config(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("config: ") + e.what());
  }
  if (!root.is_object()) {
    throw ParseError("config: top level must be an object");
  }
  reject_unknown_keys(
      root, {"dataset", "model", "reg", "optimizer", "seeds", "pretrain_epochs", "export_pca",
             "output_dir"},
      "top level");

  ExperimentConfig config;
  config.dataset = parse_dataset(root.value("dataset", json::object()));
  config.model = parse_model(root.value("model", json::object()));
  config.reg = parse_reg(root.value("reg", json::object()));
  config.optimizer = parse_optimizer(root.value("optimizer", json::object()));
  config.seeds = parse_seeds(root.value("seeds", json::object()));
  config.pretrain_epochs = get_or<std::size_t>(root, "pretrain_epochs", 0);
  config.export_pca = get_or<bool>(root, "export_pca", false);
  config.output_dir = get_or<std::string>(root, "output_dir", "");
  return config;
}

ExperimentConfig load_config_file(const std::filesystem::path& path) {
  return parse_config(read_text_file(path));
}

ExperimentConfig default_benchmark_config() {
  ExperimentConfig config;
  config.dataset.synthetic.input_dim = 16;
  config.dataset.synthetic.class_count = 10;
  config.dataset.synthetic.samples_per_class = 22;  // 20 train + 2 val per class
  config.dataset.synthetic.test_samples_per_class = 50;
  config.dataset.synthetic.source_samples_per_class = 200;
  config.dataset.synthetic.cluster_spread = 1.0;
  config.dataset.synthetic.cluster_separation = 1.0;
  config.dataset.synthetic.rotation_angle = 0.7;
  config.dataset.synthetic.shift = 1.0;
  config.dataset.split_seed = 13;
  config.model.hidden_widths = {32, 32};
  config.model.feature_dim = 8;
  config.reg.kind = RegKind::AdaRand;
  config.optimizer.batch_size = 16;
  config.optimizer.epochs = 60;
  config.optimizer.lr_milestones = {20, 40};
  config.pretrain_epochs = 30;
  config.seeds = SeedConfig{1, 2, 3, 4};
  return config;
}

std::string resolved_config_json(const ExperimentConfig& config) {
  json root;
  json& dataset = root["dataset"];
  dataset["source"] = config.dataset.source == DatasetSpec::Source::SyntheticBlobs
                          ? "synthetic-blobs"
                          : "csv-file";
  dataset["input_dim"] = config.dataset.synthetic.input_dim;
  dataset["class_count"] = config.dataset.synthetic.class_count;
  dataset["samples_per_class"] = config.dataset.synthetic.samples_per_class;
  dataset["test_samples_per_class"] = config.dataset.synthetic.test_samples_per_class;
  dataset["source_samples_per_class"] = config.dataset.synthetic.source_samples_per_class;
  dataset["cluster_spread"] = config.dataset.synthetic.cluster_spread;
  dataset["cluster_separation"] = config.dataset.synthetic.cluster_separation;
  dataset["rotation_angle"] = config.dataset.synthetic.rotation_angle;
  dataset["shift"] = config.dataset.synthetic.shift;
  dataset["csv_path"] = config.dataset.csv_path;
  dataset["csv_test_path"] = config.dataset.csv_test_path;
  dataset["fraction"] = config.dataset.fraction;
  dataset["split_seed"] = config.dataset.split_seed;

  json& model = root["model"];
  model["hidden_widths"] = config.model.hidden_widths;
  model["feature_dim"] = config.model.feature_dim;

  json& reg = root["reg"];
  reg["kind"] = reg_kind_name(config.reg.kind);
  reg["lambda"] = config.reg.lambda;
  reg["alpha"] = config.reg.alpha;
  reg["xi"] = config.reg.xi;
  reg["variance_floor"] = config.reg.variance_floor;
  reg["distance"] =
      config.reg.distance == DistanceKind::Cosine ? "cosine" : "squared-euclidean";
  reg["l2sp_head_weight"] = config.reg.l2sp_head_weight;

  json& optimizer = root["optimizer"];
  optimizer["learning_rate"] = config.optimizer.learning_rate;
  optimizer["momentum"] = config.optimizer.momentum;
  optimizer["nesterov"] = config.optimizer.nesterov;
  optimizer["batch_size"] = config.optimizer.batch_size;
  optimizer["epochs"] = config.optimizer.epochs;
  optimizer["lr_milestones"] = config.optimizer.lr_milestones;
  optimizer["lr_decay"] = config.optimizer.lr_decay;

  json& seeds = root["seeds"];
  seeds["init"] = config.seeds.init;
  seeds["shuffle"] = config.seeds.shuffle;
  seeds["noise"] = config.seeds.noise;
  seeds["data"] = config.seeds.data;

  root["pretrain_epochs"] = config.effective_pretrain_epochs();
  root["export_pca"] = config.export_pca;
  root["output_dir"] = config.output_dir;
  return root.dump(2) + "\n";
}

}  // namespace adarand
