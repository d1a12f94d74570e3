#include "adarand/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include <json.hpp>

#include "adarand/diagnostics.hpp"
#include "adarand/errors.hpp"
#include "adarand/rng.hpp"
#include "adarand/text_io.hpp"

namespace adarand {
namespace {

using nlohmann::json;

double epoch_learning_rate(const OptimizerConfig& opt, std::size_t epoch) {
  double lr = opt.learning_rate;
  for (std::size_t milestone : opt.lr_milestones) {
    if (epoch >= milestone) lr *= opt.lr_decay;
  }
  return lr;
}

RealMatrix gather_rows(const RealMatrix& m, std::span<const std::size_t> rows) {
  RealMatrix out(rows.size(), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) out(i, j) = m(rows[i], j);
  }
  return out;
}

double dataset_accuracy(const ModelState& model, const Dataset& data) {
  const RealMatrix features = extract_features(model.extractor, data.inputs);
  return accuracy(model.head, features, data.labels);
}

std::string to_hex(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = digits[v & 0xF];
    v >>= 4;
  }
  return out;
}

struct TrainingOutput {
  std::vector<MetricsRow> metrics;
  std::vector<std::uint64_t> epoch_param_hash;
  ModelState best_model;
  std::size_t best_epoch = 0;
  std::optional<double> best_val_accuracy;
};

/// One full training run. Stream layout: the shuffle stream drives the
/// per-epoch data order, the noise stream is consumed only by reference
/// draws, and the diagnostics subset comes from a seed derived off the
/// data seed. Nothing else draws randomness, which is what makes the
/// lambda=0 and degenerate-AdaRand trajectory equalities exact.
TrainingOutput run_training(ModelState& model, RegState& reg, const SplitDataset& data,
                            const OptimizerConfig& opt, const SeedConfig& seeds,
                            std::size_t epochs) {
  const Dataset& train = data.train;
  const std::size_t n = train.size();
  const std::size_t class_count = train.class_count;
  const double lambda = reg.spec.lambda;

  RngStream shuffle_rng(seeds.shuffle, StreamId::Shuffle);
  RngStream noise_rng(seeds.noise, StreamId::Noise);

  RngStream diag_rng(derive_seed(seeds.data, "diag-subset"), StreamId::Data);
  const std::vector<std::size_t> diag_rows =
      diag_rng.sample_without_replacement(n, std::min<std::size_t>(n, kEntropyCap));
  const RealMatrix diag_inputs = gather_rows(train.inputs, diag_rows);
  std::vector<int> diag_labels;
  diag_labels.reserve(diag_rows.size());
  for (std::size_t r : diag_rows) diag_labels.push_back(train.labels[r]);

  // The estimators need 2 samples overall and within some class.
  std::vector<std::size_t> diag_class_counts(class_count, 0);
  for (int y : diag_labels) ++diag_class_counts[static_cast<std::size_t>(y)];
  const bool diag_supported =
      diag_labels.size() >= 2 &&
      std::any_of(diag_class_counts.begin(), diag_class_counts.end(),
                  [](std::size_t c) { return c >= 2; });

  TrainingOutput out;
  out.best_model = model;

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;

  for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
    model.sgd.learning_rate = epoch_learning_rate(opt, epoch);
    shuffle_rng.shuffle(order);

    double cls_sum = 0.0;
    double reg_sum = 0.0;
    try {
      for (std::size_t start = 0; start < n; start += opt.batch_size) {
        const std::size_t end = std::min(n, start + opt.batch_size);
        const std::span<const std::size_t> batch_rows(order.data() + start, end - start);
        const RealMatrix xb = gather_rows(train.inputs, batch_rows);
        std::vector<int> yb;
        yb.reserve(batch_rows.size());
        for (std::size_t r : batch_rows) yb.push_back(train.labels[r]);

        ForwardCache cache = forward_cached(model.extractor, xb);
        const RealMatrix& features = cache.features();

        CeResult ce = ce_loss(model.head, features, yb);
        if (!std::isfinite(ce.loss)) {
          throw NumericError("non-finite classification loss");
        }
        PenaltyResult pen = penalty(reg, features, yb, noise_rng);

        RealMatrix grad_features = std::move(ce.grad_features);
        if (lambda != 0.0 && pen.value != 0.0) {
          for (std::size_t i = 0; i < grad_features.values().size(); ++i) {
            grad_features.values()[i] += lambda * pen.grad_features.values()[i];
          }
        }

        ModelGrads grads;
        grads.extractor = backprop_features(model.extractor, cache, grad_features);
        grads.head = std::move(ce.grad_head);

        double reg_value = pen.value;
        if (reg.kind() == RegKind::L2SP && lambda != 0.0) {
          const L2spResult l2 = l2sp_penalty(model.extractor, *reg.source_extractor, model.head,
                                             reg.spec.l2sp_head_weight);
          reg_value = l2.value;
          for (std::size_t l = 0; l < grads.extractor.layers.size(); ++l) {
            LayerParams& g = grads.extractor.layers[l];
            const LayerParams& lg = l2.extractor.layers[l];
            for (std::size_t i = 0; i < g.weight.values().size(); ++i) {
              g.weight.values()[i] += lambda * lg.weight.values()[i];
            }
            for (std::size_t i = 0; i < g.bias.size(); ++i) {
              g.bias[i] += lambda * lg.bias[i];
            }
          }
          for (std::size_t i = 0; i < grads.head.values().size(); ++i) {
            grads.head.values()[i] += lambda * l2.head.values()[i];
          }
        }

        sgd_step(model, grads);
        // Prior hook consumes the step's features, detached from the graph.
        post_step_hook(reg, features, yb);

        const auto weight = static_cast<double>(batch_rows.size());
        cls_sum += ce.loss * weight;
        reg_sum += lambda * reg_value * weight;
      }
    } catch (const NumericError& e) {
      throw NumericError("training diverged at epoch " + std::to_string(epoch) + ": " + e.what());
    }

    MetricsRow row;
    row.epoch = epoch;
    row.loss_cls = cls_sum / static_cast<double>(n);
    row.loss_reg = reg_sum / static_cast<double>(n);
    row.train_loss = row.loss_cls + row.loss_reg;
    row.train_accuracy = dataset_accuracy(model, train);
    if (data.val.size() > 0) row.val_accuracy = dataset_accuracy(model, data.val);
    if (data.test.size() > 0) row.test_accuracy = dataset_accuracy(model, data.test);
    if (reg.kind() == RegKind::AdaRand) row.loss_ada = ada_objective(*reg.prior);

    if (diag_supported) {
      const RealMatrix diag_features = extract_features(model.extractor, diag_inputs);
      row.diag = compute_report(model.head, diag_features, diag_labels, class_count);
    }

    out.metrics.push_back(std::move(row));
    out.epoch_param_hash.push_back(model_fingerprint(model));

    if (data.val.size() > 0) {
      const double val_acc = *out.metrics.back().val_accuracy;
      if (!out.best_val_accuracy.has_value() || val_acc > *out.best_val_accuracy) {
        out.best_val_accuracy = val_acc;
        out.best_epoch = epoch;
        out.best_model = model;
      }
    } else {
      out.best_epoch = epoch;
      out.best_model = model;
    }
  }
  return out;
}

void require_classes_present(const Dataset& train, const std::string& context) {
  std::vector<std::size_t> counts(train.class_count, 0);
  for (int y : train.labels) ++counts[static_cast<std::size_t>(y)];
  std::string missing;
  for (std::size_t k = 0; k < counts.size(); ++k) {
    if (counts[k] == 0) {
      if (!missing.empty()) missing += ", ";
      missing += std::to_string(k);
    }
  }
  if (!missing.empty()) {
    throw ContractViolation(context + ": training data is missing classes: " + missing);
  }
}

std::uint64_t combine_hashes(const std::vector<std::uint64_t>& hashes) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (std::uint64_t v : hashes) {
    for (int b = 0; b < 8; ++b) {
      h ^= (v >> (8 * b)) & 0xFF;
      h *= 0x100000001B3ULL;
    }
  }
  return h;
}

}  // namespace

PretrainResult pretrain(const ExperimentConfig& config) {
  if (config.reg.kind != RegKind::FT) {
    throw ContractViolation("pretrain: reg kind must be 'ft', got " +
                            reg_kind_name(config.reg.kind));
  }
  const SplitDataset data = load_dataset(config.dataset, config.seeds.data, TaskSide::Source);

  RngStream init_rng(config.seeds.init, StreamId::Init);
  SgdConfig sgd{config.optimizer.learning_rate, config.optimizer.momentum,
                config.optimizer.nesterov};
  ExtractorParams extractor = init_extractor(data.train.inputs.cols(), config.model.hidden_widths,
                                             config.model.feature_dim, init_rng);
  HeadMatrix head = init_head(config.model.feature_dim, data.train.class_count, init_rng);
  ModelState model = make_model_state(std::move(extractor), std::move(head), sgd);

  RegState reg;
  reg.spec = config.reg;
  TrainingOutput out =
      run_training(model, reg, data, config.optimizer, config.seeds,
                   config.effective_pretrain_epochs());

  PretrainResult result;
  result.model = std::move(model);  // final parameters, not best-val
  result.metrics = std::move(out.metrics);
  return result;
}

FinetuneResult finetune(const ExperimentConfig& config, const ModelState& pretrained) {
  if (pretrained.extractor.feature_dim() != config.model.feature_dim) {
    throw ContractViolation("finetune: checkpoint feature dim " +
                            std::to_string(pretrained.extractor.feature_dim()) +
                            " does not match config feature_dim " +
                            std::to_string(config.model.feature_dim));
  }
  const SplitDataset data = load_dataset(config.dataset, config.seeds.data, TaskSide::Target);
  if (data.train.inputs.cols() != pretrained.extractor.input_dim()) {
    throw ContractViolation("finetune: dataset input width does not match checkpoint");
  }
  if (is_conditional_kind(config.reg.kind)) {
    require_classes_present(data.train, "finetune (" + reg_kind_name(config.reg.kind) + ")");
  }

  RngStream init_rng(config.seeds.init, StreamId::Init);
  SgdConfig sgd{config.optimizer.learning_rate, config.optimizer.momentum,
                config.optimizer.nesterov};
  ModelState model = make_model_state(
      pretrained.extractor, init_head(config.model.feature_dim, data.train.class_count, init_rng),
      sgd);

  const FeatureSnapshot snapshot = snapshot_features(pretrained, data.train.inputs);
  RegState reg = build_state(config.reg, pretrained, snapshot, data.train.labels,
                             data.train.class_count);

  TrainingOutput out =
      run_training(model, reg, data, config.optimizer, config.seeds, config.optimizer.epochs);

  FinetuneResult result;
  result.model = std::move(out.best_model);
  result.metrics = std::move(out.metrics);
  result.best_epoch = out.best_epoch;
  result.best_val_accuracy = out.best_val_accuracy;
  result.epoch_param_hash = std::move(out.epoch_param_hash);
  if (reg.prior.has_value()) result.prior = std::move(reg.prior);
  if (data.test.size() > 0) {
    result.test_accuracy = dataset_accuracy(result.model, data.test);
  }
  return result;
}

std::string pca_csv(const RealMatrix& features, std::span<const int> labels) {
  const Pca2Result pca = pca2(features);
  std::string out = "pc1,pc2,label\n";
  for (std::size_t i = 0; i < pca.projection.rows(); ++i) {
    out += format_double(pca.projection(i, 0));
    out += ',' + format_double(pca.projection(i, 1));
    out += ',' + std::to_string(labels[i]);
    out += '\n';
  }
  return out;
}

void run_pretrain_cmd(const ExperimentConfig& config, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  // Pretraining is always a plain source-task fit, whatever regularizer
  // the config selects for fine-tuning later.
  ExperimentConfig effective = config;
  effective.reg = RegSpec{};
  effective.output_dir = out_dir.string();
  write_text_file(out_dir / "config.resolved.json", resolved_config_json(effective));

  PretrainResult result = pretrain(effective);
  save_model_checkpoint(out_dir / "pretrained.json", result.model.extractor);
  write_text_file(out_dir / "metrics.csv", metrics_to_csv(result.metrics));

  json summary;
  summary["command"] = "pretrain";
  summary["epochs"] = config.effective_pretrain_epochs();
  summary["checkpoint"] = "pretrained.json";
  summary["extractor_fingerprint"] = to_hex(extractor_fingerprint(result.model.extractor));
  if (!result.metrics.empty()) {
    summary["final_train_accuracy"] = result.metrics.back().train_accuracy;
    if (result.metrics.back().val_accuracy.has_value()) {
      summary["final_val_accuracy"] = *result.metrics.back().val_accuracy;
    }
  }
  write_text_file(out_dir / "summary.json", summary.dump(2) + "\n");
}

void run_finetune_cmd(const ExperimentConfig& config, const std::filesystem::path& checkpoint,
                      const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  ExperimentConfig effective = config;
  effective.output_dir = out_dir.string();
  write_text_file(out_dir / "config.resolved.json", resolved_config_json(effective));

  const LoadedCheckpoint loaded = load_model_checkpoint(checkpoint);
  HeadMatrix head = loaded.head.value_or(HeadMatrix{RealMatrix(
      loaded.extractor.feature_dim(), 1)});
  const ModelState pretrained =
      make_model_state(loaded.extractor, std::move(head), SgdConfig{});

  FinetuneResult result = finetune(config, pretrained);

  write_text_file(out_dir / "metrics.csv", metrics_to_csv(result.metrics));
  save_model_checkpoint(out_dir / "model.json", result.model.extractor, &result.model.head);
  if (result.prior.has_value()) {
    save_prior_checkpoint(out_dir / "prior.json", *result.prior);
  }

  json summary;
  summary["command"] = "finetune";
  summary["kind"] = reg_kind_name(config.reg.kind);
  summary["lambda"] = config.reg.lambda;
  summary["epochs"] = config.optimizer.epochs;
  summary["best_epoch"] = result.best_epoch;
  if (result.best_val_accuracy.has_value()) {
    summary["best_val_accuracy"] = *result.best_val_accuracy;
  }
  if (result.test_accuracy.has_value()) {
    summary["test_accuracy"] = *result.test_accuracy;
  }
  if (!result.metrics.empty()) {
    summary["final_train_accuracy"] = result.metrics.back().train_accuracy;
  }
  summary["param_hash"] = to_hex(model_fingerprint(result.model));
  summary["trajectory_hash"] = to_hex(combine_hashes(result.epoch_param_hash));
  write_text_file(out_dir / "summary.json", summary.dump(2) + "\n");

  if (config.export_pca) {
    const SplitDataset data = load_dataset(config.dataset, config.seeds.data, TaskSide::Target);
    const Dataset& viz = data.test.size() >= 3 ? data.test : data.train;
    const RealMatrix features = extract_features(result.model.extractor, viz.inputs);
    write_text_file(out_dir / "pca.csv", pca_csv(features, viz.labels));
  }
}

void run_diag_cmd(const std::filesystem::path& checkpoint, const std::filesystem::path& data_csv,
                  const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  const LoadedCheckpoint loaded = load_model_checkpoint(checkpoint);
  const Dataset data = load_csv_dataset(data_csv);
  if (data.inputs.cols() != loaded.extractor.input_dim()) {
    throw ContractViolation("diag: dataset width " + std::to_string(data.inputs.cols()) +
                            " does not match checkpoint input dim " +
                            std::to_string(loaded.extractor.input_dim()));
  }
  const RealMatrix features = extract_features(loaded.extractor, data.inputs);

  json report;
  report["samples"] = data.size();
  report["feature_dim"] = features.cols();
  report["mean_feature_norm"] = mean_squared_feature_norm(features);
  const double entropy = entropy_estimate(features);
  const double cond = conditional_entropy(features, data.labels, data.class_count);
  report["entropy"] = entropy;
  report["cond_entropy"] = cond;
  report["mutual_info"] = entropy - cond;
  if (loaded.head.has_value() && loaded.head->class_count() >= data.class_count) {
    report["mean_ce_grad_norm"] = ce_grad_norm(*loaded.head, features, data.labels).direct;
  } else {
    report["mean_ce_grad_norm"] = nullptr;
  }
  write_text_file(out_dir / "diagnostics.json", report.dump(2) + "\n");
  write_text_file(out_dir / "pca.csv", pca_csv(features, data.labels));
}

}  // namespace adarand
