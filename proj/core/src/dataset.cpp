#include "adarand/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <utility>

#include "adarand/errors.hpp"
#include "adarand/rng.hpp"
#include "adarand/text_io.hpp"

namespace adarand {
namespace {

Dataset take_subset(const Dataset& data, const std::vector<std::size_t>& rows) {
  Dataset out;
  out.class_count = data.class_count;
  out.inputs = RealMatrix(rows.size(), data.inputs.cols());
  out.labels.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < data.inputs.cols(); ++j) {
      out.inputs(i, j) = data.inputs(rows[i], j);
    }
    out.labels.push_back(data.labels[rows[i]]);
  }
  return out;
}

std::vector<std::vector<std::size_t>> indices_by_class(const Dataset& data) {
  std::vector<std::vector<std::size_t>> by_class(data.class_count);
  for (std::size_t i = 0; i < data.labels.size(); ++i) {
    by_class[static_cast<std::size_t>(data.labels[i])].push_back(i);
  }
  return by_class;
}

// Per-class 9:1 split; every class keeps at least one training sample.
std::pair<Dataset, Dataset> split_train_val(const Dataset& pool, std::uint64_t split_seed) {
  RngStream rng(derive_seed(split_seed, "train-val-split"), StreamId::Data);
  std::vector<std::size_t> train_rows;
  std::vector<std::size_t> val_rows;
  for (auto& rows : indices_by_class(pool)) {
    rng.shuffle(rows);
    std::size_t n_train = static_cast<std::size_t>(
        std::llround(0.9 * static_cast<double>(rows.size())));
    n_train = std::clamp<std::size_t>(n_train, 1, rows.size() > 1 ? rows.size() - 1 : 1);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      (i < n_train ? train_rows : val_rows).push_back(rows[i]);
    }
  }
  std::sort(train_rows.begin(), train_rows.end());
  std::sort(val_rows.begin(), val_rows.end());
  return {take_subset(pool, train_rows), take_subset(pool, val_rows)};
}

RealMatrix blob_centers(const SyntheticSpec& spec, std::uint64_t data_seed) {
  RngStream rng(derive_seed(data_seed, "centers"), StreamId::Data);
  RealMatrix centers = normal_sample(rng, spec.class_count, spec.input_dim);
  centers *= spec.cluster_separation;
  return centers;
}

// Givens rotation on coordinate pairs (0,1), (2,3), ... plus a constant shift.
void apply_task_transform(RealMatrix& centers, const SyntheticSpec& spec) {
  const double c = std::cos(spec.rotation_angle);
  const double s = std::sin(spec.rotation_angle);
  for (std::size_t i = 0; i < centers.rows(); ++i) {
    for (std::size_t j = 0; j + 1 < centers.cols(); j += 2) {
      const double a = centers(i, j);
      const double b = centers(i, j + 1);
      centers(i, j) = c * a - s * b;
      centers(i, j + 1) = s * a + c * b;
    }
    for (std::size_t j = 0; j < centers.cols(); ++j) centers(i, j) += spec.shift;
  }
}

Dataset draw_blobs(const RealMatrix& centers, std::size_t per_class, double spread,
                   RngStream& rng) {
  const std::size_t class_count = centers.rows();
  const std::size_t dim = centers.cols();
  Dataset data;
  data.class_count = class_count;
  data.inputs = RealMatrix(class_count * per_class, dim);
  data.labels.reserve(class_count * per_class);
  std::size_t row = 0;
  for (std::size_t k = 0; k < class_count; ++k) {
    for (std::size_t i = 0; i < per_class; ++i, ++row) {
      for (std::size_t j = 0; j < dim; ++j) {
        data.inputs(row, j) = centers(k, j) + spread * rng.next_normal();
      }
      data.labels.push_back(static_cast<int>(k));
    }
  }
  return data;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string current;
  for (char ch : line) {
    if (ch == ',') {
      fields.push_back(current);
      current.clear();
    } else if (ch != '\r') {
      current += ch;
    }
  }
  fields.push_back(current);
  return fields;
}

}  // namespace

SplitDataset generate_synthetic(const DatasetSpec& spec, std::uint64_t data_seed, TaskSide side) {
  const SyntheticSpec& syn = spec.synthetic;
  if (syn.cluster_spread <= 0.0) {
    throw ContractViolation("generate_synthetic: cluster_spread must be positive");
  }
  if (syn.class_count < 2) {
    throw ContractViolation("generate_synthetic: need at least 2 classes");
  }
  if (syn.samples_per_class < 2) {
    throw ContractViolation("generate_synthetic: need at least 2 samples per class");
  }

  RealMatrix centers = blob_centers(syn, data_seed);
  const char* points_tag = "source-points";
  const char* test_tag = "source-test-points";
  std::size_t per_class = syn.source_samples_per_class;
  if (side == TaskSide::Target) {
    apply_task_transform(centers, syn);
    points_tag = "target-points";
    test_tag = "target-test-points";
    per_class = syn.samples_per_class;
  }

  RngStream points_rng(derive_seed(data_seed, points_tag), StreamId::Data);
  Dataset pool = draw_blobs(centers, per_class, syn.cluster_spread, points_rng);

  SplitDataset out;
  std::tie(out.train, out.val) = split_train_val(pool, spec.split_seed);
  RngStream test_rng(derive_seed(data_seed, test_tag), StreamId::Data);
  out.test = draw_blobs(centers, syn.test_samples_per_class, syn.cluster_spread, test_rng);

  if (side == TaskSide::Target && spec.fraction < 1.0) {
    out.train = reduce_fraction(out.train, spec.fraction, derive_seed(spec.split_seed, "fraction"));
  }
  return out;
}

Dataset load_csv_dataset(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) {
    throw ParseError("empty dataset file: " + path.string(), 1);
  }

  const std::vector<std::string> header = split_csv_line(line);
  if (header.size() < 2 || header.back() != "label") {
    throw ParseError("header must be f0,...,f{m-1},label", 1);
  }
  const std::size_t dim = header.size() - 1;
  for (std::size_t j = 0; j < dim; ++j) {
    if (header[j] != "f" + std::to_string(j)) {
      throw ParseError("unexpected header column '" + header[j] + "', expected f" +
                           std::to_string(j),
                       1);
    }
  }

  std::vector<double> values;
  std::vector<int> labels;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::vector<std::string> fields = split_csv_line(line);
    if (fields.size() != dim + 1) {
      throw ParseError("expected " + std::to_string(dim + 1) + " fields, got " +
                           std::to_string(fields.size()),
                       line_no);
    }
    for (std::size_t j = 0; j < dim; ++j) {
      double v = 0.0;
      if (!parse_double(fields[j], v) || !std::isfinite(v)) {
        throw ParseError("non-numeric field '" + fields[j] + "'", line_no);
      }
      values.push_back(v);
    }
    long long y = 0;
    if (!parse_int(fields[dim], y) || y < 0) {
      throw ParseError("label must be a non-negative integer, got '" + fields[dim] + "'",
                       line_no);
    }
    labels.push_back(static_cast<int>(y));
  }
  if (labels.empty()) {
    throw ParseError("dataset has no data rows: " + path.string(), line_no);
  }

  const int max_label = *std::max_element(labels.begin(), labels.end());
  std::vector<bool> seen(static_cast<std::size_t>(max_label) + 1, false);
  for (int y : labels) seen[static_cast<std::size_t>(y)] = true;
  for (std::size_t k = 0; k < seen.size(); ++k) {
    if (!seen[k]) {
      throw ParseError("labels are not contiguous: class " + std::to_string(k) + " is missing");
    }
  }

  Dataset data;
  data.class_count = static_cast<std::size_t>(max_label) + 1;
  data.inputs = RealMatrix(labels.size(), dim, std::move(values));
  data.labels = std::move(labels);
  return data;
}

void save_csv_dataset(const Dataset& data, const std::filesystem::path& path) {
  std::string out;
  for (std::size_t j = 0; j < data.inputs.cols(); ++j) {
    out += "f" + std::to_string(j) + ",";
  }
  out += "label\n";
  for (std::size_t i = 0; i < data.inputs.rows(); ++i) {
    for (std::size_t j = 0; j < data.inputs.cols(); ++j) {
      out += format_double(data.inputs(i, j));
      out += ',';
    }
    out += std::to_string(data.labels[i]);
    out += '\n';
  }
  write_text_file(path, out);
}

SplitDataset load_dataset(const DatasetSpec& spec, std::uint64_t data_seed, TaskSide side) {
  if (spec.source == DatasetSpec::Source::SyntheticBlobs) {
    return generate_synthetic(spec, data_seed, side);
  }
  SplitDataset out;
  const Dataset pool = load_csv_dataset(spec.csv_path);
  std::tie(out.train, out.val) = split_train_val(pool, spec.split_seed);
  if (!spec.csv_test_path.empty()) {
    out.test = load_csv_dataset(spec.csv_test_path);
    if (out.test.inputs.cols() != pool.inputs.cols()) {
      throw ParseError("test dataset width differs from training dataset");
    }
    out.test.class_count = std::max(out.test.class_count, pool.class_count);
  } else {
    out.test.class_count = pool.class_count;
    out.test.inputs = RealMatrix(0, pool.inputs.cols());
  }
  if (side == TaskSide::Target && spec.fraction < 1.0) {
    out.train = reduce_fraction(out.train, spec.fraction, derive_seed(spec.split_seed, "fraction"));
  }
  return out;
}

Dataset reduce_fraction(const Dataset& train, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0) || fraction > 1.0) {
    throw ContractViolation("reduce_fraction: fraction must be in (0, 1]");
  }
  if (fraction == 1.0) return train;

  const std::size_t total = train.size();
  const auto target = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(total)));
  if (target == 0) {
    throw ContractViolation("reduce_fraction: fraction leaves no training samples");
  }

  auto by_class = indices_by_class(train);
  const std::size_t class_count = by_class.size();

  // Largest-remainder allocation of `target` samples across classes.
  std::vector<std::size_t> alloc(class_count, 0);
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t assigned = 0;
  for (std::size_t k = 0; k < class_count; ++k) {
    const double quota =
        static_cast<double>(target) * static_cast<double>(by_class[k].size()) /
        static_cast<double>(total);
    alloc[k] = static_cast<std::size_t>(std::floor(quota));
    assigned += alloc[k];
    remainders.emplace_back(quota - std::floor(quota), k);
  }
  std::sort(remainders.begin(), remainders.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  for (std::size_t i = 0; assigned < target; ++i) {
    const std::size_t k = remainders[i % remainders.size()].second;
    if (alloc[k] < by_class[k].size()) {
      ++alloc[k];
      ++assigned;
    }
  }
  // Keep every class populated whenever the target allows it.
  if (target >= class_count) {
    for (std::size_t k = 0; k < class_count; ++k) {
      while (alloc[k] == 0) {
        auto donor = std::max_element(alloc.begin(), alloc.end());
        if (*donor <= 1) break;
        --*donor;
        ++alloc[k];
      }
    }
  }

  RngStream rng(seed, StreamId::Data);
  std::vector<std::size_t> keep;
  for (std::size_t k = 0; k < class_count; ++k) {
    auto& rows = by_class[k];
    rng.shuffle(rows);
    for (std::size_t i = 0; i < alloc[k]; ++i) keep.push_back(rows[i]);
  }
  std::sort(keep.begin(), keep.end());
  return take_subset(train, keep);
}

}  // namespace adarand
