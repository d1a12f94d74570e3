#ifndef ADARAND_DATASET_HPP
#define ADARAND_DATASET_HPP

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "adarand/matrix.hpp"

namespace adarand {

struct Dataset {
  RealMatrix inputs;        // [N x m]
  std::vector<int> labels;  // in [0, class_count)
  std::size_t class_count = 0;

  std::size_t size() const { return labels.size(); }
};

/// Source and target tasks share class centers; the target task draws
/// fresh blobs around transformed (rotated + shifted) centers so the
/// pretrained extractor is related but mismatched.
enum class TaskSide { Source, Target };

struct SyntheticSpec {
  std::size_t input_dim = 16;
  std::size_t class_count = 10;
  std::size_t samples_per_class = 22;         // target train+val pool per class
  std::size_t test_samples_per_class = 50;
  std::size_t source_samples_per_class = 200; // pretraining pool per class
  double cluster_spread = 1.0;
  double cluster_separation = 1.0;            // scale of random class centers
  double rotation_angle = 0.5;                // Givens rotation on coordinate pairs
  double shift = 1.0;                         // added to every coordinate
};

struct DatasetSpec {
  enum class Source { SyntheticBlobs, CsvFile };
  Source source = Source::SyntheticBlobs;
  SyntheticSpec synthetic;
  std::string csv_path;
  std::string csv_test_path;  // optional
  double fraction = 1.0;      // training-set reduction, (0, 1]
  std::uint64_t split_seed = 13;
};

struct SplitDataset {
  Dataset train;
  Dataset val;
  Dataset test;
};

/// Deterministic blobs for one task side. Train/val are split 9:1 per
/// class on the split seed; the fraction reduction applies to the train
/// split only and leaves val/test untouched.
SplitDataset generate_synthetic(const DatasetSpec& spec, std::uint64_t data_seed,
                                TaskSide side = TaskSide::Target);

/// Expects header f0,...,f{m-1},label with contiguous integer labels
/// starting at 0. Parse errors carry the offending line number.
Dataset load_csv_dataset(const std::filesystem::path& path);
void save_csv_dataset(const Dataset& data, const std::filesystem::path& path);

/// Dispatches on the spec source. CSV datasets get the same stratified
/// 9:1 split and fraction treatment as synthetic ones.
SplitDataset load_dataset(const DatasetSpec& spec, std::uint64_t data_seed,
                          TaskSide side = TaskSide::Target);

/// Keeps exactly floor(N * fraction) training samples, allocated across
/// classes by largest remainder so no class empties out while the total
/// is exact. Selection is a seeded per-class permutation prefix, so
/// smaller fractions are nested inside larger ones.
Dataset reduce_fraction(const Dataset& train, double fraction, std::uint64_t seed);

}  // namespace adarand

#endif
