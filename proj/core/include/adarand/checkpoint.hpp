#ifndef ADARAND_CHECKPOINT_HPP
#define ADARAND_CHECKPOINT_HPP

#include <filesystem>
#include <optional>

#include "adarand/model.hpp"
#include "adarand/prior.hpp"

namespace adarand {

/// Versioned JSON record of layer shapes and flattened parameter data;
/// numbers round-trip exactly at 64-bit precision.
struct LoadedCheckpoint {
  ExtractorParams extractor;
  std::optional<HeadMatrix> head;
};

void save_model_checkpoint(const std::filesystem::path& path, const ExtractorParams& extractor,
                           const HeadMatrix* head = nullptr);
LoadedCheckpoint load_model_checkpoint(const std::filesystem::path& path);

/// Same container format, storing mu, sigma2, mu_bar, alpha, xi.
void save_prior_checkpoint(const std::filesystem::path& path, const ConditionalPrior& prior);
ConditionalPrior load_prior_checkpoint(const std::filesystem::path& path);

}  // namespace adarand

#endif
