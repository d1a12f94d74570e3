#ifndef ADARAND_RNG_HPP
#define ADARAND_RNG_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "adarand/matrix.hpp"

namespace adarand {

/// Named substreams. Each consumer owns its stream, so ablations can
/// change one source of randomness without disturbing the others.
enum class StreamId { Init, Shuffle, Noise, Data };

std::string stream_name(StreamId id);

/// Derives an unrelated child seed from a base seed and a purpose tag.
std::uint64_t derive_seed(std::uint64_t base, const std::string& tag);

/// Counter-based splittable PRNG keyed by (seed, stream-id, counter).
/// Identical (seed, stream-id) replays the identical draw sequence.
class RngStream {
public:
  RngStream(std::uint64_t seed, StreamId id);

  std::uint64_t seed() const { return seed_; }
  StreamId id() const { return id_; }

  std::uint64_t next_u64();
  /// Uniform double in [0, 1).
  double next_double();
  /// Standard normal via the Box-Muller transform; consumes exactly two
  /// uniform draws per value.
  double next_normal();
  /// Uniform integer in [0, n), rejection-sampled (exact, no modulo bias).
  std::uint64_t next_below(std::uint64_t n);

  /// In-place Fisher-Yates shuffle of an index vector.
  void shuffle(std::vector<std::size_t>& indices);
  /// Sorted sample of k distinct indices from [0, n).
  std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k);

private:
  std::uint64_t seed_;
  StreamId id_;
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

/// Element-wise mu + sqrt(sigma2) * n with n standard normal draws.
RealMatrix gaussian_sample(RngStream& rng, const RealMatrix& mu, const RealMatrix& sigma2);

/// Matrix of i.i.d. draws in [0, 1).
RealMatrix uniform_sample(RngStream& rng, std::size_t rows, std::size_t cols);

/// Matrix of i.i.d. standard normal draws.
RealMatrix normal_sample(RngStream& rng, std::size_t rows, std::size_t cols);

}  // namespace adarand

#endif
