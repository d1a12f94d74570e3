#include "adarand/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <utility>

#include "adarand/errors.hpp"

namespace adarand {
namespace {

constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;

// SplitMix64 finalizer; statistically strong enough to key counters.
std::uint64_t mix64(std::uint64_t z) {
  z += kGamma;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

}  // namespace

std::string stream_name(StreamId id) {
  switch (id) {
    case StreamId::Init: return "init";
    case StreamId::Shuffle: return "shuffle";
    case StreamId::Noise: return "noise";
    case StreamId::Data: return "data";
  }
  return "unknown";
}

std::uint64_t derive_seed(std::uint64_t base, const std::string& tag) {
  return mix64(base ^ fnv1a(tag));
}

RngStream::RngStream(std::uint64_t seed, StreamId id)
    : seed_(seed), id_(id), key_(mix64(mix64(seed) ^ fnv1a(stream_name(id)))) {}

std::uint64_t RngStream::next_u64() {
  ++counter_;
  return mix64(key_ + counter_ * kGamma);
}

double RngStream::next_double() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::next_normal() {
  // u1 in (0, 1] keeps the log finite.
  const double u1 = 1.0 - next_double();
  const double u2 = next_double();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t RngStream::next_below(std::uint64_t n) {
  if (n == 0) {
    throw ContractViolation("RngStream::next_below: n must be positive");
  }
  const std::uint64_t rem = (0 - n) % n;  // 2^64 mod n
  while (true) {
    const std::uint64_t u = next_u64();
    if (rem == 0 || u < 0 - rem) return u % n;
  }
}

void RngStream::shuffle(std::vector<std::size_t>& indices) {
  for (std::size_t i = indices.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(next_below(i));
    std::swap(indices[i - 1], indices[j]);
  }
}

std::vector<std::size_t> RngStream::sample_without_replacement(std::size_t n, std::size_t k) {
  if (k > n) {
    throw ContractViolation("sample_without_replacement: k exceeds n");
  }
  std::vector<std::size_t> pool(n);
  for (std::size_t i = 0; i < n; ++i) pool[i] = i;
  // Partial Fisher-Yates: the first k slots end up as the sample.
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(next_below(n - i));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(k);
  std::sort(pool.begin(), pool.end());
  return pool;
}

RealMatrix gaussian_sample(RngStream& rng, const RealMatrix& mu, const RealMatrix& sigma2) {
  require_same_shape(mu, sigma2, "gaussian_sample");
  for (double v : sigma2.values()) {
    if (v < 0.0) {
      throw ContractViolation("gaussian_sample: negative variance entry");
    }
  }
  RealMatrix out(mu.rows(), mu.cols());
  auto o = out.values();
  auto m = mu.values();
  auto s = sigma2.values();
  for (std::size_t i = 0; i < o.size(); ++i) {
    o[i] = m[i] + std::sqrt(s[i]) * rng.next_normal();
  }
  return out;
}

RealMatrix uniform_sample(RngStream& rng, std::size_t rows, std::size_t cols) {
  if (rows == 0 || cols == 0) {
    throw ContractViolation("uniform_sample: rows and cols must be >= 1");
  }
  RealMatrix out(rows, cols);
  for (double& v : out.values()) v = rng.next_double();
  return out;
}

RealMatrix normal_sample(RngStream& rng, std::size_t rows, std::size_t cols) {
  if (rows == 0 || cols == 0) {
    throw ContractViolation("normal_sample: rows and cols must be >= 1");
  }
  RealMatrix out(rows, cols);
  for (double& v : out.values()) v = rng.next_normal();
  return out;
}

}  // namespace adarand
