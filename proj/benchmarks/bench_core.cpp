#include <benchmark/benchmark.h>

#include "adarand/diagnostics.hpp"
#include "adarand/model.hpp"
#include "adarand/prior.hpp"
#include "adarand/rng.hpp"

namespace {

using namespace adarand;

RealMatrix random_features(std::size_t n, std::size_t d) {
  RngStream rng(7, StreamId::Data);
  return normal_sample(rng, n, d);
}

void BM_EntropyEstimate(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const RealMatrix features = random_features(n, 8);
  for (auto _ : state) {
    benchmark::DoNotOptimize(entropy_estimate(features));
  }
}
BENCHMARK(BM_EntropyEstimate)->Arg(128)->Arg(512);

void BM_GaussianSample(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  RngStream rng(11, StreamId::Noise);
  RealMatrix mu(n, 8);
  RealMatrix sigma2(n, 8);
  for (double& v : sigma2.values()) v = 1.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(gaussian_sample(rng, mu, sigma2));
  }
}
BENCHMARK(BM_GaussianSample)->Arg(16)->Arg(256);

void BM_ForwardBackward(benchmark::State& state) {
  RngStream init(3, StreamId::Init);
  const ExtractorParams extractor = init_extractor(16, {32, 32}, 8, init);
  const RealMatrix x = random_features(16, 16);
  const RealMatrix grad = random_features(16, 8);
  for (auto _ : state) {
    ForwardCache cache = forward_cached(extractor, x);
    benchmark::DoNotOptimize(backprop_features(extractor, cache, grad));
  }
}
BENCHMARK(BM_ForwardBackward);

void BM_AdaGradient(benchmark::State& state) {
  const auto k = static_cast<std::size_t>(state.range(0));
  RngStream rng(5, StreamId::Data);
  ConditionalPrior prior;
  prior.mu = normal_sample(rng, k, 8);
  prior.mu_bar = normal_sample(rng, k, 8);
  prior.sigma2 = RealMatrix(k, 8);
  for (auto _ : state) {
    benchmark::DoNotOptimize(ada_gradient(prior));
  }
}
BENCHMARK(BM_AdaGradient)->Arg(10)->Arg(100);

}  // namespace

BENCHMARK_MAIN();
