#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "adarand/errors.hpp"
#include "adarand/gradcheck.hpp"
#include "adarand/matrix.hpp"
#include "adarand/rng.hpp"

using namespace adarand;

TEST_SUITE_BEGIN("numerics");

TEST_CASE("matrix shape and finiteness contracts") {
  CHECK_THROWS_AS(RealMatrix(2, 2, {1.0, 2.0, 3.0}), ContractViolation);
  CHECK_THROWS_AS(RealMatrix(1, 2, {1.0, std::nan("")}), NumericError);
  CHECK_THROWS_AS(matmul(RealMatrix(2, 3), RealMatrix(2, 3)), ContractViolation);

  const RealMatrix a = RealMatrix::from_rows({{1.0, 2.0}, {3.0, 4.0}});
  const RealMatrix b = RealMatrix::from_rows({{5.0, 6.0}, {7.0, 8.0}});
  const RealMatrix c = matmul(a, b);
  CHECK(c(0, 0) == 19.0);
  CHECK(c(0, 1) == 22.0);
  CHECK(c(1, 0) == 43.0);
  CHECK(c(1, 1) == 50.0);
  const RealMatrix t = transpose(a);
  CHECK(t(0, 1) == 3.0);
}

TEST_CASE("identical (seed, stream-id) replays the identical sequence") {
  RngStream a(42, StreamId::Noise);
  RngStream b(42, StreamId::Noise);
  for (int i = 0; i < 100; ++i) {
    CHECK(a.next_u64() == b.next_u64());
  }

  RngStream c(42, StreamId::Shuffle);
  RngStream d(43, StreamId::Noise);
  RngStream e(42, StreamId::Noise);
  bool all_same_stream = true;
  bool all_same_seed = true;
  for (int i = 0; i < 16; ++i) {
    const std::uint64_t base = e.next_u64();
    all_same_stream = all_same_stream && (c.next_u64() == base);
    all_same_seed = all_same_seed && (d.next_u64() == base);
  }
  CHECK_FALSE(all_same_stream);
  CHECK_FALSE(all_same_seed);
}

TEST_CASE("distinct stream-ids with the same seed are uncorrelated") {
  RngStream a(7, StreamId::Init);
  RngStream b(7, StreamId::Data);
  const int n = 10000;
  double sum_ab = 0.0, sum_a = 0.0, sum_b = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = a.next_double();
    const double y = b.next_double();
    sum_ab += x * y;
    sum_a += x;
    sum_b += y;
  }
  // Sample correlation of uniforms; 3 sigma for n=1e4 is about 0.03.
  const double cov = sum_ab / n - (sum_a / n) * (sum_b / n);
  CHECK(std::abs(cov / (1.0 / 12.0)) < 0.05);
}

TEST_CASE("uniform_sample range, determinism and mean") {
  RngStream rng(5, StreamId::Data);
  const RealMatrix u = uniform_sample(rng, 200, 500);  // 1e5 draws
  double mean = 0.0;
  for (double v : u.values()) {
    CHECK(v >= 0.0);
    CHECK(v < 1.0);
    mean += v;
  }
  mean /= static_cast<double>(u.size());
  CHECK(std::abs(mean - 0.5) < 0.01);

  RngStream r1(99, StreamId::Data);
  RngStream r2(99, StreamId::Data);
  const RealMatrix m1 = uniform_sample(r1, 4, 7);
  const RealMatrix m2 = uniform_sample(r2, 4, 7);
  for (std::size_t i = 0; i < m1.size(); ++i) {
    CHECK(m1.values()[i] == m2.values()[i]);
  }

  CHECK_THROWS_AS(uniform_sample(rng, 0, 3), ContractViolation);
}

TEST_CASE("gaussian_sample zero-variance limit is exact") {
  RngStream rng(1, StreamId::Noise);
  const RealMatrix mu = RealMatrix::from_rows({{3.0, -1.0}});
  const RealMatrix sigma2(1, 2);
  const RealMatrix z = gaussian_sample(rng, mu, sigma2);
  CHECK(z(0, 0) == 3.0);
  CHECK(z(0, 1) == -1.0);
}

TEST_CASE("gaussian_sample contract errors") {
  RngStream rng(1, StreamId::Noise);
  CHECK_THROWS_AS(gaussian_sample(rng, RealMatrix(1, 2), RealMatrix(2, 1)), ContractViolation);
  CHECK_THROWS_AS(
      gaussian_sample(rng, RealMatrix(1, 1), RealMatrix::from_rows({{-0.5}})),
      ContractViolation);
}

TEST_CASE("gaussian_sample statistical oracle at 1e5 draws") {
  // 3-sigma bands: mean se = 1/sqrt(1e5) ~ 0.0032, so +-0.02 is ~6 sigma;
  // variance se ~ sqrt(2/N) ~ 0.0045, so [0.97, 1.03] is ~6 sigma.
  RngStream rng(12345, StreamId::Noise);
  const RealMatrix mu(200, 500);
  RealMatrix sigma2(200, 500);
  for (double& v : sigma2.values()) v = 1.0;
  const RealMatrix z = gaussian_sample(rng, mu, sigma2);
  double mean = 0.0;
  for (double v : z.values()) mean += v;
  mean /= static_cast<double>(z.size());
  double var = 0.0;
  for (double v : z.values()) var += (v - mean) * (v - mean);
  var /= static_cast<double>(z.size() - 1);
  CHECK(std::abs(mean) < 0.02);
  CHECK(var > 0.97);
  CHECK(var < 1.03);
}

TEST_CASE("gaussian scaling equals mu plus scaled standard draws") {
  const RealMatrix mu = RealMatrix::from_rows({{0.5, -2.0, 7.0}});
  RealMatrix sigma2(1, 3);
  for (double& v : sigma2.values()) v = 4.0;  // c = 2

  RngStream r1(321, StreamId::Noise);
  const RealMatrix scaled = gaussian_sample(r1, mu, sigma2);

  RngStream r2(321, StreamId::Noise);
  RealMatrix ones(1, 3);
  for (double& v : ones.values()) v = 1.0;
  const RealMatrix standard = gaussian_sample(r2, RealMatrix(1, 3), ones);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(scaled.values()[i] == mu.values()[i] + 2.0 * standard.values()[i]);
  }
}

TEST_CASE("finite_diff_grad on analytic quadratics") {
  const auto sum_squares = [](const RealMatrix& m) {
    double s = 0.0;
    for (double v : m.values()) s += v * v;
    return s;
  };
  const RealMatrix at = RealMatrix::from_rows({{1.0, 2.0}});
  const RealMatrix grad = finite_diff_grad(sum_squares, at, 1e-5);
  CHECK(std::abs(grad(0, 0) - 2.0) < 1e-6);
  CHECK(std::abs(grad(0, 1) - 4.0) < 1e-6);

  const RealMatrix zero_grad = finite_diff_grad([](const RealMatrix&) { return 3.5; }, at);
  CHECK(zero_grad(0, 0) == 0.0);
  CHECK(zero_grad(0, 1) == 0.0);

  CHECK_THROWS_AS(finite_diff_grad(sum_squares, at, 0.0), ContractViolation);
  CHECK_THROWS_AS(
      finite_diff_grad([](const RealMatrix&) { return std::nan(""); }, at),
      NumericError);
}

TEST_CASE("shuffle and subsample are deterministic and valid") {
  RngStream r1(77, StreamId::Shuffle);
  RngStream r2(77, StreamId::Shuffle);
  std::vector<std::size_t> a(50), b(50);
  for (std::size_t i = 0; i < 50; ++i) a[i] = b[i] = i;
  r1.shuffle(a);
  r2.shuffle(b);
  CHECK(a == b);
  std::vector<std::size_t> sorted = a;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < 50; ++i) CHECK(sorted[i] == i);

  RngStream r3(78, StreamId::Data);
  const auto sample = r3.sample_without_replacement(100, 10);
  CHECK(sample.size() == 10);
  for (std::size_t i = 1; i < sample.size(); ++i) {
    CHECK(sample[i - 1] < sample[i]);
    CHECK(sample[i] < 100);
  }
}

TEST_SUITE_END();
