#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "adarand/errors.hpp"
#include "adarand/gradcheck.hpp"
#include "adarand/prior.hpp"
#include "adarand/rng.hpp"

using namespace adarand;

namespace {

// Independent Welford-style oracle for class-wise mean and population variance.
void classwise_oracle(const RealMatrix& features, const std::vector<int>& labels,
                      std::size_t class_count, RealMatrix& mean_out, RealMatrix& var_out) {
  const std::size_t d = features.cols();
  mean_out = RealMatrix(class_count, d);
  var_out = RealMatrix(class_count, d);
  std::vector<std::size_t> counts(class_count, 0);
  RealMatrix m2(class_count, d);
  for (std::size_t i = 0; i < features.rows(); ++i) {
    const auto k = static_cast<std::size_t>(labels[i]);
    ++counts[k];
    for (std::size_t j = 0; j < d; ++j) {
      const double delta = features(i, j) - mean_out(k, j);
      mean_out(k, j) += delta / static_cast<double>(counts[k]);
      m2(k, j) += delta * (features(i, j) - mean_out(k, j));
    }
  }
  for (std::size_t k = 0; k < class_count; ++k) {
    for (std::size_t j = 0; j < d; ++j) var_out(k, j) = m2(k, j) / static_cast<double>(counts[k]);
  }
}

ConditionalPrior random_prior(std::uint64_t seed, std::size_t k, std::size_t d) {
  RngStream rng(seed, StreamId::Data);
  ConditionalPrior prior;
  prior.mu = normal_sample(rng, k, d);
  prior.mu_bar = normal_sample(rng, k, d);
  prior.sigma2 = RealMatrix(k, d);
  for (double& v : prior.sigma2.values()) v = 0.5 + rng.next_double();
  prior.alpha = 0.5;
  prior.xi = 0.1;
  return prior;
}

bool bit_equal(const RealMatrix& a, const RealMatrix& b) {
  if (!a.same_shape(b)) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a.values()[i] != b.values()[i]) return false;
  }
  return true;
}

}  // namespace

TEST_SUITE_BEGIN("priors");

TEST_CASE("two-point class mean and population variance") {
  const RealMatrix features = RealMatrix::from_rows({{0.0, 0.0}, {2.0, 2.0}});
  const std::vector<int> labels{0, 0};
  const ConditionalPrior prior = init_from_features(features, labels, 1, 0.5, 0.1);
  CHECK(prior.mu(0, 0) == 1.0);
  CHECK(prior.mu(0, 1) == 1.0);
  CHECK(prior.sigma2(0, 0) == 1.0);
  CHECK(prior.sigma2(0, 1) == 1.0);
  CHECK(bit_equal(prior.mu_bar, prior.mu));
}

TEST_CASE("singleton classes land on the variance floor") {
  const RealMatrix features = RealMatrix::from_rows({{4.0, -2.0}});
  const std::vector<int> labels{0};
  const ConditionalPrior prior = init_from_features(features, labels, 1, 0.5, 0.1);
  CHECK(prior.sigma2(0, 0) == kVarianceFloor);
  CHECK(prior.sigma2(0, 1) == kVarianceFloor);
}

TEST_CASE("init_from_features lists every empty class") {
  const RealMatrix features = RealMatrix::from_rows({{1.0, 1.0}});
  const std::vector<int> labels{1};
  CHECK_THROWS_WITH_AS(init_from_features(features, labels, 4, 0.5, 0.1),
                       "init_from_features: classes with no samples: 0, 2, 3",
                       ContractViolation);
}

TEST_CASE("class statistics match the two-pass oracle") {
  RngStream rng(17, StreamId::Data);
  const std::size_t n = 200, k = 5, d = 6;
  const RealMatrix features = normal_sample(rng, n, d);
  std::vector<int> labels;
  for (std::size_t i = 0; i < n; ++i) {
    labels.push_back(static_cast<int>(rng.next_below(k)));
  }
  // Ensure no class is empty.
  for (std::size_t c = 0; c < k; ++c) labels[c] = static_cast<int>(c);

  const ConditionalPrior prior = init_from_features(features, labels, k, 0.5, 0.1, 0.0);
  RealMatrix mean_oracle, var_oracle;
  classwise_oracle(features, labels, k, mean_oracle, var_oracle);
  for (std::size_t i = 0; i < prior.mu.size(); ++i) {
    CHECK(std::abs(prior.mu.values()[i] - mean_oracle.values()[i]) < 1e-10);
    CHECK(std::abs(prior.sigma2.values()[i] - var_oracle.values()[i]) < 1e-10);
  }
}

TEST_CASE("sample_reference with zero variance returns the class means") {
  const RealMatrix features = RealMatrix::from_rows({{1.0, 2.0}, {1.0, 2.0}, {-3.0, 0.5}});
  const std::vector<int> labels{0, 0, 1};
  // Floor forced to zero so duplicate-sample classes have exactly zero variance.
  ConditionalPrior prior = init_from_features(features, labels, 2, 0.5, 0.1, 0.0);
  prior.sigma2(1, 0) = 0.0;
  prior.sigma2(1, 1) = 0.0;

  RngStream noise(9, StreamId::Noise);
  const std::vector<int> query{1, 0, 0};
  const RealMatrix z = sample_reference(prior, query, noise);
  CHECK(z(0, 0) == -3.0);
  CHECK(z(0, 1) == 0.5);
  CHECK(z(1, 0) == 1.0);
  CHECK(z(2, 1) == 2.0);

  const std::vector<int> bad{2};
  CHECK_THROWS_AS(sample_reference(prior, bad, noise), ContractViolation);
}

TEST_CASE("sample_reference replays identically on an identical stream") {
  const ConditionalPrior prior = random_prior(23, 3, 4);
  const std::vector<int> labels{2, 0, 1, 1};
  RngStream n1(55, StreamId::Noise);
  RngStream n2(55, StreamId::Noise);
  CHECK(bit_equal(sample_reference(prior, labels, n1), sample_reference(prior, labels, n2)));
}

TEST_CASE("sample_reference empirical moments match the prior") {
  ConditionalPrior prior = random_prior(29, 2, 3);
  RngStream noise(31, StreamId::Noise);
  const std::size_t n = 100000;
  const std::vector<int> labels(n, 1);
  const RealMatrix z = sample_reference(prior, labels, noise);
  for (std::size_t j = 0; j < 3; ++j) {
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += z(i, j);
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t i = 0; i < n; ++i) var += (z(i, j) - mean) * (z(i, j) - mean);
    var /= static_cast<double>(n - 1);
    const double sigma2 = prior.sigma2(1, j);
    const double mean_se = std::sqrt(sigma2 / static_cast<double>(n));
    const double var_se = sigma2 * std::sqrt(2.0 / static_cast<double>(n - 1));
    CHECK(std::abs(mean - prior.mu(1, j)) < 3.0 * mean_se);
    CHECK(std::abs(var - sigma2) < 3.0 * var_se);
  }
}

TEST_CASE("ema_update arithmetic and endpoints") {
  ConditionalPrior prior = random_prior(37, 1, 2);
  prior.mu_bar = RealMatrix::from_rows({{2.0, 0.0}});
  prior.alpha = 0.5;
  const RealMatrix batch = RealMatrix::from_rows({{0.0, 2.0}});
  const std::vector<int> labels{0};
  ema_update(prior, batch, labels);
  CHECK(prior.mu_bar(0, 0) == 1.0);
  CHECK(prior.mu_bar(0, 1) == 1.0);

  // alpha = 1 freezes mu_bar bit-for-bit.
  ConditionalPrior frozen = random_prior(38, 3, 4);
  frozen.alpha = 1.0;
  const RealMatrix before = frozen.mu_bar;
  RngStream rng(39, StreamId::Data);
  ema_update(frozen, normal_sample(rng, 6, 4), std::vector<int>{0, 1, 2, 0, 1, 2});
  CHECK(bit_equal(frozen.mu_bar, before));

  // alpha = 0 lands exactly on the batch mean.
  ConditionalPrior latest = random_prior(40, 1, 2);
  latest.alpha = 0.0;
  const RealMatrix two = RealMatrix::from_rows({{1.0, 5.0}, {3.0, 7.0}});
  ema_update(latest, two, std::vector<int>{0, 0});
  CHECK(latest.mu_bar(0, 0) == 2.0);
  CHECK(latest.mu_bar(0, 1) == 6.0);
}

TEST_CASE("ema_update skips classes absent from the batch") {
  ConditionalPrior prior = random_prior(41, 3, 4);
  const RealMatrix before = prior.mu_bar;
  RngStream rng(42, StreamId::Data);
  const RealMatrix batch = normal_sample(rng, 5, 4);
  const std::vector<int> labels(5, 0);
  ema_update(prior, batch, labels);
  for (std::size_t j = 0; j < 4; ++j) {
    CHECK(prior.mu_bar(1, j) == before(1, j));
    CHECK(prior.mu_bar(2, j) == before(2, j));
  }
  bool row0_moved = false;
  for (std::size_t j = 0; j < 4; ++j) row0_moved = row0_moved || prior.mu_bar(0, j) != before(0, j);
  CHECK(row0_moved);
}

TEST_CASE("cosine distance landmarks") {
  const std::vector<double> u{1.0, 0.0};
  const std::vector<double> v{0.0, 1.0};
  const std::vector<double> w{-1.0, 0.0};
  CHECK(std::abs(cosine_distance(u, u)) < 1e-9);
  CHECK(cosine_distance(u, v) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(cosine_distance(u, w) == doctest::Approx(2.0).epsilon(1e-12));

  const std::vector<double> zero{0.0, 0.0};
  CHECK(std::isfinite(cosine_distance(zero, u)));
}

TEST_CASE("cosine distance is invariant to positive rescaling") {
  RngStream rng(43, StreamId::Data);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> u(5), v(5);
    for (double& x : u) x = rng.next_normal();
    for (double& x : v) x = rng.next_normal();
    const double c = 0.01 + 10.0 * rng.next_double();
    std::vector<double> cu = u;
    for (double& x : cu) x *= c;
    CHECK(std::abs(cosine_distance(cu, v) - cosine_distance(u, v)) < 1e-9);
  }
}

TEST_CASE("intra and inter losses on landmark configurations") {
  ConditionalPrior prior = random_prior(47, 3, 4);
  prior.mu_bar = prior.mu;
  CHECK(intra_loss(prior) == doctest::Approx(0.0).epsilon(1e-12));

  ConditionalPrior ortho = random_prior(48, 2, 2);
  ortho.mu = RealMatrix::from_rows({{1.0, 0.0}, {0.0, 1.0}});
  CHECK(inter_loss(ortho) == doctest::Approx(-1.0).epsilon(1e-9));

  ConditionalPrior single = random_prior(49, 1, 3);
  CHECK(inter_loss(single) == 0.0);
}

TEST_CASE("losses match a brute-force pair loop") {
  const ConditionalPrior prior = random_prior(53, 4, 5);

  double intra = 0.0;
  for (std::size_t k = 0; k < 4; ++k) {
    intra += cosine_distance(prior.mu.row(k), prior.mu_bar.row(k));
  }
  intra /= 4.0;
  double inter = 0.0;
  for (std::size_t k = 0; k < 4; ++k) {
    for (std::size_t l = 0; l < 4; ++l) {
      if (k != l) inter += cosine_distance(prior.mu.row(k), prior.mu.row(l));
    }
  }
  inter *= -1.0 / (4.0 * 3.0);

  CHECK(std::abs(intra_loss(prior) - intra) < 1e-12);
  CHECK(std::abs(inter_loss(prior) - inter) < 1e-12);
}

TEST_CASE("inter loss is invariant under class permutations") {
  const ConditionalPrior prior = random_prior(54, 5, 3);
  ConditionalPrior permuted = prior;
  const std::vector<std::size_t> perm{3, 0, 4, 1, 2};
  for (std::size_t k = 0; k < 5; ++k) {
    for (std::size_t j = 0; j < 3; ++j) {
      permuted.mu(perm[k], j) = prior.mu(k, j);
      permuted.mu_bar(perm[k], j) = prior.mu_bar(k, j);
    }
  }
  CHECK(inter_loss(permuted) == doctest::Approx(inter_loss(prior)).epsilon(1e-12));
}

TEST_CASE("analytic prior gradient matches finite differences") {
  for (std::uint64_t seed = 100; seed < 105; ++seed) {
    ConditionalPrior prior = random_prior(seed, 3, 5);
    const RealMatrix analytic = ada_gradient(prior);
    const RealMatrix fd = finite_diff_grad(
        [&](const RealMatrix& mu) {
          ConditionalPrior probe = prior;
          probe.mu = mu;
          return ada_objective(probe);
        },
        prior.mu);
    CHECK(relative_error(analytic, fd) < 1e-4);
  }
}

TEST_CASE("one adaptive step strictly decreases the objective") {
  for (std::uint64_t seed = 200; seed < 205; ++seed) {
    ConditionalPrior prior = random_prior(seed, 4, 6);
    prior.xi = 1e-3;
    const double before = ada_objective(prior);
    adaptive_step(prior);
    CHECK(ada_objective(prior) < before);
  }
}

TEST_CASE("single-class adaptive step is pure intra descent") {
  ConditionalPrior prior = random_prior(210, 1, 4);
  prior.xi = 1e-3;
  const double before = cosine_distance(prior.mu.row(0), prior.mu_bar.row(0));
  adaptive_step(prior);
  const double after = cosine_distance(prior.mu.row(0), prior.mu_bar.row(0));
  CHECK(after <= before);
}

TEST_CASE("sigma2 is bit-identical across arbitrarily many updates") {
  ConditionalPrior prior = random_prior(220, 3, 4);
  const RealMatrix sigma_before = prior.sigma2;
  RngStream rng(221, StreamId::Data);
  const std::vector<int> labels{0, 1, 2, 1};
  for (int step = 0; step < 200; ++step) {
    ema_update(prior, normal_sample(rng, 4, 4), labels);
    adaptive_step(prior);
  }
  CHECK(bit_equal(prior.sigma2, sigma_before));
}

TEST_CASE("squared euclidean distance switch") {
  ConditionalPrior prior = random_prior(230, 3, 4);
  prior.distance = DistanceKind::SquaredEuclidean;
  const RealMatrix analytic = ada_gradient(prior);
  const RealMatrix fd = finite_diff_grad(
      [&](const RealMatrix& mu) {
        ConditionalPrior probe = prior;
        probe.mu = mu;
        return ada_objective(probe);
      },
      prior.mu);
  CHECK(relative_error(analytic, fd) < 1e-4);
}

TEST_SUITE_END();
