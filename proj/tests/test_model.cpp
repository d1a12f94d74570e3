#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <limits>
#include <vector>

#include "adarand/checkpoint.hpp"
#include "adarand/errors.hpp"
#include "adarand/gradcheck.hpp"
#include "adarand/model.hpp"

using namespace adarand;

namespace {

RealMatrix bias_as_row(const std::vector<double>& bias) {
  return RealMatrix(1, bias.size(), bias);
}

ExtractorParams random_extractor(std::uint64_t seed, std::size_t in, std::size_t hidden,
                                 std::size_t out) {
  RngStream rng(seed, StreamId::Init);
  return init_extractor(in, {hidden}, out, rng);
}

std::filesystem::path temp_file(const char* name) {
  return std::filesystem::temp_directory_path() / name;
}

}  // namespace

TEST_SUITE_BEGIN("model");

TEST_CASE("zero extractor maps everything to zero features") {
  ExtractorParams params;
  params.layers.push_back({RealMatrix(3, 2), std::vector<double>(2, 0.0)});
  const RealMatrix x = RealMatrix::from_rows({{1.0, -2.0, 3.0}});
  const RealMatrix f = extract_features(params, x);
  CHECK(f(0, 0) == 0.0);
  CHECK(f(0, 1) == 0.0);
}

TEST_CASE("single identity layer is the identity map") {
  ExtractorParams params;
  RealMatrix w(2, 2);
  w(0, 0) = 1.0;
  w(1, 1) = 1.0;
  params.layers.push_back({w, {0.0, 0.0}});
  const RealMatrix x = RealMatrix::from_rows({{-1.5, 2.5}, {0.0, -3.0}});
  const RealMatrix f = extract_features(params, x);
  for (std::size_t i = 0; i < x.size(); ++i) {
    CHECK(f.values()[i] == x.values()[i]);  // no activation after the final layer
  }

  CHECK_THROWS_AS(extract_features(params, RealMatrix(1, 3)), ContractViolation);
}

TEST_CASE("ce_loss uniform softmax at zero head") {
  const HeadMatrix head{RealMatrix(4, 2)};
  RngStream rng(3, StreamId::Data);
  const RealMatrix features = normal_sample(rng, 5, 4);
  const std::vector<int> labels{0, 1, 0, 1, 1};
  const CeResult res = ce_loss(head, features, labels);
  CHECK(res.loss == doctest::Approx(std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("ce_loss saturates to zero on perfectly separated logits") {
  HeadMatrix head{RealMatrix(2, 2)};
  head.weight(0, 0) = 50.0;
  head.weight(1, 1) = 50.0;
  const RealMatrix features = RealMatrix::from_rows({{1.0, 0.0}, {0.0, 1.0}});
  const std::vector<int> labels{0, 1};
  const CeResult res = ce_loss(head, features, labels);
  CHECK(res.loss < 1e-12);
  CHECK(std::sqrt(squared_frobenius(res.grad_head)) < 1e-12);
  CHECK(std::sqrt(squared_frobenius(res.grad_features)) < 1e-12);
}

TEST_CASE("ce_loss rejects out-of-range labels") {
  const HeadMatrix head{RealMatrix(2, 3)};
  const RealMatrix features(1, 2);
  const std::vector<int> bad{3};
  CHECK_THROWS_AS(ce_loss(head, features, bad), ContractViolation);
  const std::vector<int> negative{-1};
  CHECK_THROWS_AS(ce_loss(head, features, negative), ContractViolation);
}

TEST_CASE("ce_loss gradients match finite differences") {
  RngStream rng(11, StreamId::Data);
  const RealMatrix features = normal_sample(rng, 6, 3);
  RngStream wrng(12, StreamId::Init);
  const HeadMatrix head{normal_sample(wrng, 3, 4)};
  const std::vector<int> labels{0, 1, 2, 3, 1, 0};

  const CeResult res = ce_loss(head, features, labels);

  const RealMatrix fd_w = finite_diff_grad(
      [&](const RealMatrix& w) { return ce_loss(HeadMatrix{w}, features, labels).loss; },
      head.weight);
  CHECK(relative_error(res.grad_head, fd_w) < 1e-4);

  const RealMatrix fd_f = finite_diff_grad(
      [&](const RealMatrix& f) { return ce_loss(head, f, labels).loss; }, features);
  CHECK(relative_error(res.grad_features, fd_f) < 1e-4);
}

TEST_CASE("extractor gradients match finite differences") {
  const ExtractorParams params = random_extractor(21, 4, 5, 3);
  RngStream xr(22, StreamId::Data);
  const RealMatrix x = normal_sample(xr, 6, 4);
  RngStream wr(23, StreamId::Init);
  const HeadMatrix head{normal_sample(wr, 3, 3)};
  const std::vector<int> labels{0, 1, 2, 0, 1, 2};

  ForwardCache cache = forward_cached(params, x);
  const CeResult ce = ce_loss(head, cache.features(), labels);
  const ExtractorGrads grads = backprop_features(params, cache, ce.grad_features);

  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    const RealMatrix fd_w = finite_diff_grad(
        [&](const RealMatrix& w) {
          ExtractorParams probe = params;
          probe.layers[l].weight = w;
          return ce_loss(head, extract_features(probe, x), labels).loss;
        },
        params.layers[l].weight);
    CHECK(relative_error(grads.layers[l].weight, fd_w) < 1e-4);

    const RealMatrix fd_b = finite_diff_grad(
        [&](const RealMatrix& b) {
          ExtractorParams probe = params;
          probe.layers[l].bias.assign(b.values().begin(), b.values().end());
          return ce_loss(head, extract_features(probe, x), labels).loss;
        },
        bias_as_row(params.layers[l].bias));
    CHECK(relative_error(bias_as_row(grads.layers[l].bias), fd_b) < 1e-4);
  }
}

TEST_CASE("sgd_step identities") {
  RngStream rng(31, StreamId::Init);
  ModelState state = make_model_state(init_extractor(2, {3}, 2, rng), init_head(2, 2, rng),
                                      SgdConfig{0.1, 0.9, true});
  const ModelState before = state;

  ModelGrads zero;
  zero.extractor.layers.resize(state.extractor.layers.size());
  for (std::size_t l = 0; l < state.extractor.layers.size(); ++l) {
    zero.extractor.layers[l].weight = RealMatrix(state.extractor.layers[l].weight.rows(),
                                                 state.extractor.layers[l].weight.cols());
    zero.extractor.layers[l].bias.assign(state.extractor.layers[l].bias.size(), 0.0);
  }
  zero.head = RealMatrix(state.head.weight.rows(), state.head.weight.cols());
  sgd_step(state, zero);
  for (std::size_t l = 0; l < state.extractor.layers.size(); ++l) {
    for (std::size_t i = 0; i < state.extractor.layers[l].weight.size(); ++i) {
      CHECK(state.extractor.layers[l].weight.values()[i] ==
            before.extractor.layers[l].weight.values()[i]);
    }
  }

  ModelGrads bad = zero;
  bad.head(0, 0) = std::numeric_limits<double>::infinity();
  CHECK_THROWS_WITH_AS(sgd_step(state, bad),
                       "sgd_step: non-finite gradient in head.weight", NumericError);
}

TEST_CASE("plain gradient descent arithmetic on a scalar quadratic") {
  // loss 0.5*theta^2, eta=0.1, theta0=1 -> theta1=0.9 with zero momentum
  ExtractorParams params;
  params.layers.push_back({RealMatrix::from_rows({{1.0}}), {0.0}});
  ModelState state = make_model_state(params, HeadMatrix{RealMatrix(1, 1)},
                                      SgdConfig{0.1, 0.0, false});
  ModelGrads grads;
  grads.extractor.layers.push_back({RealMatrix::from_rows({{1.0}}), {0.0}});
  grads.head = RealMatrix(1, 1);
  sgd_step(state, grads);
  CHECK(state.extractor.layers[0].weight(0, 0) == doctest::Approx(0.9).epsilon(1e-15));
}

TEST_CASE("nesterov momentum descends a convex quadratic") {
  // loss = 0.5 * ||theta||^2 over a 3x3 parameter block. Momentum 0.5 at
  // lr 0.1 is overdamped on a unit-curvature quadratic, so the loss is
  // strictly decreasing once the momentum buffer warms up.
  ExtractorParams params;
  RngStream rng(41, StreamId::Init);
  params.layers.push_back({normal_sample(rng, 3, 3), std::vector<double>(3, 0.0)});
  ModelState state =
      make_model_state(params, HeadMatrix{RealMatrix(3, 1)}, SgdConfig{0.1, 0.5, true});

  const double start = 0.5 * squared_frobenius(state.extractor.layers[0].weight);
  double prev = start;
  bool decreasing_after_transient = true;
  for (int step = 0; step < 50; ++step) {
    ModelGrads grads;
    grads.extractor.layers.push_back(
        {state.extractor.layers[0].weight, std::vector<double>(3, 0.0)});
    grads.head = RealMatrix(3, 1);
    sgd_step(state, grads);
    const double loss = 0.5 * squared_frobenius(state.extractor.layers[0].weight);
    if (step >= 10 && loss >= prev) decreasing_after_transient = false;
    prev = loss;
  }
  CHECK(decreasing_after_transient);
  CHECK(prev < 1e-3 * start);
}

TEST_CASE("logits are exactly linear in features") {
  RngStream rng(51, StreamId::Init);
  const HeadMatrix head{normal_sample(rng, 4, 3)};
  RngStream xr(52, StreamId::Data);
  const RealMatrix f = normal_sample(xr, 5, 4);
  RealMatrix doubled = f;
  doubled *= 2.0;
  const RealMatrix z1 = logits(head, f);
  const RealMatrix z2 = logits(head, doubled);
  for (std::size_t i = 0; i < z1.size(); ++i) {
    CHECK(z2.values()[i] == 2.0 * z1.values()[i]);
  }
}

TEST_CASE("label permutation with matching column permutation preserves the loss") {
  RngStream rng(61, StreamId::Init);
  const HeadMatrix head{normal_sample(rng, 4, 3)};
  RngStream xr(62, StreamId::Data);
  const RealMatrix f = normal_sample(xr, 7, 4);
  const std::vector<int> labels{0, 1, 2, 0, 2, 1, 0};
  const std::vector<int> perm{2, 0, 1};  // class k -> perm[k]

  HeadMatrix permuted{RealMatrix(4, 3)};
  for (std::size_t k = 0; k < 3; ++k) {
    for (std::size_t i = 0; i < 4; ++i) {
      permuted.weight(i, static_cast<std::size_t>(perm[k])) = head.weight(i, k);
    }
  }
  std::vector<int> permuted_labels;
  for (int y : labels) permuted_labels.push_back(perm[static_cast<std::size_t>(y)]);

  const double base = ce_loss(head, f, labels).loss;
  const double moved = ce_loss(permuted, f, permuted_labels).loss;
  CHECK(moved == doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("checkpoint round-trip is exact at 64-bit precision") {
  RngStream rng(71, StreamId::Init);
  const ExtractorParams extractor = init_extractor(5, {4, 3}, 2, rng);
  const HeadMatrix head = init_head(2, 6, rng);

  const auto path = temp_file("adarand_test_ckpt.json");
  save_model_checkpoint(path, extractor, &head);
  const LoadedCheckpoint loaded = load_model_checkpoint(path);
  std::filesystem::remove(path);

  REQUIRE(loaded.extractor.layers.size() == extractor.layers.size());
  for (std::size_t l = 0; l < extractor.layers.size(); ++l) {
    for (std::size_t i = 0; i < extractor.layers[l].weight.size(); ++i) {
      CHECK(loaded.extractor.layers[l].weight.values()[i] ==
            extractor.layers[l].weight.values()[i]);
    }
    CHECK(loaded.extractor.layers[l].bias == extractor.layers[l].bias);
  }
  REQUIRE(loaded.head.has_value());
  for (std::size_t i = 0; i < head.weight.size(); ++i) {
    CHECK(loaded.head->weight.values()[i] == head.weight.values()[i]);
  }
  CHECK(extractor_fingerprint(loaded.extractor) == extractor_fingerprint(extractor));
}

TEST_CASE("initialization is deterministic in the init stream") {
  RngStream r1(81, StreamId::Init);
  RngStream r2(81, StreamId::Init);
  const ExtractorParams a = init_extractor(6, {5}, 4, r1);
  const ExtractorParams b = init_extractor(6, {5}, 4, r2);
  CHECK(extractor_fingerprint(a) == extractor_fingerprint(b));
}

TEST_SUITE_END();
