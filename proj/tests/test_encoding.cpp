// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <limits>

#include "objnerf/encoding.hpp"

// doctest last: torch's c10 headers define a glog-style CHECK that
// must not shadow the doctest assertion macros.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

using namespace objnerf;

TEST_CASE("anneal weight endpoints and closed form") {
  for (int k = 0; k < 10; ++k) {
    CHECK(anneal_weight(k, 0.0, 10) == 0.0);
    CHECK(anneal_weight(k, 1.0, 10) == 1.0);
  }
  // L = 10, k = 3, progress 0.35: ramp argument 0.5, weight (1 - cos(pi/2))/2.
  const double expected = (1.0 - std::cos(M_PI * 0.5)) / 2.0;
  CHECK(anneal_weight(3, 0.35, 10) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(expected == doctest::Approx(0.5));

  CHECK_THROWS_AS(anneal_weight(-1, 0.5, 10), ArgumentError);
  CHECK_THROWS_AS(anneal_weight(10, 0.5, 10), ArgumentError);
}

TEST_CASE("anneal weight is monotone in progress and in band index") {
  const int L = 8;
  for (int k = 0; k < L; ++k) {
    double prev = -1.0;
    for (double p = 0.0; p <= 1.0001; p += 0.01) {
      const double w = anneal_weight(k, std::min(p, 1.0), L);
      CHECK(w >= prev - 1e-12);
      prev = w;
    }
  }
  for (double p = 0.0; p <= 1.0001; p += 0.05) {
    for (int k = 0; k + 1 < L; ++k) {
      CHECK(anneal_weight(k, std::min(p, 1.0), L) >=
            anneal_weight(k + 1, std::min(p, 1.0), L) - 1e-12);
    }
  }
}

TEST_CASE("positional encoding closed-form values") {
  EncodingConfig cfg;
  cfg.num_frequencies = 2;

  SUBCASE("origin encodes to zeros and ones") {
    auto out = positional_encode(torch::zeros({3}, torch::kFloat64), cfg, 1.0);
    CHECK(out.size(0) == 3 * (1 + 2 * 2));
    for (int i = 0; i < 3; ++i) CHECK(out[i].item<double>() == 0.0);  // raw
    // per band: [sin sin sin cos cos cos]
    for (int k = 0; k < 2; ++k) {
      for (int i = 0; i < 3; ++i) {
        CHECK(out[3 + 6 * k + i].item<double>() == 0.0);
        CHECK(out[3 + 6 * k + 3 + i].item<double>() == 1.0);
      }
    }
  }

  SUBCASE("half coordinate against independent evaluation") {
    auto out = positional_encode(torch::tensor({0.5}, torch::kFloat64), cfg, 1.0);
    const double expected[] = {0.5, std::sin(0.5 * M_PI), std::cos(0.5 * M_PI), std::sin(M_PI),
                               std::cos(M_PI)};
    REQUIRE(out.size(0) == 5);
    for (int i = 0; i < 5; ++i) {
      CHECK(out[i].item<double>() == doctest::Approx(expected[i]).epsilon(1e-12));
    }
  }

  SUBCASE("progress zero leaves only the raw passthrough") {
    auto out = positional_encode(torch::tensor({0.3, -0.2}, torch::kFloat64), cfg, 0.0);
    CHECK(out[0].item<double>() == 0.3);
    CHECK(out[1].item<double>() == -0.2);
    for (int i = 2; i < out.size(0); ++i) CHECK(out[i].item<double>() == 0.0);
  }
}

TEST_CASE("positional encoding output length follows the closed form") {
  auto gen = at::detail::createCPUGenerator(3);
  for (int dim : {1, 2, 3, 5}) {
    for (int L : {0, 1, 4, 10}) {
      for (bool raw : {false, true}) {
        EncodingConfig cfg;
        cfg.num_frequencies = L;
        cfg.include_raw_input = raw;
        if (!raw && L == 0) continue;  // empty output is meaningless
        auto x = torch::rand({dim}, gen, torch::kFloat64);
        auto out = positional_encode(x, cfg, 0.7);
        CHECK(out.size(0) == cfg.output_dim(dim));
      }
    }
  }
}

TEST_CASE("encoded components stay in [-1, 1] except the raw passthrough") {
  EncodingConfig cfg;
  cfg.num_frequencies = 6;
  auto gen = at::detail::createCPUGenerator(9);
  auto x = (torch::rand({100, 3}, gen, torch::kFloat64) - 0.5) * 10.0;
  auto out = positional_encode(x, cfg, 0.63);
  auto bands = out.narrow(-1, 3, cfg.output_dim(3) - 3);
  CHECK(bands.abs().max().item<double>() <= 1.0 + 1e-12);
}

TEST_CASE("positional encoding gradients match finite differences") {
  EncodingConfig cfg;
  cfg.num_frequencies = 4;
  auto gen = at::detail::createCPUGenerator(17);
  const double progress = 0.78;
  for (int trial = 0; trial < 20; ++trial) {
    auto x = ((torch::rand({3}, gen, torch::kFloat64) - 0.5) * 2.0).requires_grad_(true);
    auto weights = torch::rand({cfg.output_dim(3)}, gen, torch::kFloat64);
    auto scalar = (positional_encode(x, cfg, progress) * weights).sum();
    scalar.backward();
    auto analytic = x.grad().clone();

    const double eps = 1e-6;
    for (int i = 0; i < 3; ++i) {
      auto xp = x.detach().clone();
      auto xm = x.detach().clone();
      xp[i] += eps;
      xm[i] -= eps;
      const double fp = (positional_encode(xp, cfg, progress) * weights).sum().item<double>();
      const double fm = (positional_encode(xm, cfg, progress) * weights).sum().item<double>();
      const double fd = (fp - fm) / (2.0 * eps);
      const double ref = std::max(1.0, std::abs(fd));
      CHECK(std::abs(analytic[i].item<double>() - fd) / ref < 1e-4);
    }
  }
}

TEST_CASE("non-finite inputs raise a numeric error") {
  EncodingConfig cfg;
  const double inf = std::numeric_limits<double>::infinity();
  auto x = torch::tensor({0.1, inf, 0.2}, torch::kFloat64);
  CHECK_THROWS_AS(positional_encode(x, cfg, 1.0), NumericError);
  auto y = torch::tensor({0.1, std::nan(""), 0.2}, torch::kFloat64);
  CHECK_THROWS_AS(positional_encode(y, cfg, 1.0), NumericError);
}
