// SPDX-License-Identifier: Apache-2.0
#include <set>

#include "objnerf/networks.hpp"
#include "test_util.hpp"

// doctest last: torch's c10 headers define a glog-style CHECK that
// must not shadow the doctest assertion macros.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

using namespace objnerf;
using objnerf::testutil::rel_err;

namespace {

EncoderConfig tiny_encoder(int size = 32) {
  EncoderConfig cfg;
  cfg.input_size = size;
  cfg.code_dim = 64;
  cfg.backbone = "tiny";
  return cfg;
}

std::pair<torch::Tensor, torch::Tensor> random_input(int size, torch::Generator& gen,
                                                     torch::Dtype dtype = torch::kFloat32) {
  auto img = torch::rand({1, 3, size, size}, gen, dtype);
  auto mask = (torch::rand({1, 1, size, size}, gen, dtype) > 0.4).to(dtype);
  return {img, mask};
}

}  // namespace

TEST_CASE("encoder output contract") {
  torch::manual_seed(1);
  ImageEncoder enc(tiny_encoder());
  auto gen = at::detail::createCPUGenerator(1);
  auto [img, mask] = random_input(32, gen);
  auto out = enc->forward(img, mask);

  CHECK(out.codes.shape.sizes() == torch::IntArrayRef({1, 64}));
  CHECK(out.codes.appearance.sizes() == torch::IntArrayRef({1, 64}));
  CHECK(out.pose_params.sizes() == torch::IntArrayRef({1, 7}));
  CHECK(out.pose_params[0][6].item<double>() > 0.2);

  // Both (cos, sin) pairs land on the unit circle by construction.
  auto az = out.pose_params[0].narrow(0, 0, 2).norm().item<double>();
  auto el = out.pose_params[0].narrow(0, 2, 2).norm().item<double>();
  CHECK(std::abs(az - 1.0) < 1e-6);
  CHECK(std::abs(el - 1.0) < 1e-6);

  CHECK_THROWS_AS(enc->forward(torch::rand({1, 3, 16, 16}), torch::rand({1, 1, 16, 16})),
                  ArgumentError);
  CHECK_THROWS_AS(enc->forward(img, torch::rand({1, 1, 16, 16})), ArgumentError);
}

TEST_CASE("encoder is deterministic in evaluation mode") {
  torch::manual_seed(2);
  ImageEncoder enc(tiny_encoder());
  enc->eval();
  auto gen = at::detail::createCPUGenerator(2);
  auto [img, mask] = random_input(32, gen);
  auto a = enc->forward(img, mask);
  auto b = enc->forward(img, mask);
  CHECK(torch::equal(a.codes.shape, b.codes.shape));
  CHECK(torch::equal(a.codes.appearance, b.codes.appearance));
  CHECK(torch::equal(a.pose_params, b.pose_params));
}

TEST_CASE("encoder gradients w.r.t. input pixels match finite differences") {
  torch::manual_seed(3);
  ImageEncoder enc(tiny_encoder(16));
  enc->to(torch::kFloat64);
  enc->eval();
  auto gen = at::detail::createCPUGenerator(3);
  auto [img0, mask] = random_input(16, gen, torch::kFloat64);
  auto w_codes = torch::rand({1, 64}, gen, torch::kFloat64);
  auto w_pose = torch::rand({1, 7}, gen, torch::kFloat64);

  auto objective = [&](const torch::Tensor& image) {
    auto out = enc->forward(image, mask);
    return ((out.codes.shape + out.codes.appearance) * w_codes).sum() +
           (out.pose_params * w_pose).sum();
  };

  auto img = img0.clone().requires_grad_(true);
  objective(img).backward();
  auto grad = img.grad();

  const double eps = 1e-6;
  auto pix = torch::randint(0, 16, {5, 2}, gen, torch::kInt64);
  for (int i = 0; i < 5; ++i) {
    const int64_t y = pix[i][0].item<int64_t>();
    const int64_t x = pix[i][1].item<int64_t>();
    auto ip = img0.clone();
    auto im = img0.clone();
    ip[0][0][y][x] += eps;
    im[0][0][y][x] -= eps;
    const double fd = (objective(ip).item<double>() - objective(im).item<double>()) / (2 * eps);
    CHECK(rel_err(grad[0][0][y][x].item<double>(), fd, 1e-5) < 1e-3);
  }
}

TEST_CASE("discriminator contract and gradients") {
  torch::manual_seed(4);
  auto disc = make_color_discriminator(16, 8);
  auto logit = disc->forward(torch::zeros({1, 3, 16, 16}));
  CHECK(logit.sizes() == torch::IntArrayRef({1}));
  CHECK(std::isfinite(logit.item<double>()));

  CHECK_THROWS_AS(disc->forward(torch::zeros({1, 1, 16, 16})), ArgumentError);
  CHECK_THROWS_AS(disc->forward(torch::zeros({1, 3, 8, 8})), ArgumentError);

  auto gen = at::detail::createCPUGenerator(4);
  auto patch = torch::rand({1, 3, 16, 16}, gen).requires_grad_(true);
  disc->forward(patch).sum().backward();
  CHECK(patch.grad().abs().max().item<double>() > 0.0);
}

TEST_CASE("discriminator finite-difference probe in eval mode") {
  torch::manual_seed(5);
  auto disc = make_alpha_discriminator(16, 8);
  disc->to(torch::kFloat64);
  disc->eval();  // dropout off so the function is deterministic
  auto gen = at::detail::createCPUGenerator(5);
  auto p0 = torch::rand({1, 1, 16, 16}, gen, torch::kFloat64);
  auto p = p0.clone().requires_grad_(true);
  disc->forward(p).sum().backward();
  auto grad = p.grad();

  const double eps = 1e-6;
  auto pix = torch::randint(0, 16, {5, 2}, gen, torch::kInt64);
  for (int i = 0; i < 5; ++i) {
    const int64_t y = pix[i][0].item<int64_t>();
    const int64_t x = pix[i][1].item<int64_t>();
    auto pp = p0.clone();
    auto pm = p0.clone();
    pp[0][0][y][x] += eps;
    pm[0][0][y][x] -= eps;
    const double fd = (disc->forward(pp).sum().item<double>() -
                       disc->forward(pm).sum().item<double>()) /
                      (2 * eps);
    CHECK(rel_err(grad[0][0][y][x].item<double>(), fd, 1e-6) < 1e-3);
  }
}

TEST_CASE("color and alpha discriminators share no parameters") {
  torch::manual_seed(6);
  auto dc = make_color_discriminator(16, 8);
  auto da = make_alpha_discriminator(16, 8);
  std::set<void*> color_params;
  for (const auto& p : dc->parameters()) color_params.insert(p.unsafeGetTensorImpl());
  for (const auto& p : da->parameters()) {
    CHECK(color_params.find(p.unsafeGetTensorImpl()) == color_params.end());
  }
}

TEST_CASE("parameter counts are a pure function of the config") {
  torch::manual_seed(7);
  ImageEncoder a(tiny_encoder());
  torch::manual_seed(8);
  ImageEncoder b(tiny_encoder());
  CHECK(count_parameters(*a) == count_parameters(*b));

  // Golden counts for the default test configs.
  // tiny tower convs: 4->16, 16->32, 32->64, 64->64 (3x3), two towers,
  // plus the 64->128 codes head and 64->7 pose head.
  const int64_t tower = (4 * 16 * 9 + 16) + (16 * 32 * 9 + 32) + (32 * 64 * 9 + 64) +
                        (64 * 64 * 9 + 64);
  const int64_t expected = 2 * tower + (64 * 128 + 128) + (64 * 7 + 7);
  CHECK(count_parameters(*a) == expected);

  auto dc = make_color_discriminator(16, 8);
  const int64_t body = (3 * 8 * 16 + 8) + (8 * 16 * 16 + 16) + (16 * 32 * 16 + 32);
  const int64_t head = 32 * 2 * 2 + 1;
  CHECK(count_parameters(*dc) == body + head);

  FieldConfig fc;  // defaults: 6x128, codes 64, L = 10/4
  ConditionalField field(fc);
  const int64_t pos_dim = 3 * (1 + 2 * 10);
  const int64_t dir_dim = 3 * (1 + 2 * 4);
  int64_t field_expected = (pos_dim + 64) * 128 + 128;       // trunk layer 0
  field_expected += 5 * (128 * 128 + 128);                   // trunk layers 1..5
  field_expected += 128 * 1 + 1;                             // density head
  field_expected += (128 + dir_dim + 64) * 128 + 128;        // color hidden
  field_expected += 128 * 3 + 3;                             // color head
  CHECK(count_parameters(*field) == field_expected);
}

TEST_CASE("full backbone preset builds and reports its capacity") {
  torch::manual_seed(9);
  auto cfg = tiny_encoder(64);
  cfg.backbone = "full";
  ImageEncoder enc(cfg);
  // Two bottleneck towers comparable to a 50-layer residual network each.
  CHECK(count_parameters(*enc) > 40'000'000);
  auto gen = at::detail::createCPUGenerator(9);
  auto [img, mask] = random_input(64, gen);
  auto out = enc->forward(img, mask);
  CHECK(out.pose_params[0][6].item<double>() > 0.2);
}
