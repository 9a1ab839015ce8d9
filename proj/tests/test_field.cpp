// SPDX-License-Identifier: Apache-2.0
#include <Eigen/Dense>

#include "objnerf/field.hpp"
#include "objnerf/geometry.hpp"
#include "objnerf/rendering.hpp"
#include "test_util.hpp"

// doctest last: torch's c10 headers define a glog-style CHECK that
// must not shadow the doctest assertion macros.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

using namespace objnerf;

namespace {

FieldConfig tiny_field_config(bool symmetric) {
  FieldConfig cfg;
  cfg.mlp_depth = 2;
  cfg.mlp_width = 32;
  cfg.code_dim = 8;
  cfg.symmetry_enabled = symmetric;
  cfg.position_encoding.num_frequencies = 3;
  cfg.direction_encoding.num_frequencies = 2;
  return cfg;
}

LatentCodes random_codes(int dim, torch::Generator& gen, torch::Dtype dtype) {
  return {torch::randn({dim}, gen, dtype), torch::randn({dim}, gen, dtype)};
}

torch::Tensor unit_dirs(int64_t n, torch::Generator& gen, torch::Dtype dtype) {
  auto d = torch::randn({n, 3}, gen, dtype);
  return d / d.norm(2, -1, true);
}

}  // namespace

TEST_CASE("symmetrize folds the second coordinate") {
  CHECK(symmetrize_point({0.1, -0.2, 0.3}) == Eigen::Vector3d(0.1, 0.2, 0.3));
  CHECK(symmetrize_point({0.1, 0.2, 0.3}) == Eigen::Vector3d(0.1, 0.2, 0.3));

  auto gen = at::detail::createCPUGenerator(3);
  auto x = torch::randn({100, 3}, gen, torch::kFloat64);
  auto once = symmetrize_points(x);
  auto twice = symmetrize_points(once);
  CHECK(torch::equal(once, twice));
  CHECK((once.narrow(-1, 1, 1) >= 0).all().item<bool>());
}

TEST_CASE("box mask is the closed cube") {
  CHECK(box_mask(Eigen::Vector3d(0, 0, 0), 0.4));
  CHECK_FALSE(box_mask(Eigen::Vector3d(0.41, 0, 0), 0.4));
  CHECK(box_mask(Eigen::Vector3d(0.4, 0.4, 0.4), 0.4));

  auto pts = torch::tensor({{0.0, 0.0, 0.0}, {0.41, 0.0, 0.0}, {0.4, 0.4, 0.4}, {0.0, -0.5, 0.0}},
                           torch::kFloat64);
  auto m = box_mask(pts, 0.4);
  CHECK(m[0].item<bool>());
  CHECK_FALSE(m[1].item<bool>());
  CHECK(m[2].item<bool>());
  CHECK_FALSE(m[3].item<bool>());
}

TEST_CASE("density is exactly zero outside the scene box") {
  torch::manual_seed(5);
  ConditionalField field(tiny_field_config(false));
  auto gen = at::detail::createCPUGenerator(5);
  for (int trial = 0; trial < 5; ++trial) {
    auto codes = random_codes(8, gen, torch::kFloat32);
    auto pts = torch::tensor({{1.0f, 0.0f, 0.0f}, {0.0f, 0.0f, 0.0f}, {0.0f, 0.45f, 0.0f}});
    auto dirs = unit_dirs(3, gen, torch::kFloat32);
    auto out = field->forward(pts, dirs, codes, 1.0);
    CHECK(out.density[0].item<float>() == 0.0f);
    CHECK(out.density[1].item<float>() > 0.0f);
    CHECK(out.density[2].item<float>() == 0.0f);
  }
}

TEST_CASE("symmetry makes density bit-identical under a y sign flip") {
  torch::manual_seed(11);
  ConditionalField field(tiny_field_config(true));
  auto gen = at::detail::createCPUGenerator(11);
  auto codes = random_codes(8, gen, torch::kFloat32);
  auto pts = (torch::rand({100, 3}, gen, torch::kFloat32) - 0.5) * 0.8;
  auto flipped = pts.clone();
  flipped.narrow(-1, 1, 1).neg_();
  auto dirs = unit_dirs(100, gen, torch::kFloat32);
  auto a = field->forward(pts, dirs, codes, 0.8);
  auto b = field->forward(flipped, dirs, codes, 0.8);
  CHECK(torch::equal(a.density, b.density));
}

TEST_CASE("density ignores the view direction entirely") {
  torch::manual_seed(13);
  ConditionalField field(tiny_field_config(false));
  auto gen = at::detail::createCPUGenerator(13);
  auto codes = random_codes(8, gen, torch::kFloat32);
  auto pts = (torch::rand({50, 3}, gen, torch::kFloat32) - 0.5) * 0.8;
  auto base = field->forward(pts, unit_dirs(50, gen, torch::kFloat32), codes, 1.0);
  for (int i = 0; i < 20; ++i) {
    auto out = field->forward(pts, unit_dirs(50, gen, torch::kFloat32), codes, 1.0);
    CHECK((out.density - base.density).abs().max().item<float>() == 0.0f);
  }
}

TEST_CASE("field output ranges and code conditioning") {
  torch::manual_seed(17);
  ConditionalField field(tiny_field_config(false));
  auto gen = at::detail::createCPUGenerator(17);
  auto codes = random_codes(8, gen, torch::kFloat32);
  auto pts = (torch::rand({200, 3}, gen, torch::kFloat32) - 0.5) * 0.8;
  auto dirs = unit_dirs(200, gen, torch::kFloat32);
  auto out = field->forward(pts, dirs, codes, 0.5);
  CHECK((out.density >= 0).all().item<bool>());
  CHECK((out.rgb >= 0).all().item<bool>());
  CHECK((out.rgb <= 1).all().item<bool>());

  // Appearance code changes color but not density.
  auto codes2 = codes;
  codes2.appearance = torch::randn({8}, gen, torch::kFloat32);
  auto out2 = field->forward(pts, dirs, codes2, 0.5);
  CHECK(torch::equal(out.density, out2.density));
  CHECK((out.rgb - out2.rgb).abs().max().item<float>() > 0.0f);

  // Wrong code dimension is rejected.
  LatentCodes bad{torch::randn({9}, gen, torch::kFloat32), codes.appearance};
  CHECK_THROWS_AS(field->forward(pts, dirs, bad, 0.5), ArgumentError);
}

TEST_CASE("field gradients match finite differences") {
  torch::manual_seed(23);
  ConditionalField field(tiny_field_config(false));
  field->to(torch::kFloat64);
  auto gen = at::detail::createCPUGenerator(23);
  const double eps = 1e-6;
  for (int probe = 0; probe < 10; ++probe) {
    auto pts = ((torch::rand({1, 3}, gen, torch::kFloat64) - 0.5) * 0.7).requires_grad_(true);
    auto dirs = unit_dirs(1, gen, torch::kFloat64);
    LatentCodes codes{torch::randn({8}, gen, torch::kFloat64).requires_grad_(true),
                      torch::randn({8}, gen, torch::kFloat64)};
    auto w_rgb = torch::rand({1, 3}, gen, torch::kFloat64);
    auto out = field->forward(pts, dirs, codes, 1.0);
    auto scalar = out.density.sum() + (out.rgb * w_rgb).sum();
    scalar.backward();

    auto grad_pts = pts.grad().clone();
    auto grad_code = codes.shape.grad().clone();
    auto eval_at = [&](const torch::Tensor& p, const torch::Tensor& zs) {
      torch::NoGradGuard ng;
      auto o = field->forward(p, dirs, {zs, codes.appearance}, 1.0);
      return (o.density.sum() + (o.rgb * w_rgb).sum()).item<double>();
    };
    for (int i = 0; i < 3; ++i) {
      auto pp = pts.detach().clone();
      auto pm = pts.detach().clone();
      pp[0][i] += eps;
      pm[0][i] -= eps;
      const double fd = (eval_at(pp, codes.shape.detach()) - eval_at(pm, codes.shape.detach())) /
                        (2 * eps);
      CHECK(objnerf::testutil::rel_err(grad_pts[0][i].item<double>(), fd, 1e-4) < 1e-3);
    }
    for (int i = 0; i < 3; ++i) {
      auto cp = codes.shape.detach().clone();
      auto cm = codes.shape.detach().clone();
      cp[i] += eps;
      cm[i] -= eps;
      const double fd =
          (eval_at(pts.detach(), cp) - eval_at(pts.detach(), cm)) / (2 * eps);
      CHECK(objnerf::testutil::rel_err(grad_code[i].item<double>(), fd, 1e-4) < 1e-3);
    }
  }
}

TEST_CASE("mirrored cameras render mirrored alpha masks under symmetry") {
  torch::manual_seed(31);
  auto cfg = tiny_field_config(true);
  ConditionalField field(cfg);
  auto gen = at::detail::createCPUGenerator(31);
  auto codes = random_codes(8, gen, torch::kFloat32);
  auto field_fn = field->bind(codes, 1.0);

  const int hw = 24;
  Intrinsics intr;
  intr.focal_x = intr.focal_y = 20.0;
  intr.principal_x = intr.principal_y = (hw - 1) / 2.0;  // integer mirror pixels
  intr.width = intr.height = hw;

  const auto pose = CameraPose::from_angles(0.6, 0.3, {0.05, -0.08, 1.8});
  const Eigen::Matrix3d mirror = Eigen::Vector3d(1, -1, 1).asDiagonal();
  const Eigen::Matrix3d r1 = pose.rotation();
  const Eigen::Matrix3d r2 = mirror * r1 * mirror;
  const Eigen::Vector3d t2 = mirror * pose.translation();

  auto to_tensor = [](const Eigen::Matrix3d& m) {
    auto t = torch::zeros({3, 3}, torch::kFloat32);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) t[i][j] = static_cast<float>(m(i, j));
    return t;
  };

  SamplingConfig sampling;
  sampling.num_coarse = 48;
  sampling.num_fine = 48;
  sampling.jitter = false;

  auto pixels = full_image_pixels(hw, hw);
  // Pixel list for the mirrored camera pre-flipped vertically so ray i of
  // both renders corresponds under the mirror, sharing random draws.
  auto flipped = pixels.clone();
  flipped.select(1, 1) = (hw - 1) - flipped.select(1, 1);

  auto g1 = at::detail::createCPUGenerator(7);
  auto rays1 = generate_rays(pose, intr, pixels);
  auto out1 = render_rays(field_fn, rays1.origins, rays1.directions, sampling, g1);

  auto g2 = at::detail::createCPUGenerator(7);
  auto rays2 = generate_rays_rt(to_tensor(r2),
                                torch::tensor({static_cast<float>(t2.x()),
                                               static_cast<float>(t2.y()),
                                               static_cast<float>(t2.z())}),
                                intr, flipped);
  auto out2 = render_rays(field_fn, rays2.origins, rays2.directions, sampling, g2);

  const double diff = (out1.alpha - out2.alpha).abs().mean().item<double>();
  CHECK(diff < 1e-3);
  CHECK(out1.alpha.max().item<float>() > 0.05);  // scene is not empty
}
