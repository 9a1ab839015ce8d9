// SPDX-License-Identifier: Apache-2.0
#include <Eigen/Dense>
#include <cmath>

#include "objnerf/geometry.hpp"

// doctest last: torch's c10 headers define a glog-style CHECK that
// must not shadow the doctest assertion macros.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

using namespace objnerf;

namespace {

// Independent trig construction of the azimuth (about-y) rotation, used as
// the oracle for rotation_from_params.
Eigen::Matrix3d azimuth_oracle(double theta) {
  Eigen::Matrix3d r;
  r << std::cos(theta), 0.0, std::sin(theta),  //
      0.0, 1.0, 0.0,                           //
      -std::sin(theta), 0.0, std::cos(theta);
  return r;
}

Eigen::Matrix3d tensor_to_eigen(const torch::Tensor& t) {
  auto m = t.to(torch::kFloat64).contiguous();
  Eigen::Matrix3d out;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) out(i, j) = m[i][j].item<double>();
  return out;
}

}  // namespace

TEST_CASE("rotation_from_params identity cases") {
  auto r = rotation_from_params(std::array<double, 4>{1, 0, 1, 0});
  CHECK((r - Eigen::Matrix3d::Identity()).norm() < 1e-12);
  // Scaled pairs normalize to the same rotation.
  auto r2 = rotation_from_params(std::array<double, 4>{2, 0, 2, 0});
  CHECK((r2 - Eigen::Matrix3d::Identity()).norm() < 1e-12);
}

TEST_CASE("rotation_from_params matches the explicit azimuth matrix") {
  auto r = rotation_from_params(std::array<double, 4>{0, 1, 1, 0});
  CHECK((r - azimuth_oracle(M_PI / 2.0)).norm() < 1e-12);
}

TEST_CASE("degenerate pairs are rejected with the pair named") {
  CHECK_THROWS_WITH_AS(rotation_from_params(std::array<double, 4>{0, 0, 1, 0}),
                       doctest::Contains("azimuth"), InvalidPoseError);
  CHECK_THROWS_WITH_AS(rotation_from_params(std::array<double, 4>{1, 0, 1e-9, 0}),
                       doctest::Contains("elevation"), InvalidPoseError);
  CHECK_THROWS_AS(rotation_from_params(torch::tensor({{1.0, 0.0, 0.0, 0.0}})), InvalidPoseError);
}

TEST_CASE("rotations are orthonormal with determinant +1") {
  auto gen = at::detail::createCPUGenerator(7);
  for (int i = 0; i < 100; ++i) {
    auto raw = torch::randn({4}, gen, torch::kFloat64);
    if (raw.narrow(0, 0, 2).norm().item<double>() < 1e-3) continue;
    if (raw.narrow(0, 2, 2).norm().item<double>() < 1e-3) continue;
    const double* d = raw.data_ptr<double>();
    auto r = rotation_from_params(std::array<double, 4>{d[0], d[1], d[2], d[3]});
    CHECK((r.transpose() * r - Eigen::Matrix3d::Identity()).norm() < 1e-6);
    CHECK(r.determinant() == doctest::Approx(1.0).epsilon(1e-6));

    auto rt = rotation_from_params(raw);
    CHECK((tensor_to_eigen(rt) - r).norm() < 1e-9);
  }
}

TEST_CASE("camera pose construction and serialization order") {
  auto pose = CameraPose::from_raw(3, 0, 0, 5, 0.1, -0.2, 1.8);
  CHECK(pose.cos_az == doctest::Approx(1.0));
  CHECK(pose.sin_el == doctest::Approx(1.0));
  auto arr = pose.to_array();
  CHECK(arr[4] == 0.1);
  CHECK(arr[5] == -0.2);
  CHECK(arr[6] == 1.8);
  auto round = CameraPose::from_array(arr);
  CHECK(round.to_array() == arr);

  CHECK_THROWS_AS(CameraPose::from_raw(1, 0, 1, 0, 0, 0, -0.5), InvalidPoseError);
  CHECK_THROWS_AS(CameraPose::from_array({0.5, 0.5, 1, 0, 0, 0, 1}), InvalidPoseError);
}

TEST_CASE("generate_rays principal point and origin identities") {
  const auto pose = CameraPose::from_angles(0.7, 0.2, {0.05, -0.03, 1.8});
  Intrinsics intr;
  intr.focal_x = intr.focal_y = 100.0;
  intr.principal_x = intr.principal_y = 56.0;
  intr.width = intr.height = 112;

  auto pixels = torch::tensor({{56, 56}, {0, 0}, {111, 73}}, torch::kInt64);
  auto rays = generate_rays(pose, intr, pixels, torch::kFloat64);
  rays.validate();

  const Eigen::Matrix3d rot = pose.rotation();
  const Eigen::Vector3d center = pose.camera_center();
  for (int i = 0; i < 3; ++i) {
    CHECK(rays.origins[i][0].item<double>() == doctest::Approx(center.x()).epsilon(1e-9));
    CHECK(rays.origins[i][1].item<double>() == doctest::Approx(center.y()).epsilon(1e-9));
    CHECK(rays.origins[i][2].item<double>() == doctest::Approx(center.z()).epsilon(1e-9));
  }

  // Ray through the principal point is the camera forward axis in world frame.
  const Eigen::Vector3d forward = rot.transpose() * Eigen::Vector3d(0, 0, 1);
  for (int a = 0; a < 3; ++a) {
    CHECK(rays.directions[0][a].item<double>() == doctest::Approx(forward[a]).epsilon(1e-9));
  }

  // Corner pixel against an independent pinhole back-projection.
  const Eigen::Vector3d cam_dir((0.0 - 56.0) / 100.0, (0.0 - 56.0) / 100.0, 1.0);
  const Eigen::Vector3d expected = (rot.transpose() * cam_dir).normalized();
  for (int a = 0; a < 3; ++a) {
    CHECK(rays.directions[1][a].item<double>() == doctest::Approx(expected[a]).epsilon(1e-9));
  }

  CHECK_THROWS_AS(generate_rays(pose, intr, torch::tensor({{112, 0}}, torch::kInt64)),
                  std::out_of_range);
}

TEST_CASE("ray to pixel round trip stays within half a pixel") {
  auto gen = at::detail::createCPUGenerator(11);
  const Intrinsics intr = default_intrinsics(112);
  for (int trial = 0; trial < 4; ++trial) {
    auto prior = PosePrior{};
    auto pose = sample_pose_prior(prior, gen);
    auto pix = torch::randint(0, 112, {25, 2}, gen, torch::kInt64);
    auto rays = generate_rays(pose, intr, pix, torch::kFloat64);
    auto t = 0.5 + 3.0 * torch::rand({25, 1}, gen, torch::kFloat64);
    auto points = rays.origins + t * rays.directions;
    auto reproj = project_points(pose, intr, points);
    auto err = (reproj - pix.to(torch::kFloat64)).abs().max().item<double>();
    CHECK(err < 0.5);
  }
}

TEST_CASE("pose prior sampling is seeded and in range") {
  PosePrior prior;
  prior.azimuth_min = 0.3;
  prior.azimuth_max = 1.1;

  auto g1 = at::detail::createCPUGenerator(99);
  auto g2 = at::detail::createCPUGenerator(99);
  auto a = sample_pose_prior(prior, g1);
  auto b = sample_pose_prior(prior, g2);
  CHECK(a.to_array() == b.to_array());

  auto gen = at::detail::createCPUGenerator(5);
  for (int i = 0; i < 1000; ++i) {
    auto p = sample_pose_prior(prior, gen);
    CHECK(p.t_z > 0.0);
    const double az = p.azimuth();
    CHECK(az >= 0.3 - 1e-12);
    CHECK(az <= 1.1 + 1e-12);
  }
}

TEST_CASE("zero-width prior ranges pin the angles") {
  PosePrior prior;
  prior.azimuth_min = prior.azimuth_max = 0.8;
  prior.elevation_min = prior.elevation_max = 0.25;
  prior.translation_spread = Eigen::Vector3d::Zero();
  auto gen = at::detail::createCPUGenerator(1);
  auto p = sample_pose_prior(prior, gen);
  CHECK(p.azimuth() == doctest::Approx(0.8).epsilon(1e-12));
  CHECK(p.elevation() == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(p.t_z == doctest::Approx(1.8));
}

TEST_CASE("pose prior azimuth mean matches a Monte Carlo estimate") {
  PosePrior prior;
  auto gen = at::detail::createCPUGenerator(1234);
  const int n = 10000;
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    auto p = sample_pose_prior(prior, gen);
    double az = p.azimuth();  // atan2 wraps into (-pi, pi]
    if (az < 0.0) az += 2.0 * M_PI;
    sum += az;
  }
  const double mean = sum / n;
  const double mid = M_PI;
  const double se = (2.0 * M_PI / std::sqrt(12.0)) / std::sqrt(static_cast<double>(n));
  CHECK(std::abs(mean - mid) < 3.0 * se);
}

TEST_CASE("offset rotation fit recovers planted offsets") {
  auto gen = at::detail::createCPUGenerator(21);
  std::vector<CameraPose> pred, gt;
  const double offset_az = 30.0 * M_PI / 180.0;
  for (int i = 0; i < 40; ++i) {
    auto p = sample_pose_prior(PosePrior{}, gen);
    pred.push_back(p);
    gt.push_back(CameraPose::from_angles(p.azimuth() + offset_az, p.elevation(),
                                         p.translation()));
  }

  SUBCASE("identity when pred == gt") {
    auto fit = fit_offset_rotation(pred, pred);
    CHECK((fit.rotation - Eigen::Matrix3d::Identity()).norm() < 1e-9);
    CHECK(fit.residual < 1e-12);
  }

  SUBCASE("exact 30 degree azimuth offset") {
    auto fit = fit_offset_rotation(pred, gt);
    CHECK((fit.rotation - azimuth_oracle(offset_az)).norm() < 1e-6);
    CHECK(fit.residual < 1e-12);
  }

  SUBCASE("noisy poses recover the offset within a degree") {
    std::vector<CameraPose> noisy;
    auto ngen = at::detail::createCPUGenerator(77);
    for (const auto& p : pred) {
      auto eps = (torch::rand({2}, ngen, torch::kFloat64) - 0.5) * (1.0 * M_PI / 180.0);
      noisy.push_back(CameraPose::from_angles(p.azimuth() + eps[0].item<double>(),
                                              p.elevation() + eps[1].item<double>(),
                                              p.translation()));
    }
    auto fit = fit_offset_rotation(noisy, gt);
    CHECK(rotation_geodesic_angle(fit.rotation, azimuth_oracle(offset_az)) <
          1.0 * M_PI / 180.0);
  }

  SUBCASE("permutation invariance") {
    auto fit1 = fit_offset_rotation(pred, gt);
    std::vector<CameraPose> pred_r(pred.rbegin(), pred.rend());
    std::vector<CameraPose> gt_r(gt.rbegin(), gt.rend());
    auto fit2 = fit_offset_rotation(pred_r, gt_r);
    CHECK((fit1.rotation - fit2.rotation).norm() < 1e-9);
  }

  SUBCASE("empty and mismatched inputs are rejected") {
    CHECK_THROWS_AS(fit_offset_rotation({}, {}), ArgumentError);
    CHECK_THROWS_AS(fit_offset_rotation(pred, std::vector<CameraPose>(pred.begin(),
                                                                      pred.begin() + 3)),
                    ArgumentError);
  }
}

TEST_CASE("pose parameter tensors normalize pairs and keep translation") {
  auto raw = torch::tensor({3.0, 0.0, 0.0, 2.0, 0.4, -0.1, 1.7}, torch::kFloat64);
  auto n = normalize_pose_params(raw);
  CHECK(n[0].item<double>() == doctest::Approx(1.0));
  CHECK(n[3].item<double>() == doctest::Approx(1.0));
  CHECK(n[4].item<double>() == doctest::Approx(0.4));
  CHECK(n[6].item<double>() == doctest::Approx(1.7));

  auto [rot, t] = pose_params_to_matrix(n);
  CHECK(rot.dim() == 2);
  CHECK(rot.size(0) == 3);
  CHECK(rot.size(1) == 3);
  CHECK(t[2].item<double>() == doctest::Approx(1.7));
}
