// SPDX-License-Identifier: Apache-2.0
#include "objnerf/evaluation.hpp"

#include <cmath>
#include <map>
#include <sstream>

namespace objnerf {

double psnr(const torch::Tensor& a, const torch::Tensor& b) {
  if (a.sizes() != b.sizes()) throw ArgumentError("psnr requires equal shapes");
  const double mse =
      (a.to(torch::kFloat64) - b.to(torch::kFloat64)).square().mean().item<double>();
  if (mse == 0.0) return 100.0;
  return std::min(100.0, -10.0 * std::log10(mse));
}

namespace {

torch::Tensor gaussian_window(int size, double sigma) {
  auto x = torch::arange(size, torch::kFloat64) - (size - 1) / 2.0;
  auto g = torch::exp(-x.square() / (2.0 * sigma * sigma));
  g = g / g.sum();
  return torch::outer(g, g);  // [size, size]
}

// Valid-window local means via conv2d; channels processed independently.
torch::Tensor filter_valid(const torch::Tensor& img, const torch::Tensor& window) {
  // img [C, H, W] -> [C, H', W']
  auto w = window.unsqueeze(0).unsqueeze(0);  // [1, 1, k, k]
  return torch::conv2d(img.unsqueeze(1), w).squeeze(1);
}

}  // namespace

double ssim(const torch::Tensor& a, const torch::Tensor& b) {
  if (a.sizes() != b.sizes()) throw ArgumentError("ssim requires equal shapes");
  if (a.dim() != 2 && !(a.dim() == 3 && a.size(2) == 3)) {
    throw ArgumentError("ssim expects [H, W] or [H, W, 3] images");
  }
  constexpr int kWindow = 11;
  if (a.size(0) < kWindow || a.size(1) < kWindow) {
    throw ArgumentError("ssim requires images at least 11 pixels on each side");
  }
  constexpr double kC1 = 0.01 * 0.01;
  constexpr double kC2 = 0.03 * 0.03;

  auto to_chw = [](const torch::Tensor& t) {
    auto x = t.to(torch::kFloat64);
    return x.dim() == 2 ? x.unsqueeze(0) : x.permute({2, 0, 1}).contiguous();
  };
  auto x = to_chw(a);
  auto y = to_chw(b);
  auto window = gaussian_window(kWindow, 1.5);

  auto mu_x = filter_valid(x, window);
  auto mu_y = filter_valid(y, window);
  auto sigma_x = filter_valid(x * x, window) - mu_x.square();
  auto sigma_y = filter_valid(y * y, window) - mu_y.square();
  auto sigma_xy = filter_valid(x * y, window) - mu_x * mu_y;

  auto numerator = (2.0 * mu_x * mu_y + kC1) * (2.0 * sigma_xy + kC2);
  auto denominator = (mu_x.square() + mu_y.square() + kC1) * (sigma_x + sigma_y + kC2);
  return (numerator / denominator).mean().item<double>();
}

double masked_psnr(const torch::Tensor& a, const torch::Tensor& b, const torch::Tensor& alpha_a,
                   const torch::Tensor& alpha_b, double canvas) {
  if (a.sizes() != b.sizes()) throw ArgumentError("masked_psnr requires equal image shapes");
  if (a.dim() != 3 || a.size(2) != 3) throw ArgumentError("masked_psnr expects [H, W, 3] images");
  auto united = (alpha_a >= 0.5) | (alpha_b >= 0.5);  // [H, W]
  const int64_t count = united.sum().item<int64_t>();
  if (count == 0) return 100.0;
  auto u3 = united.unsqueeze(-1);
  auto av = torch::where(u3, a.to(torch::kFloat64), torch::full_like(a.to(torch::kFloat64), canvas));
  auto bv = torch::where(u3, b.to(torch::kFloat64), torch::full_like(b.to(torch::kFloat64), canvas));
  const double mse = (av - bv).square().sum().item<double>() /
                     (static_cast<double>(count) * a.size(-1));
  if (mse == 0.0) return 100.0;
  return std::min(100.0, -10.0 * std::log10(mse));
}

std::string EvalReport::to_table() const {
  std::ostringstream os;
  os.precision(10);
  os << "record_id\tpsnr\tssim\n";
  for (const auto& r : records) {
    os << r.id << "\t" << r.psnr << "\t" << r.ssim << "\n";
  }
  os << "#\n";
  os << "# records\t" << records.size() << "\n";
  os << "# mean_psnr\t" << mean_psnr << "\n";
  os << "# mean_ssim\t" << mean_ssim << "\n";
  os << "# alignment_residual\t" << alignment_residual << "\n";
  os << "# regime\t" << regime_label << "\n";
  return os.str();
}

void EvalReport::finalize() {
  double sp = 0.0, ss = 0.0;
  for (const auto& r : records) {
    sp += r.psnr;
    ss += r.ssim;
  }
  const double n = records.empty() ? 1.0 : static_cast<double>(records.size());
  mean_psnr = sp / n;
  mean_ssim = ss / n;
}

std::vector<EvalInstance> group_eval_instances(const ManifestDataset& dataset) {
  std::vector<std::string> order;
  std::map<std::string, std::vector<size_t>> groups;
  for (size_t i = 0; i < dataset.size(); ++i) {
    const auto& id = dataset.meta(i).id;
    const auto pos = id.rfind("_v");
    const std::string instance = pos == std::string::npos ? id : id.substr(0, pos);
    if (groups.find(instance) == groups.end()) order.push_back(instance);
    groups[instance].push_back(i);
  }
  std::vector<EvalInstance> out;
  for (const auto& name : order) {
    const auto& members = groups[name];
    EvalInstance inst;
    inst.input_record = members[0];
    for (size_t k = 1; k < members.size(); ++k) inst.target_records.push_back(members[k]);
    out.push_back(inst);
  }
  return out;
}

namespace {

// Rendering + scoring shared by the learned-model and oracle paths.
struct InstanceScene {
  FieldFn field;
  CameraPose predicted_input_pose;  // used for offset calibration
};

EvalReport evaluate_with_provider(
    const ManifestDataset& dataset, const EvalConfig& cfg,
    const std::function<InstanceScene(size_t instance_idx, const DatasetRecord& input)>& provider,
    bool fit_offset) {
  auto instances = group_eval_instances(dataset);
  if (instances.empty()) throw ConfigError("evaluation dataset is empty");
  for (const auto& inst : instances) {
    if (inst.target_records.empty()) {
      throw ConfigError("every evaluation instance needs at least one held-out target view");
    }
  }

  // Load input views and build per-instance scenes.
  std::vector<DatasetRecord> inputs;
  std::vector<InstanceScene> scenes;
  std::vector<CameraPose> pred_poses, gt_poses;
  for (size_t k = 0; k < instances.size(); ++k) {
    auto rec = dataset.load_record(instances[k].input_record);
    if (!rec.has_pose()) {
      throw ConfigError("evaluation requires ground-truth poses (record '" + rec.id + "')");
    }
    auto scene = provider(k, rec);
    pred_poses.push_back(scene.predicted_input_pose);
    gt_poses.push_back(rec.gt_pose());
    scenes.push_back(std::move(scene));
    inputs.push_back(std::move(rec));
  }

  EvalReport report;
  Eigen::Matrix3d offset = Eigen::Matrix3d::Identity();
  if (fit_offset) {
    const size_t n_cal = std::max<size_t>(
        1, static_cast<size_t>(std::llround(cfg.calibration_fraction * instances.size())));
    std::vector<CameraPose> cal_pred(pred_poses.begin(),
                                     pred_poses.begin() + std::min(n_cal, pred_poses.size()));
    std::vector<CameraPose> cal_gt(gt_poses.begin(),
                                   gt_poses.begin() + std::min(n_cal, gt_poses.size()));
    auto fit = fit_offset_rotation(cal_pred, cal_gt);
    offset = fit.rotation;
    report.alignment_residual = fit.residual;
  }

  auto gen = at::detail::createCPUGenerator(cfg.seed);
  torch::NoGradGuard no_grad;
  for (size_t k = 0; k < instances.size(); ++k) {
    for (size_t target_idx : instances[k].target_records) {
      auto target = dataset.load_record(target_idx);
      if (!target.has_pose()) {
        throw ConfigError("evaluation requires ground-truth poses (record '" + target.id + "')");
      }
      const auto& gt = target.gt_pose();
      // The model pose matching a ground-truth view: W R_pred ~ R_gt, so
      // render at R = W^T R_gt.
      Eigen::Matrix3d rot = offset.transpose() * gt.rotation();
      auto rot_t = torch::from_blob(rot.data(), {3, 3}, torch::kFloat64).clone();
      auto rays = generate_rays_rt(rot_t.transpose(0, 1).to(torch::kFloat32),
                                   gt.to_tensor(torch::kFloat32).narrow(0, 4, 3),
                                   target.intrinsics, full_image_pixels(target.intrinsics.width,
                                                                        target.intrinsics.height));
      auto render = render_rays(scenes[k].field, rays.origins, rays.directions, cfg.sampling, gen,
                                cfg.chunk_rays);
      const int h = target.intrinsics.height;
      const int w = target.intrinsics.width;
      auto rgb = render.rgb.reshape({h, w, 3});
      auto alpha = render.alpha.reshape({h, w});

      EvalRecordResult r;
      r.id = target.id;
      r.psnr = masked_psnr(rgb, target.image, alpha, target.mask);
      auto united = ((alpha >= 0.5) | (target.mask >= 0.5)).unsqueeze(-1);
      auto rendered_masked = torch::where(united, rgb, torch::zeros_like(rgb));
      auto target_masked = torch::where(united, target.image, torch::zeros_like(target.image));
      r.ssim = ssim(rendered_masked, target_masked);
      report.records.push_back(std::move(r));
    }
  }
  report.regime_label = cfg.regime_label;
  report.finalize();
  return report;
}

}  // namespace

EvalReport evaluate_novel_views(Model& model, const ManifestDataset& dataset,
                                const EvalConfig& cfg) {
  model.encoder->eval();
  model.field->eval();
  const int input_size = model.encoder->config().input_size;
  auto provider = [&](size_t, const DatasetRecord& rec) {
    torch::NoGradGuard no_grad;
    namespace F = torch::nn::functional;
    auto img = rec.image.permute({2, 0, 1}).unsqueeze(0);
    auto mask = rec.mask.unsqueeze(0).unsqueeze(0);
    if (rec.image.size(0) != input_size) {
      auto opts = F::InterpolateFuncOptions()
                      .size(std::vector<int64_t>{input_size, input_size})
                      .mode(torch::kBilinear)
                      .align_corners(false);
      img = F::interpolate(img, opts);
      mask = F::interpolate(mask, opts);
    }
    auto enc = model.encoder->forward(img, mask);
    InstanceScene scene;
    scene.field = model.field->bind({enc.codes.shape.squeeze(0), enc.codes.appearance.squeeze(0)},
                                    /*progress=*/1.0);
    scene.predicted_input_pose = CameraPose::from_tensor(enc.pose_params.squeeze(0));
    return scene;
  };
  return evaluate_with_provider(dataset, cfg, provider, /*fit_offset=*/true);
}

EvalReport evaluate_analytic_oracle(const std::vector<SyntheticSceneSpec>& specs,
                                    const ManifestDataset& dataset, const EvalConfig& cfg) {
  std::map<std::string, const SyntheticSceneSpec*> by_id;
  for (const auto& s : specs) by_id[s.id] = &s;
  auto provider = [&](size_t, const DatasetRecord& rec) {
    const auto pos = rec.id.rfind("_v");
    const std::string instance = pos == std::string::npos ? rec.id : rec.id.substr(0, pos);
    auto it = by_id.find(instance);
    if (it == by_id.end()) {
      throw ConfigError("no scene spec for evaluation instance '" + instance + "'");
    }
    InstanceScene scene;
    scene.field = analytic_field(*it->second);
    scene.predicted_input_pose = rec.gt_pose();
    return scene;
  };
  return evaluate_with_provider(dataset, cfg, provider, /*fit_offset=*/false);
}

}  // namespace objnerf
