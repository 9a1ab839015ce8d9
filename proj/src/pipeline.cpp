// SPDX-License-Identifier: Apache-2.0
#include "objnerf/pipeline.hpp"

#include <fstream>
#include <iostream>

#include "objnerf/image_io.hpp"

namespace objnerf {

namespace {

constexpr double kDegToRad = M_PI / 180.0;

void write_effective_config(const ConfigMap& cfg, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  std::ofstream out(out_dir / "effective_config.cfg");
  if (!out) throw IoError("cannot write effective config in " + out_dir.string());
  out << cfg.dump_effective();
}

}  // namespace

PosePrior prior_from_config(ConfigMap& cfg) {
  PosePrior prior;
  prior.azimuth_min = cfg.get_double("prior.azimuth_min_deg", 0.0) * kDegToRad;
  prior.azimuth_max = cfg.get_double("prior.azimuth_max_deg", 360.0) * kDegToRad;
  prior.elevation_min = cfg.get_double("prior.elevation_min_deg", -10.0) * kDegToRad;
  prior.elevation_max = cfg.get_double("prior.elevation_max_deg", 40.0) * kDegToRad;
  const double t_z = cfg.get_double("prior.t_z", 1.8);
  const double jitter = cfg.get_double("prior.t_z_jitter", 0.1);
  prior.translation_mean = Eigen::Vector3d(0.0, 0.0, t_z);
  prior.translation_spread = Eigen::Vector3d(0.0, 0.0, jitter);
  prior.validate();
  return prior;
}

SamplingConfig sampling_from_config(ConfigMap& cfg, bool default_jitter) {
  SamplingConfig s;
  s.near = cfg.get_double("sampling.near", 0.1);
  s.far = cfg.get_double("sampling.far", 4.0);
  s.num_coarse = static_cast<int>(cfg.get_int("sampling.num_coarse", 64));
  s.num_fine = static_cast<int>(cfg.get_int("sampling.num_fine", 128));
  s.jitter = cfg.get_bool("sampling.jitter", default_jitter);
  s.validate();
  return s;
}

FieldConfig field_from_config(ConfigMap& cfg) {
  FieldConfig f;
  f.mlp_depth = static_cast<int>(cfg.get_int("field.mlp_depth", 6));
  f.mlp_width = static_cast<int>(cfg.get_int("field.mlp_width", 128));
  f.code_dim = static_cast<int>(cfg.get_int("field.code_dim", 64));
  f.scene_box_half_extent = cfg.get_double("field.scene_box_half_extent", 0.4);
  f.symmetry_enabled = cfg.get_bool("field.symmetry", false);
  f.position_encoding.num_frequencies =
      static_cast<int>(cfg.get_int("field.position_frequencies", 10));
  f.direction_encoding.num_frequencies =
      static_cast<int>(cfg.get_int("field.direction_frequencies", 4));
  f.hidden_activation = cfg.get_string("field.hidden_activation", "relu");
  f.validate();
  return f;
}

EncoderConfig encoder_from_config(ConfigMap& cfg) {
  EncoderConfig e;
  e.input_size = static_cast<int>(cfg.get_int("encoder.input_size", 112));
  e.code_dim = static_cast<int>(cfg.get_int("field.code_dim", 64));
  e.backbone = cfg.get_string("encoder.backbone", "tiny");
  e.mask_as_channel = cfg.get_bool("encoder.mask_as_channel", true);
  e.t_z_min = cfg.get_double("encoder.t_z_min", 0.2);
  e.validate();
  return e;
}

TrainConfig train_config_from_config(ConfigMap& cfg) {
  TrainConfig t;
  t.epochs = static_cast<int>(cfg.get_int("train.epochs", 200));
  t.batch_size = static_cast<int>(cfg.get_int("train.batch_size", 8));
  t.initial_lr = cfg.get_double("train.initial_lr", 1e-3);
  t.lr_decay = cfg.get_double("train.lr_decay", 0.96);
  t.regime = regime_from_name(cfg.get_string("train.regime", "unsupervised"));
  const double default_fraction = t.regime == Regime::Full ? 1.0 : 0.0;
  t.labeled_fraction = cfg.get_double("train.labeled_fraction", default_fraction);
  t.seed = static_cast<uint64_t>(cfg.get_int("train.seed", 0));
  t.phase1_epochs = static_cast<int>(cfg.get_int("train.phase1_epochs", 0));
  t.patch_size = static_cast<int>(cfg.get_int("train.patch_size", 80));
  t.anneal_fraction = cfg.get_double("train.anneal_fraction", 0.25);
  t.checkpoint_every_epochs = static_cast<int>(cfg.get_int("train.checkpoint_every_epochs", 10));
  t.chunk_rays = cfg.get_int("train.chunk_rays", 4096);
  t.crop_inputs = cfg.get_bool("train.crop_inputs", false);
  t.saturating_generator_loss = cfg.get_bool("train.saturating_generator_loss", false);
  t.discriminator_base_channels = static_cast<int>(cfg.get_int("disc.base_channels", 32));

  t.field = field_from_config(cfg);
  t.encoder = encoder_from_config(cfg);
  t.sampling = sampling_from_config(cfg, /*default_jitter=*/true);
  t.prior = prior_from_config(cfg);

  t.weights.recon_color = cfg.get_double("loss.recon_color", 1.0);
  t.weights.recon_alpha = cfg.get_double("loss.recon_alpha", 1.0);
  t.weights.adv_color = cfg.get_double("loss.adv_color", 1.0);
  t.weights.adv_alpha = cfg.get_double("loss.adv_alpha", 1.0);
  t.weights.pose_consistency = cfg.get_double("loss.pose_consistency", 50.0);
  t.weights.pose_supervised =
      cfg.get_double("loss.pose_supervised", t.regime == Regime::Unsupervised ? 0.0 : 1.0);
  t.validate();
  return t;
}

GeneratorOptions generator_options_from_config(ConfigMap& cfg) {
  GeneratorOptions opt;
  opt.image_size = static_cast<int>(cfg.get_int("gen.image_size", 64));
  opt.views_per_instance = static_cast<int>(cfg.get_int("gen.views_per_instance", 1));
  opt.seed = static_cast<uint64_t>(cfg.get_int("gen.seed", 0));
  opt.prior = prior_from_config(cfg);
  return opt;
}

void command_gen_data(ConfigMap& cfg, bool dry_run) {
  const std::string out_dir = cfg.require_string("gen.out_dir");
  const int num_instances = static_cast<int>(cfg.get_int("gen.num_instances", 20));
  const bool symmetric_only = cfg.get_bool("gen.symmetric_only", false);
  auto options = generator_options_from_config(cfg);
  cfg.reject_unknown_keys();
  if (dry_run) {
    std::cout << cfg.dump_effective();
    return;
  }
  auto spec_gen = at::detail::createCPUGenerator(derive_seed(options.seed, 0x0bec));
  auto specs = random_scene_specs(num_instances, spec_gen);
  if (symmetric_only) {
    for (auto& s : specs) {
      if (!s.symmetric) {
        for (auto& p : s.primitives) p.center.y() = 0.0;
        if (s.primitives.size() == 2) {
          s.primitives[1] = s.primitives[0];
        }
        s.symmetric = true;
      }
    }
  }
  auto manifest = generate_synthetic_dataset(specs, options, out_dir);
  write_effective_config(cfg, out_dir);
  std::cout << "wrote " << manifest.string() << " (" << num_instances << " instances x "
            << options.views_per_instance << " views)\n";
}

void command_train(ConfigMap& cfg, bool dry_run) {
  const std::string manifest_path = cfg.require_string("train.data");
  const std::string out_dir = cfg.require_string("train.out_dir");
  auto train_cfg = train_config_from_config(cfg);
  cfg.reject_unknown_keys();
  if (dry_run) {
    std::cout << cfg.dump_effective();
    return;
  }
  auto dataset = ManifestDataset::load(manifest_path);
  auto result = run_training(dataset, train_cfg, out_dir);
  write_effective_config(cfg, out_dir);
  std::cout << "trained " << result.steps << " steps; checkpoint "
            << result.checkpoint_path.string() << "\n";
}

void command_render(ConfigMap& cfg, bool dry_run) {
  const std::string checkpoint = cfg.require_string("render.checkpoint");
  const std::string manifest_path = cfg.require_string("render.data");
  const std::string out_dir = cfg.require_string("render.out_dir");
  const int record_index = static_cast<int>(cfg.get_int("render.record_index", 0));
  const int azimuth_steps = static_cast<int>(cfg.get_int("render.azimuth_steps", 8));
  const uint64_t seed = static_cast<uint64_t>(cfg.get_int("render.seed", 0));
  const int64_t chunk = cfg.get_int("render.chunk_rays", 2048);
  auto sampling = sampling_from_config(cfg, /*default_jitter=*/false);
  cfg.reject_unknown_keys();
  if (dry_run) {
    std::cout << cfg.dump_effective();
    return;
  }
  if (azimuth_steps < 1) throw ConfigError("render.azimuth_steps must be >= 1");

  auto model = load_model(checkpoint);
  auto dataset = ManifestDataset::load(manifest_path);
  if (record_index < 0 || static_cast<size_t>(record_index) >= dataset.size()) {
    throw ConfigError("render.record_index outside the manifest");
  }
  auto rec = dataset.load_record(record_index);
  const int input_size = model.encoder->config().input_size;
  if (rec.image.size(0) != input_size) {
    auto crop = crop_to_mask(rec.image, rec.mask, rec.intrinsics, input_size);
    rec.image = crop.image;
    rec.mask = crop.mask;
    rec.intrinsics = crop.intrinsics;
  }

  torch::NoGradGuard no_grad;
  model.encoder->eval();
  model.field->eval();
  auto enc = model.encoder->forward(rec.image.permute({2, 0, 1}).unsqueeze(0),
                                    rec.mask.unsqueeze(0).unsqueeze(0));
  const CameraPose pred = CameraPose::from_tensor(enc.pose_params.squeeze(0));
  LatentCodes codes{enc.codes.shape.squeeze(0), enc.codes.appearance.squeeze(0)};
  auto field_fn = model.field->bind(codes, 1.0);

  std::filesystem::create_directories(out_dir);
  const std::filesystem::path out(out_dir);
  const int hw = rec.intrinsics.width;
  auto gen = at::detail::createCPUGenerator(seed);
  PatchSpec full;
  full.patch_height = rec.intrinsics.height;
  full.patch_width = rec.intrinsics.width;

  auto save_view = [&](const CameraPose& pose, const std::string& stem) {
    auto render = render_patch(field_fn, pose, rec.intrinsics, full, sampling, gen,
                               torch::kFloat32, chunk);
    write_png_rgb(out / (stem + ".png"), render.rgb.reshape({hw, hw, 3}));
    write_png_gray(out / (stem + "_alpha.png"), render.alpha.reshape({hw, hw}));
    write_pfm(out / (stem + "_depth.pfm"), render.depth.reshape({hw, hw}));
  };

  write_png_rgb(out / "input.png", rec.image);
  save_view(pred, "recon");
  for (int k = 0; k < azimuth_steps; ++k) {
    const double az = pred.azimuth() + 2.0 * M_PI * k / azimuth_steps;
    const CameraPose pose = CameraPose::from_angles(az, pred.elevation(), pred.translation());
    char stem[32];
    std::snprintf(stem, sizeof(stem), "view_%03d", k);
    save_view(pose, stem);
  }
  write_effective_config(cfg, out_dir);
  std::cout << "rendered reconstruction + " << azimuth_steps << " novel views into " << out_dir
            << "\n";
}

void command_eval(ConfigMap& cfg, bool dry_run) {
  const std::string manifest_path = cfg.require_string("eval.data");
  const std::string out_dir = cfg.require_string("eval.out_dir");
  const std::string mode = cfg.get_string("eval.mode", "model");
  const std::string checkpoint =
      mode == "model" ? cfg.require_string("eval.checkpoint") : cfg.get_string("eval.checkpoint", "");
  EvalConfig ec;
  ec.sampling = sampling_from_config(cfg, /*default_jitter=*/false);
  ec.calibration_fraction = cfg.get_double("eval.calibration_fraction", 0.2);
  ec.chunk_rays = cfg.get_int("eval.chunk_rays", 2048);
  ec.seed = static_cast<uint64_t>(cfg.get_int("eval.seed", 0));
  ec.regime_label = cfg.get_string("eval.regime_label", mode);
  cfg.reject_unknown_keys();
  if (dry_run) {
    std::cout << cfg.dump_effective();
    return;
  }
  if (mode != "model" && mode != "oracle") {
    throw ConfigError("eval.mode must be 'model' or 'oracle'");
  }

  auto dataset = ManifestDataset::load(manifest_path);
  EvalReport report;
  if (mode == "model") {
    auto model = load_model(checkpoint);
    report = evaluate_novel_views(model, dataset, ec);
  } else {
    auto specs = read_scene_specs(std::filesystem::path(manifest_path).parent_path() /
                                  "scenes.json");
    report = evaluate_analytic_oracle(specs, dataset, ec);
  }
  std::filesystem::create_directories(out_dir);
  std::ofstream table(std::filesystem::path(out_dir) / "eval_report.tsv");
  if (!table) throw IoError("cannot write eval report in " + out_dir);
  table << report.to_table();
  write_effective_config(cfg, out_dir);
  std::cout << "mean_psnr " << report.mean_psnr << " mean_ssim " << report.mean_ssim << " over "
            << report.records.size() << " records\n";
}

}  // namespace objnerf
