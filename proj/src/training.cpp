// SPDX-License-Identifier: Apache-2.0
#include "objnerf/training.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <json.hpp>

namespace objnerf {

namespace F = torch::nn::functional;

std::string regime_name(Regime r) {
  switch (r) {
    case Regime::Unsupervised: return "unsupervised";
    case Regime::Weak: return "weak";
    case Regime::Full: return "full";
  }
  return "unsupervised";
}

Regime regime_from_name(const std::string& s) {
  if (s == "unsupervised") return Regime::Unsupervised;
  if (s == "weak") return Regime::Weak;
  if (s == "full") return Regime::Full;
  throw ConfigError("unknown regime '" + s + "' (expected unsupervised|weak|full)");
}

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("train.epochs must be >= 1");
  if (batch_size < 1) throw ConfigError("train.batch_size must be >= 1");
  if (!(initial_lr > 0.0)) throw ConfigError("train.initial_lr must be > 0");
  if (!(lr_decay > 0.0 && lr_decay <= 1.0)) throw ConfigError("train.lr_decay must be in (0, 1]");
  if (!(anneal_fraction >= 0.0 && anneal_fraction <= 1.0)) {
    throw ConfigError("train.anneal_fraction must be in [0, 1]");
  }
  if (checkpoint_every_epochs < 1) throw ConfigError("train.checkpoint_every_epochs must be >= 1");
  switch (regime) {
    case Regime::Unsupervised:
      if (labeled_fraction != 0.0) {
        throw ConfigError("unsupervised regime requires labeled_fraction = 0");
      }
      if (weights.pose_supervised != 0.0) {
        throw ConfigError("unsupervised regime requires pose_supervised weight 0");
      }
      break;
    case Regime::Weak:
      if (!(labeled_fraction > 0.0 && labeled_fraction < 1.0)) {
        throw ConfigError("weak regime requires 0 < labeled_fraction < 1");
      }
      break;
    case Regime::Full:
      if (labeled_fraction != 1.0) throw ConfigError("full regime requires labeled_fraction = 1");
      break;
  }
  if (patch_size < 8) throw ConfigError("train.patch_size must be >= 8");
  if (patch_size > encoder.input_size) {
    throw ConfigError("train.patch_size cannot exceed the encoder input size");
  }
  weights.validate();
  field.validate();
  encoder.validate();
  sampling.validate();
  prior.validate();
}

double lr_at(int64_t epoch, const TrainConfig& cfg) {
  if (epoch < 0) throw ArgumentError("epoch must be >= 0");
  return cfg.initial_lr * std::pow(cfg.lr_decay, static_cast<double>(epoch));
}

TrainState init_train_state(const TrainConfig& cfg, int64_t total_steps_hint) {
  cfg.validate();
  torch::manual_seed(cfg.seed);
  TrainState st;
  st.model.encoder = ImageEncoder(cfg.encoder);
  st.model.field = ConditionalField(cfg.field);
  st.disc_color = make_color_discriminator(cfg.patch_size, cfg.discriminator_base_channels);
  st.disc_alpha = make_alpha_discriminator(cfg.patch_size, cfg.discriminator_base_channels);

  std::vector<torch::Tensor> gen_params = st.model.encoder->parameters();
  auto field_params = st.model.field->parameters();
  gen_params.insert(gen_params.end(), field_params.begin(), field_params.end());
  st.gen_opt =
      std::make_unique<torch::optim::Adam>(gen_params, torch::optim::AdamOptions(cfg.initial_lr));
  st.disc_color_opt = std::make_unique<torch::optim::Adam>(
      st.disc_color->parameters(), torch::optim::AdamOptions(cfg.initial_lr));
  st.disc_alpha_opt = std::make_unique<torch::optim::Adam>(
      st.disc_alpha->parameters(), torch::optim::AdamOptions(cfg.initial_lr));
  st.rng = at::detail::createCPUGenerator(derive_seed(cfg.seed, 0xD1CE));
  st.anneal_duration =
      std::max<int64_t>(1, std::llround(cfg.anneal_fraction * static_cast<double>(
                                                                  std::max<int64_t>(
                                                                      1, total_steps_hint))));
  return st;
}

namespace {

void check_finite(const torch::Tensor& value, const char* term, int64_t step) {
  if (!torch::isfinite(value).all().item<bool>()) {
    throw NumericError("non-finite " + std::string(term) + " loss at step " +
                       std::to_string(step));
  }
}

// Gathers per-pixel values from an [H, W, C] or [H, W] tensor at integer
// pixel coordinates [N, 2].
torch::Tensor gather_pixels(const torch::Tensor& image, const torch::Tensor& pixels) {
  const int64_t w = image.size(1);
  auto lin = pixels.select(1, 1) * w + pixels.select(1, 0);
  if (image.dim() == 2) {
    return image.reshape({-1}).index_select(0, lin);
  }
  return image.reshape({-1, image.size(2)}).index_select(0, lin);
}

int64_t rand_int(TrainState& state, int64_t lo, int64_t hi_exclusive) {
  if (hi_exclusive <= lo + 1) return lo;
  return lo +
         torch::randint(hi_exclusive - lo, {1}, state.rng, torch::kInt64).item<int64_t>();
}

double rand_uniform(TrainState& state, double lo, double hi) {
  return lo + torch::rand({1}, state.rng, torch::kFloat64).item<double>() * (hi - lo);
}

void set_lr(torch::optim::Adam& opt, double lr) {
  for (auto& group : opt.param_groups()) {
    static_cast<torch::optim::AdamOptions&>(group.options()).lr(lr);
  }
}

}  // namespace

StepResult train_step(const std::vector<DatasetRecord>& batch, const std::vector<bool>& labeled,
                      TrainState& state, const TrainConfig& cfg) {
  if (batch.empty()) throw ArgumentError("train_step requires a non-empty batch");
  if (!labeled.empty() && labeled.size() != batch.size()) {
    throw ArgumentError("labeled flags must match the batch size");
  }
  const int64_t b_count = static_cast<int64_t>(batch.size());
  const int s = cfg.encoder.input_size;
  const int p = cfg.patch_size;
  const double progress = state.encoding_progress();
  const bool use_adv = cfg.weights.adv_color > 0.0 || cfg.weights.adv_alpha > 0.0;
  const bool use_poc = cfg.weights.pose_consistency > 0.0;
  const bool render_novel = use_adv || use_poc;

  state.model.encoder->train();
  state.model.field->train();
  state.disc_color->train();
  state.disc_alpha->train();

  std::vector<torch::Tensor> image_list, mask_list;
  for (const auto& rec : batch) {
    if (rec.image.size(0) != s || rec.image.size(1) != s) {
      throw ArgumentError("record '" + rec.id + "' does not match the encoder input size");
    }
    image_list.push_back(rec.image.permute({2, 0, 1}));
    mask_list.push_back(rec.mask.unsqueeze(0));
  }
  auto images = torch::stack(image_list);  // [B, 3, S, S]
  auto masks = torch::stack(mask_list);    // [B, 1, S, S]

  auto enc = state.model.encoder->forward(images, masks);

  auto zero = torch::zeros({}, torch::kFloat32);
  auto recon_color = zero.clone();
  auto recon_alpha = zero.clone();
  auto pose_consistency = zero.clone();
  auto pose_supervised = zero.clone();
  int64_t labeled_count = 0;
  double novel_alpha_sum = 0.0;
  std::vector<torch::Tensor> fake_rgb, fake_alpha, real_rgb, real_alpha;

  for (int64_t b = 0; b < b_count; ++b) {
    const auto& rec = batch[b];
    LatentCodes codes{enc.codes.shape.select(0, b), enc.codes.appearance.select(0, b)};
    auto field_fn = state.model.field->bind(codes, progress);
    auto pose_b = enc.pose_params.select(0, b);

    // Input-view reconstruction on a random stride-1 crop, rendered from
    // the encoder's own pose estimate.
    PatchSpec crop;
    crop.patch_height = crop.patch_width = p;
    crop.offset_x = static_cast<double>(rand_int(state, 0, s - p + 1));
    crop.offset_y = static_cast<double>(rand_int(state, 0, s - p + 1));
    auto crop_pixels = patch_pixels(crop, s, s);
    auto rays = generate_rays(pose_b, rec.intrinsics, crop_pixels);
    auto render = render_rays(field_fn, rays.origins, rays.directions, cfg.sampling, state.rng,
                              cfg.chunk_rays);
    recon_color = recon_color + reconstruction_loss(gather_pixels(rec.image, crop_pixels),
                                                    render.rgb);
    recon_alpha = recon_alpha + reconstruction_loss(gather_pixels(rec.mask, crop_pixels),
                                                    render.alpha);

    if (render_novel) {
      // Novel view from the prior, rendered over a full-extent strided grid.
      const CameraPose novel_pose = sample_pose_prior(cfg.prior, state.rng);
      auto novel_params = novel_pose.to_tensor(torch::kFloat32);
      PatchSpec novel = full_extent_patch(p, s, s);
      novel.offset_x = rand_uniform(state, 0.0, novel.stride);
      novel.offset_y = rand_uniform(state, 0.0, novel.stride);
      auto novel_pixels = patch_pixels(novel, s, s);
      auto novel_rays = generate_rays(novel_params, rec.intrinsics, novel_pixels);
      auto novel_render = render_rays(field_fn, novel_rays.origins, novel_rays.directions,
                                      cfg.sampling, state.rng, cfg.chunk_rays);
      auto patch_rgb = novel_render.rgb.reshape({p, p, 3}).permute({2, 0, 1});  // [3, P, P]
      auto patch_alpha = novel_render.alpha.reshape({1, p, p});
      novel_alpha_sum += patch_alpha.detach().mean().item<double>();
      fake_rgb.push_back(patch_rgb);
      fake_alpha.push_back(patch_alpha);

      if (use_poc) {
        // Cycle consistency: re-estimate the pose of the rendered view.
        auto opts = F::InterpolateFuncOptions()
                        .size(std::vector<int64_t>{s, s})
                        .mode(torch::kBilinear)
                        .align_corners(false);
        auto re_img = F::interpolate(patch_rgb.unsqueeze(0), opts);
        auto re_mask = F::interpolate(patch_alpha.unsqueeze(0), opts).clamp(0.0, 1.0);
        auto re_enc = state.model.encoder->forward(re_img, re_mask);
        pose_consistency =
            pose_consistency + pose_consistency_loss(novel_params, re_enc.pose_params.select(0, 0));
      }

      if (use_adv) {
        // Real patches come from another record of the batch, subsampled
        // on the same strided grid as the fake.
        const int64_t src =
            b_count > 1 ? (b + rand_int(state, 1, b_count)) % b_count : b;
        real_rgb.push_back(
            gather_pixels(batch[src].image, novel_pixels).reshape({p, p, 3}).permute({2, 0, 1}));
        real_alpha.push_back(gather_pixels(batch[src].mask, novel_pixels).reshape({1, p, p}));
      }
    }

    const bool is_labeled = !labeled.empty() && labeled[b];
    if (is_labeled && cfg.weights.pose_supervised > 0.0) {
      auto gt_params = rec.gt_pose().to_tensor(torch::kFloat32);
      pose_supervised = pose_supervised + pose_supervised_loss(pose_b, gt_params);
      ++labeled_count;
    }
  }

  const auto bf = static_cast<double>(b_count);
  recon_color = recon_color / bf;
  recon_alpha = recon_alpha / bf;
  if (use_poc) pose_consistency = pose_consistency / bf;
  if (labeled_count > 0) pose_supervised = pose_supervised / static_cast<double>(labeled_count);

  torch::Tensor gen_adv_color, gen_adv_alpha;
  torch::Tensor fakes_rgb, fakes_alpha;
  if (use_adv) {
    fakes_rgb = torch::stack(fake_rgb);      // [B, 3, P, P]
    fakes_alpha = torch::stack(fake_alpha);  // [B, 1, P, P]
    auto clamp_log = [](const torch::Tensor& t) { return torch::log(t.clamp_min(1e-7)); };
    auto s_fake_c = torch::sigmoid(state.disc_color->forward(fakes_rgb));
    auto s_fake_a = torch::sigmoid(state.disc_alpha->forward(fakes_alpha));
    if (cfg.saturating_generator_loss) {
      gen_adv_color = clamp_log(1.0 - s_fake_c).mean();
      gen_adv_alpha = clamp_log(1.0 - s_fake_a).mean();
    } else {
      gen_adv_color = -clamp_log(s_fake_c).mean();
      gen_adv_alpha = -clamp_log(s_fake_a).mean();
    }
  }

  // ---- generator update (encoder + field) ----
  auto total = cfg.weights.recon_color * recon_color + cfg.weights.recon_alpha * recon_alpha;
  if (use_adv) {
    total = total + cfg.weights.adv_color * gen_adv_color + cfg.weights.adv_alpha * gen_adv_alpha;
  }
  if (use_poc) total = total + cfg.weights.pose_consistency * pose_consistency;
  if (labeled_count > 0) total = total + cfg.weights.pose_supervised * pose_supervised;

  check_finite(recon_color, "recon_color", state.step);
  check_finite(recon_alpha, "recon_alpha", state.step);
  if (use_adv) {
    check_finite(gen_adv_color, "adv_color", state.step);
    check_finite(gen_adv_alpha, "adv_alpha", state.step);
  }
  if (use_poc) check_finite(pose_consistency, "pose_consistency", state.step);
  if (labeled_count > 0) check_finite(pose_supervised, "pose_supervised", state.step);

  state.gen_opt->zero_grad();
  total.backward();
  state.gen_opt->step();

  // ---- discriminator updates ----
  StepResult result;
  if (use_adv) {
    auto reals_rgb = torch::stack(real_rgb);
    auto reals_alpha = torch::stack(real_alpha);
    auto d_color = adversarial_losses(state.disc_color->forward(reals_rgb),
                                      state.disc_color->forward(fakes_rgb.detach()))
                       .discriminator;
    check_finite(d_color, "disc_color", state.step);
    state.disc_color_opt->zero_grad();
    d_color.backward();
    state.disc_color_opt->step();

    auto d_alpha = adversarial_losses(state.disc_alpha->forward(reals_alpha),
                                      state.disc_alpha->forward(fakes_alpha.detach()))
                       .discriminator;
    check_finite(d_alpha, "disc_alpha", state.step);
    state.disc_alpha_opt->zero_grad();
    d_alpha.backward();
    state.disc_alpha_opt->step();

    result.disc_color_loss = d_color.item<double>();
    result.disc_alpha_loss = d_alpha.item<double>();
  }

  LossTerms terms;
  terms.recon_color = recon_color.item<double>();
  terms.recon_alpha = recon_alpha.item<double>();
  if (use_adv) {
    terms.adv_color = gen_adv_color.item<double>();
    terms.adv_alpha = gen_adv_alpha.item<double>();
  }
  if (use_poc) terms.pose_consistency = pose_consistency.item<double>();
  if (labeled_count > 0) terms.pose_supervised = pose_supervised.item<double>();
  result.report = combine_losses(terms, cfg.weights);
  result.novel_alpha_mean = render_novel ? novel_alpha_sum / bf : -1.0;

  ++state.step;
  return result;
}

namespace {

struct Phase {
  std::vector<int64_t> indices;
  int epochs = 0;
};

std::vector<DatasetRecord> load_all_records(const ManifestDataset& dataset,
                                            const TrainConfig& cfg) {
  std::vector<DatasetRecord> records;
  records.reserve(dataset.size());
  for (size_t i = 0; i < dataset.size(); ++i) {
    auto rec = dataset.load_record(i);
    if (cfg.crop_inputs) {
      auto crop = crop_to_mask(rec.image, rec.mask, rec.intrinsics, cfg.encoder.input_size);
      rec.image = crop.image;
      rec.mask = crop.mask;
      rec.intrinsics = crop.intrinsics;
    } else if (rec.image.size(0) != cfg.encoder.input_size ||
               rec.image.size(1) != cfg.encoder.input_size) {
      throw ConfigError("record '" + rec.id +
                        "' does not match the encoder input size; set train.crop_inputs");
    }
    records.push_back(std::move(rec));
  }
  return records;
}

}  // namespace

TrainResult run_training(const ManifestDataset& dataset, const TrainConfig& cfg,
                         const std::filesystem::path& out_dir) {
  cfg.validate();
  if (dataset.size() == 0) throw ConfigError("training dataset is empty");
  std::filesystem::create_directories(out_dir);

  auto records = load_all_records(dataset, cfg);
  const int64_t n = static_cast<int64_t>(records.size());

  // Labeled subset: a seeded permutation prefix of round(fraction * n).
  std::vector<bool> labeled(n, false);
  int64_t n_labeled = 0;
  if (cfg.regime == Regime::Full) {
    n_labeled = n;
  } else if (cfg.regime == Regime::Weak) {
    n_labeled = std::llround(cfg.labeled_fraction * static_cast<double>(n));
    if (n_labeled < 1 || n_labeled >= n) {
      throw ConfigError("weak regime labeled_fraction selects " + std::to_string(n_labeled) +
                        " of " + std::to_string(n) + " records");
    }
  }
  std::vector<int64_t> labeled_indices;
  {
    auto perm_gen = at::detail::createCPUGenerator(derive_seed(cfg.seed, 0xB00C));
    auto perm = torch::randperm(n, perm_gen, torch::kInt64);
    for (int64_t i = 0; i < n_labeled; ++i) {
      const int64_t idx = perm[i].item<int64_t>();
      labeled[idx] = true;
      labeled_indices.push_back(idx);
    }
  }
  for (int64_t idx : labeled_indices) {
    if (!records[idx].has_pose()) {
      throw ConfigError("record '" + records[idx].id +
                        "' is selected as labeled but carries no pose");
    }
  }

  std::vector<int64_t> all_indices(n);
  for (int64_t i = 0; i < n; ++i) all_indices[i] = i;

  std::vector<Phase> phases;
  if (cfg.regime == Regime::Weak) {
    const int p1 = cfg.phase1_epochs > 0 ? cfg.phase1_epochs : std::max(1, cfg.epochs / 4);
    phases.push_back({labeled_indices, p1});
  }
  phases.push_back({all_indices, cfg.epochs});

  auto steps_per_epoch = [&](const Phase& ph) {
    return (static_cast<int64_t>(ph.indices.size()) + cfg.batch_size - 1) / cfg.batch_size;
  };
  int64_t total_steps = 0;
  for (const auto& ph : phases) total_steps += steps_per_epoch(ph) * ph.epochs;

  auto state = init_train_state(cfg, total_steps);

  std::ofstream jsonl(out_dir / "train_log.jsonl");
  std::ofstream tsv(out_dir / "losses.tsv");
  if (!jsonl || !tsv) throw IoError("failed to open training logs in " + out_dir.string());

  for (size_t phase_idx = 0; phase_idx < phases.size(); ++phase_idx) {
    const auto& phase = phases[phase_idx];
    for (int epoch = 0; epoch < phase.epochs; ++epoch) {
      // The decay schedule restarts with each phase.
      const double lr = lr_at(epoch, cfg);
      set_lr(*state.gen_opt, lr);
      set_lr(*state.disc_color_opt, lr);
      set_lr(*state.disc_alpha_opt, lr);

      const int64_t m = static_cast<int64_t>(phase.indices.size());
      auto order = torch::randperm(m, state.rng, torch::kInt64);
      for (int64_t start = 0; start < m; start += cfg.batch_size) {
        const int64_t count = std::min<int64_t>(cfg.batch_size, m - start);
        std::vector<DatasetRecord> batch;
        std::vector<bool> batch_labeled;
        for (int64_t k = 0; k < count; ++k) {
          const int64_t idx = phase.indices[order[start + k].item<int64_t>()];
          batch.push_back(records[idx]);
          batch_labeled.push_back(labeled[idx]);
        }
        const int64_t step_index = state.step;
        const auto t0 = std::chrono::steady_clock::now();
        auto sr = train_step(batch, batch_labeled, state, cfg);
        const double wall_ms =
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
                .count();

        tsv << sr.report.to_log_lines(step_index);
        nlohmann::json terms = nlohmann::json::object();
        for (const auto& [name, value] : sr.report.terms) terms[name] = value;
        nlohmann::json line = {{"step", step_index},
                               {"epoch", state.epoch},
                               {"phase", phase_idx},
                               {"lr", lr},
                               {"terms", terms},
                               {"total", sr.report.total},
                               {"novel_alpha_mean", sr.novel_alpha_mean},
                               {"wall_ms", wall_ms}};
        if (sr.report.has_term("adv_color")) {
          line["disc_color"] = sr.disc_color_loss;
          line["disc_alpha"] = sr.disc_alpha_loss;
        }
        jsonl << line.dump() << "\n";
      }
      ++state.epoch;
      if (state.epoch % cfg.checkpoint_every_epochs == 0) {
        char name[64];
        std::snprintf(name, sizeof(name), "checkpoint_epoch_%04lld",
                      static_cast<long long>(state.epoch));
        save_model_checkpoint(out_dir / (std::string(name) + ".onrf"), state, cfg);
      }
    }
  }

  TrainResult result;
  result.checkpoint_path = out_dir / "model.onrf";
  result.state_path = out_dir / "train_state.onrf";
  result.log_path = out_dir / "train_log.jsonl";
  result.loss_table_path = out_dir / "losses.tsv";
  result.steps = state.step;
  save_model_checkpoint(result.checkpoint_path, state, cfg);
  save_train_state(result.state_path, state, cfg);
  return result;
}

namespace {

nlohmann::json model_configs(const TrainConfig& cfg, const TrainState& state) {
  nlohmann::json j;
  j["field"] = cfg.field;
  j["encoder"] = cfg.encoder;
  j["discriminator_base_channels"] = cfg.discriminator_base_channels;
  j["patch_size"] = cfg.patch_size;
  j["sampling"] = cfg.sampling;
  j["prior"] = cfg.prior;
  j["weights"] = cfg.weights;
  j["step"] = state.step;
  j["epoch"] = state.epoch;
  j["anneal_duration"] = state.anneal_duration;
  return j;
}

void serialize_adam(const torch::optim::Adam& opt, const std::vector<torch::Tensor>& params,
                    const std::string& prefix, std::map<std::string, torch::Tensor>& out) {
  const auto& state_map = opt.state();
  for (size_t i = 0; i < params.size(); ++i) {
    auto it = state_map.find(params[i].unsafeGetTensorImpl());
    if (it == state_map.end()) continue;  // parameter never stepped
    const auto& s = static_cast<const torch::optim::AdamParamState&>(*it->second);
    const std::string base = prefix + std::to_string(i) + ".";
    out[base + "step"] = torch::tensor(s.step(), torch::kInt64);
    out[base + "exp_avg"] = s.exp_avg().detach().clone();
    out[base + "exp_avg_sq"] = s.exp_avg_sq().detach().clone();
  }
}

void restore_adam(torch::optim::Adam& opt, const std::vector<torch::Tensor>& params,
                  const std::string& prefix, const std::map<std::string, torch::Tensor>& tensors) {
  auto& state_map = opt.state();
  for (size_t i = 0; i < params.size(); ++i) {
    const std::string base = prefix + std::to_string(i) + ".";
    auto step_it = tensors.find(base + "step");
    if (step_it == tensors.end()) continue;
    auto s = std::make_unique<torch::optim::AdamParamState>();
    s->step(step_it->second.item<int64_t>());
    s->exp_avg(tensors.at(base + "exp_avg").clone());
    s->exp_avg_sq(tensors.at(base + "exp_avg_sq").clone());
    state_map[params[i].unsafeGetTensorImpl()] = std::move(s);
  }
}

}  // namespace

void save_model_checkpoint(const std::filesystem::path& path, const TrainState& state,
                           const TrainConfig& cfg) {
  Checkpoint ckpt;
  collect_parameters(*state.model.encoder, "encoder.", ckpt.tensors);
  collect_parameters(*state.model.field, "field.", ckpt.tensors);
  collect_parameters(*state.disc_color, "disc_color.", ckpt.tensors);
  collect_parameters(*state.disc_alpha, "disc_alpha.", ckpt.tensors);
  ckpt.configs = model_configs(cfg, state);
  save_checkpoint(path, ckpt);
}

Model load_model(const std::filesystem::path& path) {
  auto ckpt = load_checkpoint(path);
  Model model;
  model.encoder = ImageEncoder(ckpt.configs.at("encoder").get<EncoderConfig>());
  model.field = ConditionalField(ckpt.configs.at("field").get<FieldConfig>());
  restore_parameters(*model.encoder, "encoder.", ckpt.tensors);
  restore_parameters(*model.field, "field.", ckpt.tensors);
  model.encoder->eval();
  model.field->eval();
  return model;
}

void save_train_state(const std::filesystem::path& path, const TrainState& state,
                      const TrainConfig& cfg) {
  Checkpoint ckpt;
  collect_parameters(*state.model.encoder, "encoder.", ckpt.tensors);
  collect_parameters(*state.model.field, "field.", ckpt.tensors);
  collect_parameters(*state.disc_color, "disc_color.", ckpt.tensors);
  collect_parameters(*state.disc_alpha, "disc_alpha.", ckpt.tensors);

  std::vector<torch::Tensor> gen_params = state.model.encoder->parameters();
  auto field_params = state.model.field->parameters();
  gen_params.insert(gen_params.end(), field_params.begin(), field_params.end());
  serialize_adam(*state.gen_opt, gen_params, "adam_gen.", ckpt.tensors);
  serialize_adam(*state.disc_color_opt, state.disc_color->parameters(), "adam_disc_color.",
                 ckpt.tensors);
  serialize_adam(*state.disc_alpha_opt, state.disc_alpha->parameters(), "adam_disc_alpha.",
                 ckpt.tensors);

  ckpt.tensors["rng.train"] = state.rng.get_state();
  ckpt.tensors["rng.global"] = at::detail::getDefaultCPUGenerator().get_state();
  ckpt.configs = model_configs(cfg, state);
  save_checkpoint(path, ckpt);
}

TrainState load_train_state(const std::filesystem::path& path, const TrainConfig& cfg) {
  auto ckpt = load_checkpoint(path);
  auto state = init_train_state(cfg, 1);
  restore_parameters(*state.model.encoder, "encoder.", ckpt.tensors);
  restore_parameters(*state.model.field, "field.", ckpt.tensors);
  restore_parameters(*state.disc_color, "disc_color.", ckpt.tensors);
  restore_parameters(*state.disc_alpha, "disc_alpha.", ckpt.tensors);

  std::vector<torch::Tensor> gen_params = state.model.encoder->parameters();
  auto field_params = state.model.field->parameters();
  gen_params.insert(gen_params.end(), field_params.begin(), field_params.end());
  restore_adam(*state.gen_opt, gen_params, "adam_gen.", ckpt.tensors);
  restore_adam(*state.disc_color_opt, state.disc_color->parameters(), "adam_disc_color.",
               ckpt.tensors);
  restore_adam(*state.disc_alpha_opt, state.disc_alpha->parameters(), "adam_disc_alpha.",
               ckpt.tensors);

  state.rng.set_state(ckpt.tensors.at("rng.train"));
  at::Generator global = at::detail::getDefaultCPUGenerator();
  global.set_state(ckpt.tensors.at("rng.global"));
  state.step = ckpt.configs.at("step");
  state.epoch = ckpt.configs.at("epoch");
  state.anneal_duration = ckpt.configs.at("anneal_duration");
  return state;
}

}  // namespace objnerf
