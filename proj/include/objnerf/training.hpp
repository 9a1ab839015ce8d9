// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <memory>
#include <torch/torch.h>
#include <vector>

#include "objnerf/checkpoint.hpp"
#include "objnerf/common.hpp"
#include "objnerf/data.hpp"
#include "objnerf/networks.hpp"
#include "objnerf/objectives.hpp"
#include "objnerf/rendering.hpp"

namespace objnerf {

enum class Regime { Unsupervised, Weak, Full };

std::string regime_name(Regime r);
Regime regime_from_name(const std::string& s);

struct TrainConfig {
  int epochs = 200;
  int batch_size = 8;
  double initial_lr = 1e-3;
  double lr_decay = 0.96;  // per epoch, stepwise
  Regime regime = Regime::Unsupervised;
  double labeled_fraction = 0.0;
  uint64_t seed = 0;
  // Weak regime: pose-supervised pretraining epochs on the labeled subset
  // before fine-tuning on everything (0 = epochs / 4, at least 1). The
  // learning-rate schedule restarts at the fine-tuning phase.
  int phase1_epochs = 0;

  FieldConfig field;
  EncoderConfig encoder;
  int discriminator_base_channels = 32;

  SamplingConfig sampling{0.1, 4.0, 64, 128, true};
  PosePrior prior;
  LossWeights weights;
  bool saturating_generator_loss = false;

  // Input-view reconstruction renders a random stride-1 crop of this size;
  // novel views render a full-extent strided grid of the same size, which
  // also feeds the discriminators and the pose re-estimation.
  int patch_size = 80;

  // Fraction of all training steps over which the positional encoding
  // bands anneal in.
  double anneal_fraction = 0.25;

  int checkpoint_every_epochs = 10;
  int64_t chunk_rays = 4096;
  // Apply crop_to_mask to every record at load time (for manifests of
  // uncropped images). Off: records must already match the encoder input.
  bool crop_inputs = false;

  void validate() const;
};

// Exponential stepwise decay: initial_lr * decay^epoch.
double lr_at(int64_t epoch, const TrainConfig& cfg);

struct TrainState {
  int64_t step = 0;
  int64_t epoch = 0;
  int64_t anneal_duration = 1;
  Model model;
  PatchDiscriminator disc_color{nullptr};
  PatchDiscriminator disc_alpha{nullptr};
  std::unique_ptr<torch::optim::Adam> gen_opt;
  std::unique_ptr<torch::optim::Adam> disc_color_opt;
  std::unique_ptr<torch::optim::Adam> disc_alpha_opt;
  torch::Generator rng;

  double encoding_progress() const {
    return std::clamp(static_cast<double>(step) / static_cast<double>(anneal_duration), 0.0, 1.0);
  }
};

// Fresh state with seeded parameter initialization (also reseeds the torch
// global generator used by dropout).
TrainState init_train_state(const TrainConfig& cfg, int64_t total_steps_hint);

struct StepResult {
  LossReport report;               // weighted generator objective terms
  double disc_color_loss = 0.0;    // discriminator side, logged separately
  double disc_alpha_loss = 0.0;
  double novel_alpha_mean = 0.0;   // mean alpha mass of the novel renders
};

// One generator update followed by one discriminator update on a batch.
// `labeled[i]` marks records whose ground-truth pose feeds the
// pose-supervised term (must be empty or match the batch size).
StepResult train_step(const std::vector<DatasetRecord>& batch, const std::vector<bool>& labeled,
                      TrainState& state, const TrainConfig& cfg);

struct TrainResult {
  std::filesystem::path checkpoint_path;   // final model container
  std::filesystem::path state_path;        // resumable optimizer state
  std::filesystem::path log_path;          // train_log.jsonl
  std::filesystem::path loss_table_path;   // losses.tsv, deterministic
  int64_t steps = 0;
};

// Full training driver over a manifest: regime handling (unsupervised /
// weak pretrain+finetune / full), per-epoch lr decay, shuffling,
// checkpoints every K epochs and the training logs.
TrainResult run_training(const ManifestDataset& dataset, const TrainConfig& cfg,
                         const std::filesystem::path& out_dir);

// Model container (encoder + field + discriminators + configs).
void save_model_checkpoint(const std::filesystem::path& path, const TrainState& state,
                           const TrainConfig& cfg);
Model load_model(const std::filesystem::path& path);

// Resumable state: model + Adam moments + RNG states + counters.
void save_train_state(const std::filesystem::path& path, const TrainState& state,
                      const TrainConfig& cfg);
TrainState load_train_state(const std::filesystem::path& path, const TrainConfig& cfg);

}  // namespace objnerf
