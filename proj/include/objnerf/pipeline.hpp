// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>

#include "objnerf/config.hpp"
#include "objnerf/data.hpp"
#include "objnerf/evaluation.hpp"
#include "objnerf/training.hpp"

namespace objnerf {

// Config binding helpers shared by the CLI and the python bindings.
PosePrior prior_from_config(ConfigMap& cfg);
SamplingConfig sampling_from_config(ConfigMap& cfg, bool default_jitter);
FieldConfig field_from_config(ConfigMap& cfg);
EncoderConfig encoder_from_config(ConfigMap& cfg);
TrainConfig train_config_from_config(ConfigMap& cfg);
GeneratorOptions generator_options_from_config(ConfigMap& cfg);

// Command entry points. Each validates its whole parameter tree (rejecting
// unknown keys), then either prints the resolved tree (dry run) or runs and
// writes an effective_config.cfg next to its outputs. ConfigError means
// exit status 2 in the CLI; other errors exit 1.
void command_gen_data(ConfigMap& cfg, bool dry_run);
void command_train(ConfigMap& cfg, bool dry_run);
void command_render(ConfigMap& cfg, bool dry_run);
void command_eval(ConfigMap& cfg, bool dry_run);

}  // namespace objnerf
