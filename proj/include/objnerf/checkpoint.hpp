// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <torch/torch.h>

#include <json.hpp>

#include "objnerf/common.hpp"
#include "objnerf/encoding.hpp"
#include "objnerf/field.hpp"
#include "objnerf/geometry.hpp"
#include "objnerf/networks.hpp"
#include "objnerf/objectives.hpp"
#include "objnerf/rendering.hpp"

namespace objnerf {

// Checkpoint container layout (all integers little endian):
//   bytes 0..3   magic "ONRF"
//   bytes 4..7   uint32 format version (currently 1)
//   bytes 8..15  uint64 length H of the JSON header
//   bytes 16..   H bytes of UTF-8 JSON:
//                  { "tensors": [ {"name", "dtype", "shape", "offset",
//                                  "nbytes"} ... ],
//                    "configs": { ... } }
//   then the raw tensor data blob; offsets are relative to its start.
// Tensor bytes are written exactly as stored, so save -> load -> save is
// byte-identical.
struct Checkpoint {
  std::map<std::string, torch::Tensor> tensors;
  nlohmann::json configs = nlohmann::json::object();
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// Copies module parameters into/out of a tensor table under a name prefix
// ("field.", "encoder.", ...).
void collect_parameters(const torch::nn::Module& module, const std::string& prefix,
                        std::map<std::string, torch::Tensor>& out);
void restore_parameters(torch::nn::Module& module, const std::string& prefix,
                        const std::map<std::string, torch::Tensor>& tensors);

// JSON conversions for the config structs stored in checkpoint headers.
void to_json(nlohmann::json& j, const EncodingConfig& c);
void from_json(const nlohmann::json& j, EncodingConfig& c);
void to_json(nlohmann::json& j, const FieldConfig& c);
void from_json(const nlohmann::json& j, FieldConfig& c);
void to_json(nlohmann::json& j, const EncoderConfig& c);
void from_json(const nlohmann::json& j, EncoderConfig& c);
void to_json(nlohmann::json& j, const DiscriminatorConfig& c);
void from_json(const nlohmann::json& j, DiscriminatorConfig& c);
void to_json(nlohmann::json& j, const SamplingConfig& c);
void from_json(const nlohmann::json& j, SamplingConfig& c);
void to_json(nlohmann::json& j, const PosePrior& c);
void from_json(const nlohmann::json& j, PosePrior& c);
void to_json(nlohmann::json& j, const Intrinsics& c);
void from_json(const nlohmann::json& j, Intrinsics& c);
void to_json(nlohmann::json& j, const LossWeights& c);
void from_json(const nlohmann::json& j, LossWeights& c);

}  // namespace objnerf
