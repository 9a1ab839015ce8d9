// SPDX-License-Identifier: Apache-2.0
#include "objnerf/checkpoint.hpp"

#include <cstring>
#include <fstream>

namespace objnerf {

namespace {

constexpr char kMagic[4] = {'O', 'N', 'R', 'F'};
constexpr uint32_t kVersion = 1;

std::string dtype_name(torch::Dtype d) {
  switch (d) {
    case torch::kFloat32: return "float32";
    case torch::kFloat64: return "float64";
    case torch::kInt64: return "int64";
    case torch::kInt32: return "int32";
    case torch::kUInt8: return "uint8";
    default: throw ArgumentError("unsupported tensor dtype in checkpoint");
  }
}

torch::Dtype dtype_from_name(const std::string& s) {
  if (s == "float32") return torch::kFloat32;
  if (s == "float64") return torch::kFloat64;
  if (s == "int64") return torch::kInt64;
  if (s == "int32") return torch::kInt32;
  if (s == "uint8") return torch::kUInt8;
  throw ParseError("unknown tensor dtype in checkpoint: " + s);
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  nlohmann::json header;
  header["tensors"] = nlohmann::json::array();
  uint64_t offset = 0;
  std::vector<torch::Tensor> blobs;
  for (const auto& [name, tensor] : ckpt.tensors) {
    auto t = tensor.detach().contiguous().cpu();
    const uint64_t nbytes = static_cast<uint64_t>(t.numel()) * t.element_size();
    header["tensors"].push_back({{"name", name},
                                 {"dtype", dtype_name(t.scalar_type())},
                                 {"shape", t.sizes().vec()},
                                 {"offset", offset},
                                 {"nbytes", nbytes}});
    offset += nbytes;
    blobs.push_back(t);
  }
  header["configs"] = ckpt.configs;
  const std::string header_str = header.dump();

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("failed to open checkpoint for writing: " + path.string());
  out.write(kMagic, 4);
  const uint32_t version = kVersion;
  out.write(reinterpret_cast<const char*>(&version), sizeof(version));
  const uint64_t header_len = header_str.size();
  out.write(reinterpret_cast<const char*>(&header_len), sizeof(header_len));
  out.write(header_str.data(), static_cast<std::streamsize>(header_str.size()));
  for (const auto& t : blobs) {
    out.write(static_cast<const char*>(t.const_data_ptr()),
              static_cast<std::streamsize>(t.numel() * t.element_size()));
  }
  if (!out) throw IoError("failed while writing checkpoint: " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("failed to open checkpoint: " + path.string());
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0) {
    throw ParseError("not a checkpoint container: " + path.string());
  }
  uint32_t version = 0;
  in.read(reinterpret_cast<char*>(&version), sizeof(version));
  if (version != kVersion) {
    throw ParseError("unsupported checkpoint version " + std::to_string(version));
  }
  uint64_t header_len = 0;
  in.read(reinterpret_cast<char*>(&header_len), sizeof(header_len));
  std::string header_str(header_len, '\0');
  in.read(header_str.data(), static_cast<std::streamsize>(header_len));
  if (!in) throw ParseError("truncated checkpoint header: " + path.string());
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(header_str);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("bad checkpoint header JSON: " + std::string(e.what()));
  }

  Checkpoint ckpt;
  ckpt.configs = header.value("configs", nlohmann::json::object());
  const std::streampos data_start = in.tellg();
  for (const auto& entry : header.at("tensors")) {
    const std::string name = entry.at("name");
    const auto dtype = dtype_from_name(entry.at("dtype"));
    const std::vector<int64_t> shape = entry.at("shape").get<std::vector<int64_t>>();
    const uint64_t offset = entry.at("offset");
    const uint64_t nbytes = entry.at("nbytes");
    auto t = torch::empty(shape, dtype);
    if (static_cast<uint64_t>(t.numel()) * t.element_size() != nbytes) {
      throw ParseError("tensor size mismatch for '" + name + "' in " + path.string());
    }
    in.seekg(data_start + static_cast<std::streamoff>(offset));
    in.read(static_cast<char*>(t.data_ptr()), static_cast<std::streamsize>(nbytes));
    if (!in) throw ParseError("truncated checkpoint data for '" + name + "'");
    ckpt.tensors.emplace(name, std::move(t));
  }
  return ckpt;
}

void collect_parameters(const torch::nn::Module& module, const std::string& prefix,
                        std::map<std::string, torch::Tensor>& out) {
  for (const auto& p : module.named_parameters()) {
    out[prefix + p.key()] = p.value().detach().clone();
  }
  for (const auto& b : module.named_buffers()) {
    out[prefix + b.key()] = b.value().detach().clone();
  }
}

void restore_parameters(torch::nn::Module& module, const std::string& prefix,
                        const std::map<std::string, torch::Tensor>& tensors) {
  torch::NoGradGuard no_grad;
  auto params = module.named_parameters();
  auto buffers = module.named_buffers();
  for (auto& p : params) {
    auto it = tensors.find(prefix + p.key());
    if (it == tensors.end()) {
      throw ParseError("checkpoint is missing parameter '" + prefix + p.key() + "'");
    }
    if (it->second.sizes() != p.value().sizes()) {
      throw ParseError("checkpoint shape mismatch for '" + prefix + p.key() + "'");
    }
    p.value().copy_(it->second);
  }
  for (auto& b : buffers) {
    auto it = tensors.find(prefix + b.key());
    if (it == tensors.end()) {
      throw ParseError("checkpoint is missing buffer '" + prefix + b.key() + "'");
    }
    b.value().copy_(it->second);
  }
}

void to_json(nlohmann::json& j, const EncodingConfig& c) {
  j = {{"num_frequencies", c.num_frequencies},
       {"include_raw_input", c.include_raw_input},
       {"anneal_duration", c.anneal_duration}};
}

void from_json(const nlohmann::json& j, EncodingConfig& c) {
  c.num_frequencies = j.at("num_frequencies");
  c.include_raw_input = j.at("include_raw_input");
  c.anneal_duration = j.at("anneal_duration");
}

void to_json(nlohmann::json& j, const FieldConfig& c) {
  j = {{"mlp_depth", c.mlp_depth},
       {"mlp_width", c.mlp_width},
       {"code_dim", c.code_dim},
       {"scene_box_half_extent", c.scene_box_half_extent},
       {"symmetry_enabled", c.symmetry_enabled},
       {"position_encoding", c.position_encoding},
       {"direction_encoding", c.direction_encoding},
       {"hidden_activation", c.hidden_activation}};
}

void from_json(const nlohmann::json& j, FieldConfig& c) {
  c.mlp_depth = j.at("mlp_depth");
  c.mlp_width = j.at("mlp_width");
  c.code_dim = j.at("code_dim");
  c.scene_box_half_extent = j.at("scene_box_half_extent");
  c.symmetry_enabled = j.at("symmetry_enabled");
  c.position_encoding = j.at("position_encoding");
  c.direction_encoding = j.at("direction_encoding");
  c.hidden_activation = j.at("hidden_activation");
}

void to_json(nlohmann::json& j, const EncoderConfig& c) {
  j = {{"input_size", c.input_size},
       {"code_dim", c.code_dim},
       {"backbone", c.backbone},
       {"mask_as_channel", c.mask_as_channel},
       {"t_z_min", c.t_z_min}};
}

void from_json(const nlohmann::json& j, EncoderConfig& c) {
  c.input_size = j.at("input_size");
  c.code_dim = j.at("code_dim");
  c.backbone = j.at("backbone");
  c.mask_as_channel = j.at("mask_as_channel");
  c.t_z_min = j.at("t_z_min");
}

void to_json(nlohmann::json& j, const DiscriminatorConfig& c) {
  j = {{"patch_size", c.patch_size},
       {"in_channels", c.in_channels},
       {"base_channels", c.base_channels},
       {"dropout", c.dropout}};
}

void from_json(const nlohmann::json& j, DiscriminatorConfig& c) {
  c.patch_size = j.at("patch_size");
  c.in_channels = j.at("in_channels");
  c.base_channels = j.at("base_channels");
  c.dropout = j.at("dropout");
}

void to_json(nlohmann::json& j, const SamplingConfig& c) {
  j = {{"near", c.near},
       {"far", c.far},
       {"num_coarse", c.num_coarse},
       {"num_fine", c.num_fine},
       {"jitter", c.jitter}};
}

void from_json(const nlohmann::json& j, SamplingConfig& c) {
  c.near = j.at("near");
  c.far = j.at("far");
  c.num_coarse = j.at("num_coarse");
  c.num_fine = j.at("num_fine");
  c.jitter = j.at("jitter");
}

void to_json(nlohmann::json& j, const PosePrior& c) {
  j = {{"azimuth_min", c.azimuth_min},
       {"azimuth_max", c.azimuth_max},
       {"elevation_min", c.elevation_min},
       {"elevation_max", c.elevation_max},
       {"translation_mean", {c.translation_mean.x(), c.translation_mean.y(),
                             c.translation_mean.z()}},
       {"translation_spread", {c.translation_spread.x(), c.translation_spread.y(),
                               c.translation_spread.z()}}};
}

void from_json(const nlohmann::json& j, PosePrior& c) {
  c.azimuth_min = j.at("azimuth_min");
  c.azimuth_max = j.at("azimuth_max");
  c.elevation_min = j.at("elevation_min");
  c.elevation_max = j.at("elevation_max");
  auto tm = j.at("translation_mean");
  c.translation_mean = Eigen::Vector3d(tm[0], tm[1], tm[2]);
  auto ts = j.at("translation_spread");
  c.translation_spread = Eigen::Vector3d(ts[0], ts[1], ts[2]);
}

void to_json(nlohmann::json& j, const Intrinsics& c) {
  j = {{"focal_x", c.focal_x},     {"focal_y", c.focal_y}, {"principal_x", c.principal_x},
       {"principal_y", c.principal_y}, {"width", c.width},     {"height", c.height}};
}

void from_json(const nlohmann::json& j, Intrinsics& c) {
  c.focal_x = j.at("focal_x");
  c.focal_y = j.at("focal_y");
  c.principal_x = j.at("principal_x");
  c.principal_y = j.at("principal_y");
  c.width = j.at("width");
  c.height = j.at("height");
}

void to_json(nlohmann::json& j, const LossWeights& c) {
  j = {{"recon_color", c.recon_color},
       {"recon_alpha", c.recon_alpha},
       {"adv_color", c.adv_color},
       {"adv_alpha", c.adv_alpha},
       {"pose_consistency", c.pose_consistency},
       {"pose_supervised", c.pose_supervised}};
}

void from_json(const nlohmann::json& j, LossWeights& c) {
  c.recon_color = j.at("recon_color");
  c.recon_alpha = j.at("recon_alpha");
  c.adv_color = j.at("adv_color");
  c.adv_alpha = j.at("adv_alpha");
  c.pose_consistency = j.at("pose_consistency");
  c.pose_supervised = j.at("pose_supervised");
}

}  // namespace objnerf
