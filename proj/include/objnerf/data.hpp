// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <optional>
#include <string>
#include <torch/torch.h>
#include <vector>

#include "objnerf/common.hpp"
#include "objnerf/field.hpp"
#include "objnerf/geometry.hpp"
#include "objnerf/rendering.hpp"

namespace objnerf {

// Counts every read of a record's ground-truth pose. Unsupervised training
// must leave this untouched; tests assert it stays at 0.
int64_t pose_audit_count();
void reset_pose_audit();

struct DatasetRecord {
  std::string id;
  torch::Tensor image;  // [H, W, 3] in [0, 1]
  torch::Tensor mask;   // [H, W] in [0, 1]
  Intrinsics intrinsics;
  std::string category;
  bool symmetric = false;

  bool has_pose() const { return pose_.has_value(); }
  // Audited accessor; throws ArgumentError when the record is unposed.
  const CameraPose& gt_pose() const;
  void set_gt_pose(const CameraPose& pose) { pose_ = pose; }

  void validate() const;

 private:
  std::optional<CameraPose> pose_;
};

struct CropResult {
  torch::Tensor image;  // [out, out, 3]
  torch::Tensor mask;   // [out, out]
  Intrinsics intrinsics;
};

// Square crop around the tight bounding box of {mask >= 0.5}, zero-padded
// to square, background zeroed, resized to out_size, with the intrinsics
// updated exactly for the crop translation and scale. Throws
// RecordSkipError when the mask is empty.
CropResult crop_to_mask(const torch::Tensor& image, const torch::Tensor& mask,
                        const Intrinsics& intr, int out_size = 112);

enum class PrimitiveKind { Sphere, Box };

struct Primitive {
  PrimitiveKind kind = PrimitiveKind::Sphere;
  Eigen::Vector3d center = Eigen::Vector3d::Zero();
  // Sphere: radius in size.x(); box: per-axis half extents.
  Eigen::Vector3d size = Eigen::Vector3d::Constant(0.2);
  Eigen::Vector3d albedo = Eigen::Vector3d::Constant(0.8);
};

struct SyntheticSceneSpec {
  std::string id;
  std::string category = "sphere";  // sphere | box | union2
  bool symmetric = false;
  double density = 400.0;
  std::vector<Primitive> primitives;

  // Ensures all geometry fits inside the scene box.
  void validate(double box_half_extent = 0.4) const;
};

// Analytic density/albedo field of the primitives: constant density inside,
// exactly zero outside; view-independent albedo (first containing primitive
// wins).
FieldFn analytic_field(const SyntheticSceneSpec& spec);

// Random instance specs for the generator CLI; symmetric instances are
// constructed mirror-symmetric across the y = 0 plane.
std::vector<SyntheticSceneSpec> random_scene_specs(int count, torch::Generator& gen,
                                                   double box_half_extent = 0.4);

// Deterministic high-sample-count render of a spec from a pose (no jitter,
// internally fixed resampling seed): re-rendering reproduces the stored
// view exactly.
RenderOutput render_scene_view(const SyntheticSceneSpec& spec, const CameraPose& pose,
                               const Intrinsics& intr);

// Stored manifest row; image paths are relative to the manifest directory.
struct ManifestRecord {
  std::string id;
  std::string image_path;
  std::string mask_path;
  std::string category;
  bool symmetric = false;
  std::optional<std::array<double, 7>> pose;
  Intrinsics intrinsics;
};

// Tab-separated manifest plus lazy per-record image loading.
class ManifestDataset {
 public:
  static ManifestDataset load(const std::filesystem::path& manifest_path);

  size_t size() const { return records_.size(); }
  const ManifestRecord& meta(size_t i) const { return records_.at(i); }
  const std::vector<ManifestRecord>& metas() const { return records_; }
  std::filesystem::path root() const { return root_; }

  // Reads the record's images; throws IoError naming the missing path.
  DatasetRecord load_record(size_t i) const;

  void write(const std::filesystem::path& manifest_path) const;

  static ManifestDataset from_records(std::vector<ManifestRecord> records,
                                      std::filesystem::path root);

 private:
  std::vector<ManifestRecord> records_;
  std::filesystem::path root_;
};

struct GeneratorOptions {
  int image_size = 64;
  int views_per_instance = 1;
  uint64_t seed = 0;
  PosePrior prior;
};

// Renders every (instance, view) pair and writes out_dir/{images,masks}/,
// out_dir/manifest.tsv and out_dir/scenes.json. Poses are stored exactly.
// Returns the manifest path.
std::filesystem::path generate_synthetic_dataset(const std::vector<SyntheticSceneSpec>& specs,
                                                 const GeneratorOptions& options,
                                                 const std::filesystem::path& out_dir);

// scenes.json round trip, used by the analytic-oracle evaluation mode.
void write_scene_specs(const std::filesystem::path& path,
                       const std::vector<SyntheticSceneSpec>& specs);
std::vector<SyntheticSceneSpec> read_scene_specs(const std::filesystem::path& path);

// Stable per-record seed derivation.
uint64_t derive_seed(uint64_t base_seed, uint64_t index);

}  // namespace objnerf
