// SPDX-License-Identifier: Apache-2.0
#include "objnerf/data.hpp"

#include <atomic>
#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "objnerf/image_io.hpp"

namespace objnerf {

namespace {

std::atomic<int64_t> g_pose_audit{0};

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

int64_t pose_audit_count() { return g_pose_audit.load(); }
void reset_pose_audit() { g_pose_audit.store(0); }

const CameraPose& DatasetRecord::gt_pose() const {
  g_pose_audit.fetch_add(1);
  if (!pose_.has_value()) {
    throw ArgumentError("record '" + id + "' has no ground-truth pose");
  }
  return *pose_;
}

void DatasetRecord::validate() const {
  if (!image.defined() || image.dim() != 3 || image.size(2) != 3) {
    throw ArgumentError("record image must be [H, W, 3]");
  }
  if (!mask.defined() || mask.dim() != 2 || mask.size(0) != image.size(0) ||
      mask.size(1) != image.size(1)) {
    throw ArgumentError("record mask resolution must match the image");
  }
  intrinsics.validate();
}

CropResult crop_to_mask(const torch::Tensor& image, const torch::Tensor& mask,
                        const Intrinsics& intr, int out_size) {
  if (image.dim() != 3 || image.size(2) != 3) throw ArgumentError("image must be [H, W, 3]");
  if (mask.dim() != 2 || mask.size(0) != image.size(0) || mask.size(1) != image.size(1)) {
    throw ArgumentError("mask must be [H, W] matching the image");
  }
  const int64_t h = image.size(0);
  const int64_t w = image.size(1);
  auto fg = mask >= 0.5;
  auto rows = fg.any(1).nonzero();
  auto cols = fg.any(0).nonzero();
  if (rows.numel() == 0) {
    throw RecordSkipError("empty mask, skipping record");
  }
  const int64_t r0 = rows[0].item<int64_t>();
  const int64_t r1 = rows[-1].item<int64_t>();
  const int64_t c0 = cols[0].item<int64_t>();
  const int64_t c1 = cols[-1].item<int64_t>();
  const int64_t box_h = r1 - r0 + 1;
  const int64_t box_w = c1 - c0 + 1;
  const int64_t side = std::max(box_h, box_w);
  const int64_t y0 = r0 - (side - box_h) / 2;
  const int64_t x0 = c0 - (side - box_w) / 2;

  auto masked = image * fg.unsqueeze(-1).to(image.scalar_type());
  auto square_img = torch::zeros({side, side, 3}, image.scalar_type());
  auto square_mask = torch::zeros({side, side}, mask.scalar_type());
  // Overlap of the (possibly out-of-bounds) square with the image.
  const int64_t sy = std::max<int64_t>(y0, 0);
  const int64_t sx = std::max<int64_t>(x0, 0);
  const int64_t ey = std::min<int64_t>(y0 + side, h);
  const int64_t ex = std::min<int64_t>(x0 + side, w);
  square_img.narrow(0, sy - y0, ey - sy).narrow(1, sx - x0, ex - sx) =
      masked.narrow(0, sy, ey - sy).narrow(1, sx, ex - sx);
  square_mask.narrow(0, sy - y0, ey - sy).narrow(1, sx - x0, ex - sx) =
      mask.narrow(0, sy, ey - sy).narrow(1, sx, ex - sx);

  namespace F = torch::nn::functional;
  auto opts = F::InterpolateFuncOptions()
                  .size(std::vector<int64_t>{out_size, out_size})
                  .mode(torch::kBilinear)
                  .align_corners(false);
  auto img_out = F::interpolate(
                     square_img.permute({2, 0, 1}).unsqueeze(0).to(torch::kFloat32), opts)
                     .squeeze(0)
                     .permute({1, 2, 0})
                     .contiguous();
  auto mask_out =
      F::interpolate(square_mask.unsqueeze(0).unsqueeze(0).to(torch::kFloat32), opts)
          .squeeze(0)
          .squeeze(0)
          .contiguous();

  CropResult out;
  out.image = img_out;
  out.mask = mask_out;
  out.intrinsics = intr.cropped_resized(static_cast<double>(x0), static_cast<double>(y0),
                                        static_cast<double>(side), out_size);
  return out;
}

void SyntheticSceneSpec::validate(double box_half_extent) const {
  if (primitives.empty() || primitives.size() > 2) {
    throw ArgumentError("scene spec must contain 1 or 2 primitives");
  }
  if (!(density > 0.0)) throw ArgumentError("scene density must be positive");
  for (const auto& p : primitives) {
    for (int axis = 0; axis < 3; ++axis) {
      const double reach = std::abs(p.center[axis]) +
                           (p.kind == PrimitiveKind::Sphere ? p.size.x() : p.size[axis]);
      if (reach > box_half_extent + 1e-12) {
        throw ArgumentError("scene spec '" + id + "' extends outside the scene box");
      }
    }
  }
}

FieldFn analytic_field(const SyntheticSceneSpec& spec) {
  auto prims = spec.primitives;
  const double density = spec.density;
  return [prims, density](const torch::Tensor& points, const torch::Tensor& /*dirs*/) {
    auto pts = points;
    auto assigned = torch::zeros({pts.size(0)}, torch::TensorOptions(torch::kBool));
    auto rgb = torch::zeros({pts.size(0), 3}, pts.scalar_type());
    for (const auto& p : prims) {
      auto center = torch::tensor({p.center.x(), p.center.y(), p.center.z()}, torch::kFloat64)
                        .to(pts.scalar_type());
      torch::Tensor inside;
      if (p.kind == PrimitiveKind::Sphere) {
        inside = (pts - center).norm(2, -1) <= p.size.x();
      } else {
        auto half = torch::tensor({p.size.x(), p.size.y(), p.size.z()}, torch::kFloat64)
                        .to(pts.scalar_type());
        inside = ((pts - center).abs() <= half).all(-1);
      }
      auto take = inside & ~assigned;
      auto albedo = torch::tensor({p.albedo.x(), p.albedo.y(), p.albedo.z()}, torch::kFloat64)
                        .to(pts.scalar_type());
      rgb = torch::where(take.unsqueeze(-1), albedo.unsqueeze(0).expand_as(rgb), rgb);
      assigned = assigned | inside;
    }
    FieldOutput out;
    out.density = assigned.to(pts.scalar_type()) * density;
    out.rgb = rgb;
    return out;
  };
}

std::vector<SyntheticSceneSpec> random_scene_specs(int count, torch::Generator& gen,
                                                   double box_half_extent) {
  std::vector<SyntheticSceneSpec> specs;
  specs.reserve(count);
  auto uniform = [&gen](double lo, double hi) {
    return lo + torch::rand({1}, gen, torch::kFloat64).item<double>() * (hi - lo);
  };
  for (int i = 0; i < count; ++i) {
    SyntheticSceneSpec spec;
    char buf[32];
    std::snprintf(buf, sizeof(buf), "inst_%04d", i);
    spec.id = buf;
    const double kind_draw = uniform(0.0, 3.0);
    spec.category = kind_draw < 1.0 ? "sphere" : (kind_draw < 2.0 ? "box" : "union2");
    spec.symmetric = uniform(0.0, 1.0) < 0.5;

    auto make_primitive = [&](bool force_plane) {
      Primitive p;
      p.kind = uniform(0.0, 1.0) < 0.5 ? PrimitiveKind::Sphere : PrimitiveKind::Box;
      if (p.kind == PrimitiveKind::Sphere) {
        const double r = uniform(0.10, 0.22);
        p.size = Eigen::Vector3d::Constant(r);
        for (int a = 0; a < 3; ++a) {
          const double room = box_half_extent - r;
          p.center[a] = uniform(-room, room);
        }
      } else {
        for (int a = 0; a < 3; ++a) p.size[a] = uniform(0.08, 0.20);
        for (int a = 0; a < 3; ++a) {
          const double room = box_half_extent - p.size[a];
          p.center[a] = uniform(-room, room);
        }
      }
      if (force_plane) p.center.y() = 0.0;
      for (int a = 0; a < 3; ++a) p.albedo[a] = uniform(0.2, 1.0);
      return p;
    };

    if (spec.category == "union2") {
      auto a = make_primitive(false);
      spec.primitives.push_back(a);
      if (spec.symmetric) {
        // Mirror across y = 0 so the union is symmetric by construction.
        Primitive b = a;
        b.center.y() = -a.center.y();
        spec.primitives.push_back(b);
      } else {
        spec.primitives.push_back(make_primitive(false));
      }
    } else {
      spec.primitives.push_back(make_primitive(spec.symmetric));
    }
    spec.validate(box_half_extent);
    specs.push_back(std::move(spec));
  }
  return specs;
}

RenderOutput render_scene_view(const SyntheticSceneSpec& spec, const CameraPose& pose,
                               const Intrinsics& intr) {
  SamplingConfig cfg;
  cfg.num_coarse = 256;
  cfg.num_fine = 256;
  cfg.jitter = false;
  // Fixed resampling seed keeps this a pure function of (spec, pose, intr).
  auto gen = at::detail::createCPUGenerator(0x5eed);
  PatchSpec patch;
  patch.patch_height = intr.height;
  patch.patch_width = intr.width;
  torch::NoGradGuard no_grad;
  return render_patch(analytic_field(spec), pose, intr, patch, cfg, gen, torch::kFloat32, 2048);
}

uint64_t derive_seed(uint64_t base_seed, uint64_t index) {
  auto splitmix = [](uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
  };
  return splitmix(base_seed ^ splitmix(index + 1));
}

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == '\t') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

double parse_double(const std::string& s, size_t line_no) {
  try {
    size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ParseError("manifest line " + std::to_string(line_no) + ": bad number '" + s + "'");
  }
}

std::string manifest_line(const ManifestRecord& r) {
  std::ostringstream os;
  os << r.id << "\t" << r.image_path << "\t" << r.mask_path << "\t" << r.category << "\t"
     << (r.symmetric ? 1 : 0);
  if (r.pose.has_value()) {
    for (double v : *r.pose) os << "\t" << fmt_double(v);
  }
  os << "\t" << fmt_double(r.intrinsics.focal_x) << "\t" << fmt_double(r.intrinsics.focal_y)
     << "\t" << fmt_double(r.intrinsics.principal_x) << "\t"
     << fmt_double(r.intrinsics.principal_y) << "\t" << r.intrinsics.width << "\t"
     << r.intrinsics.height;
  return os.str();
}

}  // namespace

ManifestDataset ManifestDataset::load(const std::filesystem::path& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) throw IoError("failed to open manifest: " + manifest_path.string());
  ManifestDataset ds;
  ds.root_ = manifest_path.parent_path();
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto f = split_tabs(line);
    // 11 fields without pose, 18 with the 7 pose numbers.
    if (f.size() != 11 && f.size() != 18) {
      throw ParseError("manifest line " + std::to_string(line_no) + ": expected 11 or 18 fields, got " +
                       std::to_string(f.size()));
    }
    ManifestRecord r;
    r.id = f[0];
    r.image_path = f[1];
    r.mask_path = f[2];
    r.category = f[3];
    if (f[4] != "0" && f[4] != "1") {
      throw ParseError("manifest line " + std::to_string(line_no) + ": symmetric flag must be 0 or 1");
    }
    r.symmetric = f[4] == "1";
    size_t next = 5;
    if (f.size() == 18) {
      std::array<double, 7> pose{};
      for (int i = 0; i < 7; ++i) pose[i] = parse_double(f[next++], line_no);
      try {
        CameraPose::from_array(pose);
      } catch (const InvalidPoseError& e) {
        throw ParseError("manifest line " + std::to_string(line_no) + ": " + e.what());
      }
      r.pose = pose;
    }
    r.intrinsics.focal_x = parse_double(f[next++], line_no);
    r.intrinsics.focal_y = parse_double(f[next++], line_no);
    r.intrinsics.principal_x = parse_double(f[next++], line_no);
    r.intrinsics.principal_y = parse_double(f[next++], line_no);
    r.intrinsics.width = static_cast<int>(parse_double(f[next++], line_no));
    r.intrinsics.height = static_cast<int>(parse_double(f[next++], line_no));
    try {
      r.intrinsics.validate();
    } catch (const ArgumentError& e) {
      throw ParseError("manifest line " + std::to_string(line_no) + ": " + e.what());
    }
    ds.records_.push_back(std::move(r));
  }
  return ds;
}

ManifestDataset ManifestDataset::from_records(std::vector<ManifestRecord> records,
                                              std::filesystem::path root) {
  ManifestDataset ds;
  ds.records_ = std::move(records);
  ds.root_ = std::move(root);
  return ds;
}

DatasetRecord ManifestDataset::load_record(size_t i) const {
  const auto& meta = records_.at(i);
  const auto image_path = root_ / meta.image_path;
  const auto mask_path = root_ / meta.mask_path;
  if (!std::filesystem::exists(image_path)) {
    throw IoError("missing image file: " + image_path.string());
  }
  if (!std::filesystem::exists(mask_path)) {
    throw IoError("missing mask file: " + mask_path.string());
  }
  DatasetRecord rec;
  rec.id = meta.id;
  rec.image = read_png_rgb(image_path);
  rec.mask = read_png_gray(mask_path);
  rec.intrinsics = meta.intrinsics;
  rec.category = meta.category;
  rec.symmetric = meta.symmetric;
  if (meta.pose.has_value()) {
    rec.set_gt_pose(CameraPose::from_array(*meta.pose));
  }
  rec.validate();
  return rec;
}

void ManifestDataset::write(const std::filesystem::path& manifest_path) const {
  std::ofstream out(manifest_path);
  if (!out) throw IoError("failed to open manifest for writing: " + manifest_path.string());
  for (const auto& r : records_) {
    out << manifest_line(r) << "\n";
  }
  if (!out) throw IoError("failed while writing manifest: " + manifest_path.string());
}

std::filesystem::path generate_synthetic_dataset(const std::vector<SyntheticSceneSpec>& specs,
                                                 const GeneratorOptions& options,
                                                 const std::filesystem::path& out_dir) {
  if (specs.empty()) throw ArgumentError("no scene specs given");
  if (options.views_per_instance < 1) throw ArgumentError("views_per_instance must be >= 1");
  options.prior.validate();
  for (const auto& s : specs) s.validate();

  std::filesystem::create_directories(out_dir / "images");
  std::filesystem::create_directories(out_dir / "masks");
  const Intrinsics intr = default_intrinsics(options.image_size);

  std::vector<ManifestRecord> records;
  for (size_t i = 0; i < specs.size(); ++i) {
    for (int v = 0; v < options.views_per_instance; ++v) {
      const uint64_t index = i * options.views_per_instance + v;
      auto gen = at::detail::createCPUGenerator(derive_seed(options.seed, index));
      const CameraPose pose = sample_pose_prior(options.prior, gen);
      auto render = render_scene_view(specs[i], pose, intr);

      ManifestRecord r;
      r.id = specs[i].id + "_v" + std::to_string(v);
      r.image_path = "images/" + r.id + ".png";
      r.mask_path = "masks/" + r.id + ".png";
      r.category = specs[i].category;
      r.symmetric = specs[i].symmetric;
      r.pose = pose.to_array();
      r.intrinsics = intr;
      write_png_rgb(out_dir / r.image_path,
                    render.rgb.reshape({options.image_size, options.image_size, 3}));
      write_png_gray(out_dir / r.mask_path,
                     render.alpha.reshape({options.image_size, options.image_size}));
      records.push_back(std::move(r));
    }
  }
  auto ds = ManifestDataset::from_records(std::move(records), out_dir);
  const auto manifest_path = out_dir / "manifest.tsv";
  ds.write(manifest_path);
  write_scene_specs(out_dir / "scenes.json", specs);
  return manifest_path;
}

void write_scene_specs(const std::filesystem::path& path,
                       const std::vector<SyntheticSceneSpec>& specs) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& s : specs) {
    nlohmann::json prims = nlohmann::json::array();
    for (const auto& p : s.primitives) {
      prims.push_back({{"kind", p.kind == PrimitiveKind::Sphere ? "sphere" : "box"},
                       {"center", {p.center.x(), p.center.y(), p.center.z()}},
                       {"size", {p.size.x(), p.size.y(), p.size.z()}},
                       {"albedo", {p.albedo.x(), p.albedo.y(), p.albedo.z()}}});
    }
    j.push_back({{"id", s.id},
                 {"category", s.category},
                 {"symmetric", s.symmetric},
                 {"density", s.density},
                 {"primitives", prims}});
  }
  std::ofstream out(path);
  if (!out) throw IoError("failed to write scene specs: " + path.string());
  out << j.dump(2) << "\n";
}

std::vector<SyntheticSceneSpec> read_scene_specs(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("failed to open scene specs: " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("bad scenes.json: " + std::string(e.what()));
  }
  std::vector<SyntheticSceneSpec> specs;
  for (const auto& e : j) {
    SyntheticSceneSpec s;
    s.id = e.at("id");
    s.category = e.at("category");
    s.symmetric = e.at("symmetric");
    s.density = e.at("density");
    for (const auto& pj : e.at("primitives")) {
      Primitive p;
      p.kind = pj.at("kind") == "sphere" ? PrimitiveKind::Sphere : PrimitiveKind::Box;
      auto c = pj.at("center");
      p.center = Eigen::Vector3d(c[0], c[1], c[2]);
      auto sz = pj.at("size");
      p.size = Eigen::Vector3d(sz[0], sz[1], sz[2]);
      auto a = pj.at("albedo");
      p.albedo = Eigen::Vector3d(a[0], a[1], a[2]);
      s.primitives.push_back(p);
    }
    specs.push_back(std::move(s));
  }
  return specs;
}

}  // namespace objnerf
