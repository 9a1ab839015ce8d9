// SPDX-License-Identifier: Apache-2.0
#include "objnerf/rendering.hpp"

#include <cmath>

namespace objnerf {

torch::Tensor patch_pixels(const PatchSpec& patch, int image_width, int image_height) {
  if (patch.patch_height < 1 || patch.patch_width < 1) {
    throw ArgumentError("patch size must be positive");
  }
  if (patch.stride <= 0.0) throw ArgumentError("patch stride must be positive");
  auto u = torch::floor(patch.offset_x +
                        torch::arange(patch.patch_width, torch::kFloat64) * patch.stride)
               .to(torch::kInt64);
  auto v = torch::floor(patch.offset_y +
                        torch::arange(patch.patch_height, torch::kFloat64) * patch.stride)
               .to(torch::kInt64);
  if (u[0].item<int64_t>() < 0 || v[0].item<int64_t>() < 0 ||
      u[-1].item<int64_t>() >= image_width || v[-1].item<int64_t>() >= image_height) {
    throw ArgumentError("patch does not fit within the strided image extent");
  }
  auto grid = torch::meshgrid({v, u}, "ij");
  return torch::stack({grid[1].reshape(-1), grid[0].reshape(-1)}, -1);
}

PatchSpec full_extent_patch(int patch_size, int image_width, int image_height) {
  PatchSpec p;
  p.patch_height = p.patch_width = patch_size;
  p.stride = static_cast<double>(std::min(image_width, image_height)) / patch_size;
  p.offset_x = p.offset_y = 0.0;
  return p;
}

namespace {

// Midpoint-or-jittered samples from pre-drawn uniforms u [R, N] (empty for
// midpoints). Factored out so chunked rendering can draw all randomness up
// front.
torch::Tensor stratified_from_uniform(const SamplingConfig& cfg, int64_t ray_count,
                                      const torch::Tensor& u, torch::Dtype dtype) {
  const double width = (cfg.far - cfg.near) / cfg.num_coarse;
  auto base = torch::arange(cfg.num_coarse, dtype).unsqueeze(0);  // [1, N]
  auto frac = u.defined() ? u : torch::full({1, 1}, 0.5, dtype);
  return cfg.near + (base + frac) * width;
}

torch::Tensor resample_from_uniform(const torch::Tensor& coarse_t, const torch::Tensor& weights,
                                    const torch::Tensor& u) {
  const int64_t n = coarse_t.size(-1);
  if (n < 2) throw ArgumentError("hierarchical resampling needs at least 2 coarse samples");
  if ((weights.detach() < 0).any().item<bool>()) {
    throw ArgumentError("resampling weights must be non-negative");
  }
  torch::NoGradGuard no_grad;
  auto t = coarse_t.detach();
  auto w = weights.detach();

  // Bin edges: midpoints between consecutive samples, end bins extended
  // symmetrically so midpoint-sampled coarse t reproduce the original bins.
  auto mid = (t.narrow(-1, 0, n - 1) + t.narrow(-1, 1, n - 1)) / 2.0;  // [R, n-1]
  auto first = (2.0 * t.narrow(-1, 0, 1) - mid.narrow(-1, 0, 1));
  auto last = (2.0 * t.narrow(-1, n - 1, 1) - mid.narrow(-1, n - 2, 1));
  auto edges = torch::cat({first, mid, last}, -1);  // [R, n+1]

  auto row_sum = w.sum(-1, /*keepdim=*/true);
  w = torch::where(row_sum > 0, w, torch::ones_like(w));
  auto pdf = w / w.sum(-1, /*keepdim=*/true);
  auto cdf = torch::cat({torch::zeros_like(pdf.narrow(-1, 0, 1)), pdf.cumsum(-1)}, -1);

  auto idx = torch::searchsorted(cdf, u.contiguous(), /*out_int32=*/false, /*right=*/true) - 1;
  idx = idx.clamp(0, n - 1);
  auto cdf_lo = cdf.gather(-1, idx);
  auto bin_p = pdf.gather(-1, idx);
  auto denom = torch::where(bin_p > 1e-12, bin_p, torch::ones_like(bin_p));
  auto frac = ((u - cdf_lo) / denom).clamp(0.0, 1.0);
  auto lo = edges.gather(-1, idx);
  auto hi = edges.gather(-1, idx + 1);
  auto samples = lo + frac * (hi - lo);
  return std::get<0>(torch::sort(samples, -1));
}

// Sorted t values can contain exact ties when fine samples land on coarse
// ones; compositing requires strict increase.
torch::Tensor enforce_strictly_increasing(torch::Tensor t) {
  const int64_t n = t.size(-1);
  for (int64_t pass = 0; pass < n; ++pass) {
    auto d = t.narrow(-1, 1, n - 1) - t.narrow(-1, 0, n - 1);
    if ((d > 0).all().item<bool>()) break;
    auto prev = t.narrow(-1, 0, n - 1);
    auto bumped = torch::nextafter(prev, torch::full_like(prev, INFINITY));
    t = torch::cat({t.narrow(-1, 0, 1), torch::maximum(t.narrow(-1, 1, n - 1), bumped)}, -1);
  }
  return t;
}

}  // namespace

torch::Tensor stratified_sample(const SamplingConfig& cfg, int64_t ray_count,
                                torch::Generator& gen, torch::Dtype dtype) {
  cfg.validate();
  if (ray_count < 1) throw ArgumentError("ray_count must be >= 1");
  torch::Tensor u;
  if (cfg.jitter) {
    u = torch::rand({ray_count, cfg.num_coarse}, gen, dtype);
  }
  auto t = stratified_from_uniform(cfg, ray_count, u, dtype);
  if (!cfg.jitter) {
    t = t.expand({ray_count, cfg.num_coarse}).contiguous();
  }
  return t;
}

torch::Tensor hierarchical_resample(const torch::Tensor& coarse_t, const torch::Tensor& weights,
                                    int num_fine, torch::Generator& gen) {
  if (num_fine < 1) throw ArgumentError("num_fine must be >= 1");
  if (coarse_t.sizes() != weights.sizes()) {
    throw ArgumentError("coarse_t and weights must have matching shapes");
  }
  auto u = torch::rand({coarse_t.size(0), num_fine}, gen, coarse_t.scalar_type());
  return resample_from_uniform(coarse_t, weights, u);
}

RenderOutput composite_ray(const torch::Tensor& density, const torch::Tensor& rgb,
                           const torch::Tensor& t_values, double far) {
  if (density.sizes() != t_values.sizes()) {
    throw ArgumentError("density and t_values must have matching shapes");
  }
  if (rgb.dim() != density.dim() + 1 || rgb.size(-1) != 3) {
    throw ArgumentError("rgb must have shape [..., N, 3]");
  }
  const int64_t n = t_values.size(-1);
  if (n > 1) {
    auto d = t_values.narrow(-1, 1, n - 1) - t_values.narrow(-1, 0, n - 1);
    if (!(d > 0).all().item<bool>()) {
      throw ArgumentError("t values must be strictly increasing along each ray");
    }
  }
  if ((density.detach() < 0).any().item<bool>()) {
    throw ArgumentError("densities must be non-negative");
  }

  auto delta_interior =
      n > 1 ? t_values.narrow(-1, 1, n - 1) - t_values.narrow(-1, 0, n - 1) : torch::Tensor();
  auto delta_last = (far - t_values.narrow(-1, n - 1, 1)).clamp_min(0.0);
  auto delta = n > 1 ? torch::cat({delta_interior, delta_last}, -1) : delta_last;

  auto optical = density * delta;
  auto zero = torch::zeros_like(optical.narrow(-1, 0, 1));
  auto accum = torch::cat({zero, optical}, -1).cumsum(-1).narrow(-1, 0, n);
  auto transmittance = torch::exp(-accum);
  auto local_alpha = 1.0 - torch::exp(-optical);

  RenderOutput out;
  out.weights = transmittance * local_alpha;
  out.rgb = (out.weights.unsqueeze(-1) * rgb).sum(-2);
  out.alpha = out.weights.sum(-1);
  out.depth = (out.weights * t_values).sum(-1) / out.alpha.clamp_min(1e-8);
  return out;
}

RenderOutput render_rays(const FieldFn& field, const torch::Tensor& origins,
                         const torch::Tensor& directions, const SamplingConfig& cfg,
                         torch::Generator& gen, int64_t chunk_rays) {
  cfg.validate();
  if (origins.dim() != 2 || origins.size(1) != 3 || directions.sizes() != origins.sizes()) {
    throw ArgumentError("origins and directions must both be [N, 3]");
  }
  const int64_t num_rays = origins.size(0);
  const auto dtype = origins.scalar_type();

  // All randomness is drawn before chunking so the chunk size cannot change
  // the result.
  torch::Tensor jitter_u;
  if (cfg.jitter) {
    jitter_u = torch::rand({num_rays, cfg.num_coarse}, gen, dtype);
  }
  auto fine_u = torch::rand({num_rays, cfg.num_fine}, gen, dtype);

  if (chunk_rays <= 0) chunk_rays = num_rays;
  std::vector<torch::Tensor> rgb_parts, alpha_parts, depth_parts, weight_parts;
  for (int64_t start = 0; start < num_rays; start += chunk_rays) {
    const int64_t count = std::min(chunk_rays, num_rays - start);
    auto o = origins.narrow(0, start, count);
    auto d = directions.narrow(0, start, count);
    auto u = jitter_u.defined() ? jitter_u.narrow(0, start, count) : torch::Tensor();
    auto coarse_t = stratified_from_uniform(cfg, count, u, dtype);
    if (!cfg.jitter) coarse_t = coarse_t.expand({count, cfg.num_coarse}).contiguous();

    auto query = [&](const torch::Tensor& t) {
      auto pts = o.unsqueeze(1) + d.unsqueeze(1) * t.unsqueeze(-1);  // [C, S, 3]
      auto dirs = d.unsqueeze(1).expand_as(pts);
      auto res = field(pts.reshape({-1, 3}), dirs.reshape({-1, 3}).contiguous());
      return std::make_pair(res.density.reshape({count, t.size(-1)}),
                            res.rgb.reshape({count, t.size(-1), 3}));
    };

    // The coarse pass only steers the importance sampling; no loss reads
    // it, so skip building its graph.
    torch::Tensor coarse_weights;
    {
      torch::NoGradGuard no_grad;
      auto [coarse_sigma, coarse_rgb] = query(coarse_t);
      coarse_weights = composite_ray(coarse_sigma, coarse_rgb, coarse_t, cfg.far).weights;
    }
    auto fine_t = resample_from_uniform(coarse_t, coarse_weights, fine_u.narrow(0, start, count));
    auto t_union = std::get<0>(torch::sort(torch::cat({coarse_t.detach(), fine_t}, -1), -1));
    t_union = enforce_strictly_increasing(t_union);
    auto [sigma, rgb] = query(t_union);
    auto final = composite_ray(sigma, rgb, t_union, cfg.far);
    rgb_parts.push_back(final.rgb);
    alpha_parts.push_back(final.alpha);
    depth_parts.push_back(final.depth);
    weight_parts.push_back(final.weights);
  }
  RenderOutput out;
  out.rgb = torch::cat(rgb_parts, 0);
  out.alpha = torch::cat(alpha_parts, 0);
  out.depth = torch::cat(depth_parts, 0);
  out.weights = torch::cat(weight_parts, 0);
  return out;
}

RenderOutput render_patch(const FieldFn& field, const CameraPose& pose, const Intrinsics& intr,
                          const PatchSpec& patch, const SamplingConfig& cfg, torch::Generator& gen,
                          torch::Dtype dtype, int64_t chunk_rays) {
  auto pixels = patch_pixels(patch, intr.width, intr.height);
  auto rays = generate_rays(pose, intr, pixels, dtype);
  return render_rays(field, rays.origins, rays.directions, cfg, gen, chunk_rays);
}

}  // namespace objnerf
