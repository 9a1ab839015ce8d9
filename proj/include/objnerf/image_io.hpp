// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <torch/torch.h>

#include "objnerf/common.hpp"

namespace objnerf {

// Images are exchanged as float tensors in [0, 1]: color [H, W, 3],
// grayscale [H, W]. PNG output quantizes to 8 bits.

void write_png_rgb(const std::filesystem::path& path, const torch::Tensor& image);
torch::Tensor read_png_rgb(const std::filesystem::path& path);

void write_png_gray(const std::filesystem::path& path, const torch::Tensor& image);
torch::Tensor read_png_gray(const std::filesystem::path& path);

// Portable float map ("Pf" header, scale -1.0 = little endian, rows stored
// bottom-to-top). Used for depth output.
void write_pfm(const std::filesystem::path& path, const torch::Tensor& image);
torch::Tensor read_pfm(const std::filesystem::path& path);

}  // namespace objnerf
