// SPDX-License-Identifier: Apache-2.0
#include "objnerf/image_io.hpp"

#include <fstream>
#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

namespace objnerf {

namespace {

cv::Mat to_mat_u8(const torch::Tensor& image, int channels) {
  auto t = (image.detach().to(torch::kFloat32).clamp(0.0, 1.0) * 255.0)
               .round()
               .to(torch::kUInt8)
               .contiguous();
  const int h = static_cast<int>(t.size(0));
  const int w = static_cast<int>(t.size(1));
  cv::Mat mat(h, w, channels == 3 ? CV_8UC3 : CV_8UC1);
  std::memcpy(mat.data, t.data_ptr<uint8_t>(), static_cast<size_t>(h) * w * channels);
  return mat;
}

}  // namespace

void write_png_rgb(const std::filesystem::path& path, const torch::Tensor& image) {
  if (image.dim() != 3 || image.size(2) != 3) throw ArgumentError("color image must be [H, W, 3]");
  // OpenCV expects BGR order.
  cv::Mat bgr = to_mat_u8(image.flip(-1), 3);
  if (!cv::imwrite(path.string(), bgr)) {
    throw IoError("failed to write PNG: " + path.string());
  }
}

torch::Tensor read_png_rgb(const std::filesystem::path& path) {
  cv::Mat bgr = cv::imread(path.string(), cv::IMREAD_COLOR);
  if (bgr.empty()) throw IoError("failed to read PNG: " + path.string());
  auto t = torch::from_blob(bgr.data, {bgr.rows, bgr.cols, 3}, torch::kUInt8).clone();
  return t.flip(-1).to(torch::kFloat32) / 255.0f;
}

void write_png_gray(const std::filesystem::path& path, const torch::Tensor& image) {
  if (image.dim() != 2) throw ArgumentError("grayscale image must be [H, W]");
  cv::Mat mat = to_mat_u8(image.unsqueeze(-1).squeeze(-1), 1);
  if (!cv::imwrite(path.string(), mat)) {
    throw IoError("failed to write PNG: " + path.string());
  }
}

torch::Tensor read_png_gray(const std::filesystem::path& path) {
  cv::Mat mat = cv::imread(path.string(), cv::IMREAD_GRAYSCALE);
  if (mat.empty()) throw IoError("failed to read PNG: " + path.string());
  auto t = torch::from_blob(mat.data, {mat.rows, mat.cols}, torch::kUInt8).clone();
  return t.to(torch::kFloat32) / 255.0f;
}

void write_pfm(const std::filesystem::path& path, const torch::Tensor& image) {
  if (image.dim() != 2) throw ArgumentError("PFM image must be [H, W]");
  auto t = image.detach().to(torch::kFloat32).contiguous();
  const int64_t h = t.size(0);
  const int64_t w = t.size(1);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("failed to open PFM for writing: " + path.string());
  out << "Pf\n" << w << " " << h << "\n-1.0\n";
  // Rows are stored bottom-to-top.
  for (int64_t row = h - 1; row >= 0; --row) {
    out.write(reinterpret_cast<const char*>(t.data_ptr<float>() + row * w),
              static_cast<std::streamsize>(w * sizeof(float)));
  }
  if (!out) throw IoError("failed while writing PFM: " + path.string());
}

torch::Tensor read_pfm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("failed to open PFM: " + path.string());
  std::string magic;
  int64_t w = 0, h = 0;
  double scale = 0.0;
  in >> magic >> w >> h >> scale;
  if (magic != "Pf" || w <= 0 || h <= 0) {
    throw ParseError("not a grayscale PFM file: " + path.string());
  }
  if (scale >= 0.0) throw ParseError("big-endian PFM is not supported: " + path.string());
  in.get();  // single whitespace after the scale line
  auto t = torch::empty({h, w}, torch::kFloat32);
  for (int64_t row = h - 1; row >= 0; --row) {
    in.read(reinterpret_cast<char*>(t.data_ptr<float>() + row * w),
            static_cast<std::streamsize>(w * sizeof(float)));
  }
  if (!in) throw ParseError("truncated PFM file: " + path.string());
  return t;
}

}  // namespace objnerf
