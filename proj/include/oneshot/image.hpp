// Copyright (c) 2026 The oneshot Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>

#include <torch/torch.h>

namespace oneshot {

/// Pixel dimensions of an image, height first.
struct Resolution {
  std::int64_t height = 0;
  std::int64_t width = 0;

  bool operator==(const Resolution&) const = default;
};

inline Resolution resolution_of(const torch::Tensor& image) {
  return {image.size(-2), image.size(-1)};
}

// Images are float tensors shaped [3, H, W] with values in [-1, 1].

/// Decodes a PNG or JPEG (detected from the file signature) to RGB in [-1, 1].
torch::Tensor read_image(const std::filesystem::path& path);

/// True if the file starts with a PNG or JPEG signature.
bool is_decodable_image(const std::filesystem::path& path);

void write_png(const std::filesystem::path& path, const torch::Tensor& image);
void write_jpeg(const std::filesystem::path& path, const torch::Tensor& image, int quality = 95);

/// 8-bit quantization used by the writers: round((x + 1) * 127.5), clamped.
torch::Tensor to_rgb8(const torch::Tensor& image);

/// Tiles [N, 3, H, W] images row-major into a rows x cols mosaic with
/// `padding` pixels of -1 (black) between cells. Missing cells stay black.
torch::Tensor make_grid(const torch::Tensor& images, std::int64_t rows, std::int64_t cols, std::int64_t padding = 2);

}  // namespace oneshot
