// Copyright (c) 2026 The oneshot Authors
// SPDX-License-Identifier: Apache-2.0

#include "oneshot/image.hpp"

#include <csetjmp>
#include <cstdio>
#include <fstream>
#include <memory>
#include <vector>

#include <jpeglib.h>
#include <png.h>

#include "oneshot/error.hpp"

namespace oneshot {
namespace {

enum class Format { kPng, kJpeg, kUnknown };

Format sniff(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw InputError("cannot open image file '" + path.string() + "'");
  unsigned char sig[8] = {};
  is.read(reinterpret_cast<char*>(sig), sizeof(sig));
  if (is.gcount() >= 8 && png_sig_cmp(sig, 0, 8) == 0) return Format::kPng;
  if (is.gcount() >= 3 && sig[0] == 0xFF && sig[1] == 0xD8 && sig[2] == 0xFF) return Format::kJpeg;
  return Format::kUnknown;
}

torch::Tensor from_rgb8(std::vector<std::uint8_t>& pixels, std::int64_t h, std::int64_t w) {
  auto hwc = torch::from_blob(pixels.data(), {h, w, 3}, torch::kUInt8);
  return hwc.permute({2, 0, 1}).to(torch::kFloat32).div(127.5).sub(1.0).contiguous();
}

torch::Tensor read_png(const std::filesystem::path& path) {
  png_image img{};
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&img, path.c_str()))
    throw InputError("cannot decode PNG '" + path.string() + "': " + img.message);
  img.format = PNG_FORMAT_RGB;
  std::vector<std::uint8_t> buf(PNG_IMAGE_SIZE(img));
  if (!png_image_finish_read(&img, nullptr, buf.data(), 0, nullptr)) {
    std::string msg = img.message;
    png_image_free(&img);
    throw InputError("cannot decode PNG '" + path.string() + "': " + msg);
  }
  return from_rgb8(buf, img.height, img.width);
}

struct JpegErrorManager {
  jpeg_error_mgr pub;
  std::jmp_buf jump;
  char message[JMSG_LENGTH_MAX];
};

void jpeg_error_exit(j_common_ptr cinfo) {
  auto* err = reinterpret_cast<JpegErrorManager*>(cinfo->err);
  (*cinfo->err->format_message)(cinfo, err->message);
  std::longjmp(err->jump, 1);
}

torch::Tensor read_jpeg(const std::filesystem::path& path) {
  std::unique_ptr<FILE, int (*)(FILE*)> file(std::fopen(path.c_str(), "rb"), &std::fclose);
  if (!file) throw InputError("cannot open image file '" + path.string() + "'");

  jpeg_decompress_struct cinfo{};
  JpegErrorManager err{};
  cinfo.err = jpeg_std_error(&err.pub);
  err.pub.error_exit = jpeg_error_exit;
  std::vector<std::uint8_t> buf;
  if (setjmp(err.jump)) {
    jpeg_destroy_decompress(&cinfo);
    throw InputError("cannot decode JPEG '" + path.string() + "': " + err.message);
  }
  jpeg_create_decompress(&cinfo);
  jpeg_stdio_src(&cinfo, file.get());
  jpeg_read_header(&cinfo, TRUE);
  cinfo.out_color_space = JCS_RGB;
  jpeg_start_decompress(&cinfo);
  const auto h = static_cast<std::int64_t>(cinfo.output_height);
  const auto w = static_cast<std::int64_t>(cinfo.output_width);
  buf.resize(static_cast<std::size_t>(h * w * 3));
  while (cinfo.output_scanline < cinfo.output_height) {
    JSAMPROW row = buf.data() + static_cast<std::size_t>(cinfo.output_scanline) * w * 3;
    jpeg_read_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  return from_rgb8(buf, h, w);
}

void check_image(const torch::Tensor& image) {
  if (image.dim() != 3 || image.size(0) != 3)
    throw ValidationError("expected an image tensor shaped [3, H, W]");
}

}  // namespace

bool is_decodable_image(const std::filesystem::path& path) {
  try {
    return sniff(path) != Format::kUnknown;
  } catch (const InputError&) {
    return false;
  }
}

torch::Tensor read_image(const std::filesystem::path& path) {
  switch (sniff(path)) {
    case Format::kPng: return read_png(path);
    case Format::kJpeg: return read_jpeg(path);
    default: throw InputError("unrecognized image format in '" + path.string() + "' (expected PNG or JPEG)");
  }
}

torch::Tensor to_rgb8(const torch::Tensor& image) {
  check_image(image);
  return image.detach().to(torch::kFloat64).add(1.0).mul(127.5).round().clamp(0, 255).to(torch::kUInt8);
}

void write_png(const std::filesystem::path& path, const torch::Tensor& image) {
  auto hwc = to_rgb8(image).permute({1, 2, 0}).contiguous();
  png_image img{};
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(hwc.size(1));
  img.height = static_cast<png_uint_32>(hwc.size(0));
  img.format = PNG_FORMAT_RGB;
  if (!png_image_write_to_file(&img, path.c_str(), 0, hwc.data_ptr<std::uint8_t>(), 0, nullptr))
    throw InputError("cannot write PNG '" + path.string() + "': " + img.message);
}

void write_jpeg(const std::filesystem::path& path, const torch::Tensor& image, int quality) {
  auto hwc = to_rgb8(image).permute({1, 2, 0}).contiguous();
  std::unique_ptr<FILE, int (*)(FILE*)> file(std::fopen(path.c_str(), "wb"), &std::fclose);
  if (!file) throw InputError("cannot open '" + path.string() + "' for writing");

  jpeg_compress_struct cinfo{};
  JpegErrorManager err{};
  cinfo.err = jpeg_std_error(&err.pub);
  err.pub.error_exit = jpeg_error_exit;
  if (setjmp(err.jump)) {
    jpeg_destroy_compress(&cinfo);
    throw InputError("cannot encode JPEG '" + path.string() + "': " + err.message);
  }
  jpeg_create_compress(&cinfo);
  jpeg_stdio_dest(&cinfo, file.get());
  cinfo.image_width = static_cast<JDIMENSION>(hwc.size(1));
  cinfo.image_height = static_cast<JDIMENSION>(hwc.size(0));
  cinfo.input_components = 3;
  cinfo.in_color_space = JCS_RGB;
  jpeg_set_defaults(&cinfo);
  jpeg_set_quality(&cinfo, quality, TRUE);
  jpeg_start_compress(&cinfo, TRUE);
  auto* base = hwc.data_ptr<std::uint8_t>();
  while (cinfo.next_scanline < cinfo.image_height) {
    JSAMPROW row = base + static_cast<std::size_t>(cinfo.next_scanline) * cinfo.image_width * 3;
    jpeg_write_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_compress(&cinfo);
  jpeg_destroy_compress(&cinfo);
}

torch::Tensor make_grid(const torch::Tensor& images, std::int64_t rows, std::int64_t cols, std::int64_t padding) {
  if (images.dim() != 4 || images.size(1) != 3) throw ValidationError("make_grid expects [N, 3, H, W]");
  if (rows < 1 || cols < 1 || rows * cols < images.size(0))
    throw ValidationError("grid of " + std::to_string(rows) + "x" + std::to_string(cols) + " cannot hold " +
                          std::to_string(images.size(0)) + " images");
  const auto h = images.size(2);
  const auto w = images.size(3);
  auto grid = torch::full({3, rows * h + (rows + 1) * padding, cols * w + (cols + 1) * padding}, -1.0,
                          images.options().dtype(torch::kFloat32));
  auto src = images.detach().to(torch::kFloat32);
  for (std::int64_t i = 0; i < images.size(0); ++i) {
    const auto r = i / cols;
    const auto c = i % cols;
    const auto y = padding + r * (h + padding);
    const auto x = padding + c * (w + padding);
    grid.slice(1, y, y + h).slice(2, x, x + w).copy_(src[i]);
  }
  return grid;
}

}  // namespace oneshot
