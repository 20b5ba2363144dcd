// Copyright (c) 2026 The oneshot Authors
// SPDX-License-Identifier: Apache-2.0

#include "oneshot/dataio.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <sstream>

#include "oneshot/error.hpp"

namespace oneshot {
namespace fs = std::filesystem;

SourceMode parse_source_mode(std::string_view text) {
  if (text == "single_image") return SourceMode::kSingleImage;
  if (text == "single_video") return SourceMode::kSingleVideo;
  throw ValidationError("unknown mode '" + std::string(text) + "' (expected single_image or single_video)");
}

std::string_view to_string(SourceMode mode) {
  return mode == SourceMode::kSingleImage ? "single_image" : "single_video";
}

FrameSet::FrameSet(torch::Tensor frames, std::string source_id, Resolution native_resolution, SourceMode mode)
    : frames_(std::move(frames)), source_id_(std::move(source_id)), native_(native_resolution), mode_(mode) {
  if (frames_.dim() != 4 || frames_.size(1) != 3) throw ValidationError("frames must be shaped [N, 3, H, W]");
  if (frames_.size(0) == 0) throw ValidationError("frame set is empty");
  if (mode_ == SourceMode::kSingleImage && frames_.size(0) != 1)
    throw ValidationError("single_image mode requires exactly one frame, got " + std::to_string(frames_.size(0)));
  if (mode_ == SourceMode::kSingleVideo && frames_.size(0) < 2)
    throw ValidationError("single_video mode requires at least two frames, got " +
                          std::to_string(frames_.size(0)));
  frames_ = frames_.detach().to(torch::kFloat32).contiguous();
  if (!torch::isfinite(frames_).all().item<bool>() || frames_.min().item<float>() < -1.0f ||
      frames_.max().item<float>() > 1.0f)
    throw ValidationError("frame pixel values must lie in [-1, 1]");
}

namespace {

bool has_image_extension(const fs::path& p) {
  auto ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext == ".png" || ext == ".jpg" || ext == ".jpeg";
}

}  // namespace

FrameSet load_frames(const fs::path& path, SourceMode mode) {
  std::error_code ec;
  if (!fs::exists(path, ec)) throw InputError("input path does not exist: '" + path.string() + "'");

  if (mode == SourceMode::kSingleImage) {
    if (!fs::is_regular_file(path)) throw InputError("single_image mode expects an image file: '" + path.string() + "'");
    auto img = read_image(path);
    auto native = resolution_of(img);
    return FrameSet(img.unsqueeze(0), path.filename().string(), native, mode);
  }

  if (!fs::is_directory(path)) throw InputError("single_video mode expects a frame directory: '" + path.string() + "'");
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(path)) {
    if (entry.is_regular_file() && has_image_extension(entry.path())) files.push_back(entry.path());
  }
  if (files.empty()) throw ValidationError("frame directory contains no PNG/JPEG files: '" + path.string() + "'");
  std::sort(files.begin(), files.end(),
            [](const fs::path& a, const fs::path& b) { return a.filename().string() < b.filename().string(); });

  std::vector<torch::Tensor> frames;
  frames.reserve(files.size());
  for (const auto& f : files) frames.push_back(read_image(f));

  const auto reference = resolution_of(frames.front());
  std::ostringstream offenders;
  bool mixed = false;
  for (std::size_t i = 1; i < frames.size(); ++i) {
    auto r = resolution_of(frames[i]);
    if (r != reference) {
      offenders << "\n  " << files[i].filename().string() << " (" << r.width << "x" << r.height << ")";
      mixed = true;
    }
  }
  if (mixed) {
    throw ValidationError("frames differ in resolution from " + files.front().filename().string() + " (" +
                          std::to_string(reference.width) + "x" + std::to_string(reference.height) +
                          "):" + offenders.str());
  }
  auto dir_name = path.filename().empty() ? path.parent_path().filename() : path.filename();
  return FrameSet(torch::stack(frames), dir_name.string(), reference, mode);
}

Resolution training_resolution(Resolution native, std::int64_t max_side, std::int64_t divisor) {
  if (divisor < 1) throw ValidationError("divisor must be positive");
  if (max_side < divisor)
    throw ValidationError("max_side " + std::to_string(max_side) + " is smaller than divisor " + std::to_string(divisor));
  if (native.height < 1 || native.width < 1) throw ValidationError("native resolution must be positive");

  const double scale = static_cast<double>(max_side) / static_cast<double>(std::max(native.height, native.width));
  const auto scaled_h = native.height >= native.width ? max_side : std::llround(native.height * scale);
  const auto scaled_w = native.width >= native.height ? max_side : std::llround(native.width * scale);
  Resolution out{(scaled_h / divisor) * divisor, (scaled_w / divisor) * divisor};
  if (out.height < divisor || out.width < divisor) {
    throw ValidationError("training resolution " + std::to_string(scaled_w) + "x" + std::to_string(scaled_h) +
                          " has a side smaller than divisor " + std::to_string(divisor));
  }
  return out;
}

FrameSet to_training_resolution(const FrameSet& frame_set, std::int64_t max_side, std::int64_t divisor) {
  const auto native = frame_set.resolution();
  const auto target = training_resolution(native, max_side, divisor);

  const double scale = static_cast<double>(max_side) / static_cast<double>(std::max(native.height, native.width));
  const auto scaled_h = native.height >= native.width ? max_side : std::llround(native.height * scale);
  const auto scaled_w = native.width >= native.height ? max_side : std::llround(native.width * scale);

  namespace F = torch::nn::functional;
  auto resized = frame_set.frames();
  if (scaled_h != native.height || scaled_w != native.width) {
    resized = F::interpolate(resized, F::InterpolateFuncOptions()
                                          .size(std::vector<std::int64_t>{scaled_h, scaled_w})
                                          .mode(torch::kBilinear)
                                          .align_corners(false)
                                          .antialias(true));
  }
  const auto top = (scaled_h - target.height) / 2;
  const auto left = (scaled_w - target.width) / 2;
  auto cropped = resized.slice(2, top, top + target.height).slice(3, left, left + target.width).clamp(-1.0, 1.0);
  return FrameSet(cropped.contiguous(), frame_set.source_id(), frame_set.native_resolution(), frame_set.mode());
}

void AugmentationPolicy::validate() const {
  auto prob = [](double v, const char* name) {
    if (!(v >= 0.0 && v <= 1.0)) throw ValidationError(std::string(name) + " must lie in [0, 1]");
  };
  auto frac = [](double v, const char* name) {
    if (!(v >= 0.0 && v <= 0.5)) throw ValidationError(std::string(name) + " must lie in [0, 0.5]");
  };
  prob(horizontal_flip_prob, "horizontal_flip_prob");
  prob(apply_prob, "apply_prob");
  frac(brightness, "brightness");
  frac(saturation, "saturation");
  frac(contrast, "contrast");
  frac(translation_frac, "translation_frac");
  frac(cutout_frac, "cutout_frac");
}

std::string AugmentationDescriptor::to_string() const {
  std::ostringstream os;
  os.precision(17);
  const char* sep = "";
  if (flip) { os << "flip"; sep = ";"; }
  if (brightness) { os << sep << "brightness=" << *brightness; sep = ";"; }
  if (saturation) { os << sep << "saturation=" << *saturation; sep = ";"; }
  if (contrast) { os << sep << "contrast=" << *contrast; sep = ";"; }
  if (translation) { os << sep << "translate=" << translation->dy << "," << translation->dx; sep = ";"; }
  if (cutout) { os << sep << "cutout=" << cutout->y0 << "," << cutout->x0 << "," << cutout->size; }
  return os.str();
}

AugmentationDescriptor draw_augmentation(const AugmentationPolicy& policy, Resolution size, Rng& rng) {
  AugmentationDescriptor d;
  auto gate = [&] { return rng.uniform() < policy.apply_prob; };

  if (policy.horizontal_flip_prob > 0.0) {
    const bool g = gate();
    const bool coin = rng.uniform() < policy.horizontal_flip_prob;
    d.flip = g && coin;
  }
  if (policy.brightness > 0.0 && gate()) d.brightness = rng.uniform(-policy.brightness, policy.brightness);
  if (policy.saturation > 0.0 && gate())
    d.saturation = rng.uniform(1.0 - policy.saturation, 1.0 + policy.saturation);
  if (policy.contrast > 0.0 && gate()) d.contrast = rng.uniform(1.0 - policy.contrast, 1.0 + policy.contrast);

  const auto max_dy = std::llround(policy.translation_frac * static_cast<double>(size.height));
  const auto max_dx = std::llround(policy.translation_frac * static_cast<double>(size.width));
  if ((max_dy > 0 || max_dx > 0) && gate()) {
    AugmentationDescriptor::Shift s;
    s.dy = rng.uniform_int(-max_dy, max_dy);
    s.dx = rng.uniform_int(-max_dx, max_dx);
    d.translation = s;
  }

  const auto max_side =
      std::min(std::llround(policy.cutout_frac * static_cast<double>(std::min(size.height, size.width))),
               static_cast<long long>(std::min(size.height, size.width)));
  if (max_side >= 1 && gate()) {
    AugmentationDescriptor::Square sq;
    sq.size = rng.uniform_int(1, max_side);
    sq.y0 = rng.uniform_int(0, size.height - sq.size);
    sq.x0 = rng.uniform_int(0, size.width - sq.size);
    d.cutout = sq;
  }
  return d;
}

torch::Tensor apply_augmentation(const torch::Tensor& image, const AugmentationDescriptor& desc) {
  if (desc.empty()) return image;
  const auto c_dim = image.dim() - 3;  // channel axis
  const auto h_dim = image.dim() - 2;
  const auto w_dim = image.dim() - 1;
  auto x = image;

  if (desc.flip) x = x.flip({w_dim});
  if (desc.brightness) x = x + 2.0 * *desc.brightness;
  if (desc.saturation) {
    auto mean = x.mean({c_dim}, /*keepdim=*/true);
    x = mean + (x - mean) * *desc.saturation;
  }
  if (desc.contrast) {
    auto mean = x.mean({c_dim, h_dim, w_dim}, /*keepdim=*/true);
    x = mean + (x - mean) * *desc.contrast;
  }
  if (desc.translation) {
    const auto [dy, dx] = *desc.translation;
    const auto h = x.size(h_dim);
    const auto w = x.size(w_dim);
    auto padded = torch::constant_pad_nd(x, {std::max<std::int64_t>(dx, 0), std::max<std::int64_t>(-dx, 0),
                                             std::max<std::int64_t>(dy, 0), std::max<std::int64_t>(-dy, 0)},
                                         0.0);
    const auto top = std::max<std::int64_t>(-dy, 0);
    const auto left = std::max<std::int64_t>(-dx, 0);
    x = padded.slice(h_dim, top, top + h).slice(w_dim, left, left + w);
  }
  if (desc.cutout) {
    const auto& sq = *desc.cutout;
    auto mask = torch::ones({x.size(h_dim), x.size(w_dim)}, x.options().requires_grad(false));
    mask.slice(0, sq.y0, sq.y0 + sq.size).slice(1, sq.x0, sq.x0 + sq.size).zero_();
    x = x * mask;
  }
  return x.clamp(-1.0, 1.0);
}

AugmentedImage augment(const torch::Tensor& image, const AugmentationPolicy& policy, Rng& rng) {
  auto desc = draw_augmentation(policy, resolution_of(image), rng);
  return {apply_augmentation(image, desc), std::move(desc)};
}

torch::Tensor augment_batch(const torch::Tensor& images, const AugmentationPolicy& policy, Rng& rng,
                            std::vector<AugmentationDescriptor>* descriptors) {
  std::vector<torch::Tensor> out;
  out.reserve(static_cast<std::size_t>(images.size(0)));
  bool any = false;
  for (std::int64_t i = 0; i < images.size(0); ++i) {
    auto a = augment(images[i], policy, rng);
    any = any || !a.descriptor.empty();
    out.push_back(std::move(a.image));
    if (descriptors) descriptors->push_back(std::move(a.descriptor));
  }
  return any ? torch::stack(out) : images;
}

SampleBatch sample_batch(const FrameSet& fs, const AugmentationPolicy& policy, std::int64_t batch_size, Rng& rng) {
  if (batch_size < 1) throw ValidationError("batch_size must be at least 1");
  SampleBatch batch;
  std::vector<torch::Tensor> images;
  for (std::int64_t b = 0; b < batch_size; ++b) {
    const auto index = rng.uniform_int(0, fs.size() - 1);
    auto a = augment(fs.frame(index), policy, rng);
    images.push_back(std::move(a.image));
    batch.provenance.push_back({index, std::move(a.descriptor)});
  }
  batch.images = torch::stack(images);
  return batch;
}

}  // namespace oneshot
