// Copyright (c) 2026 The oneshot Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <torch/torch.h>

#include "oneshot/image.hpp"
#include "oneshot/rng.hpp"

namespace oneshot {

enum class SourceMode { kSingleImage, kSingleVideo };

SourceMode parse_source_mode(std::string_view text);
std::string_view to_string(SourceMode mode);

/// The training distribution: every frame of one video, or one image.
/// Immutable after construction; frames are [N, 3, H, W] float32 in [-1, 1].
class FrameSet {
 public:
  /// Validates: non-empty, pixel range, and the mode's length rule
  /// (single image => 1 frame, single video => at least 2).
  FrameSet(torch::Tensor frames, std::string source_id, Resolution native_resolution, SourceMode mode);

  const torch::Tensor& frames() const { return frames_; }
  torch::Tensor frame(std::int64_t index) const { return frames_[index]; }
  std::int64_t size() const { return frames_.size(0); }
  Resolution resolution() const { return resolution_of(frames_); }
  Resolution native_resolution() const { return native_; }
  const std::string& source_id() const { return source_id_; }
  SourceMode mode() const { return mode_; }

 private:
  torch::Tensor frames_;
  std::string source_id_;
  Resolution native_;
  SourceMode mode_;
};

/// Loads one image file (single image) or a directory of PNG/JPEG frames in
/// lexicographic filename order (single video).
FrameSet load_frames(const std::filesystem::path& path, SourceMode mode);

/// Target (H, W): longer side scaled to max_side with the aspect preserved,
/// then each side floored to a multiple of divisor.
Resolution training_resolution(Resolution native, std::int64_t max_side, std::int64_t divisor);

/// Resizes every frame (antialiased bilinear) to the aspect-preserving size and
/// center-crops to training_resolution().
FrameSet to_training_resolution(const FrameSet& fs, std::int64_t max_side, std::int64_t divisor);

struct AugmentationPolicy {
  double horizontal_flip_prob = 0.5;
  double brightness = 0.2;   // max additive shift, fraction of the [0, 1] range
  double saturation = 0.2;   // max relative deviation of the saturation factor from 1
  double contrast = 0.2;     // max relative deviation of the contrast factor from 1
  double translation_frac = 0.125;
  double cutout_frac = 0.25;
  double apply_prob = 0.3;

  /// Probabilities in [0, 1], fractions in [0, 0.5].
  void validate() const;

  static AugmentationPolicy identity() {
    AugmentationPolicy p;
    p.apply_prob = 0.0;
    return p;
  }
};

/// Exactly which transforms fired and with which parameters. Replaying a
/// descriptor through apply_augmentation() reproduces the augmented image.
struct AugmentationDescriptor {
  struct Shift {
    std::int64_t dy = 0;
    std::int64_t dx = 0;
    bool operator==(const Shift&) const = default;
  };
  struct Square {
    std::int64_t y0 = 0;
    std::int64_t x0 = 0;
    std::int64_t size = 0;
    bool operator==(const Square&) const = default;
  };

  bool flip = false;
  std::optional<double> brightness;  // additive shift in [0, 1] units
  std::optional<double> saturation;  // multiplicative factor
  std::optional<double> contrast;    // multiplicative factor
  std::optional<Shift> translation;
  std::optional<Square> cutout;

  bool empty() const {
    return !flip && !brightness && !saturation && !contrast && !translation && !cutout;
  }
  std::string to_string() const;
  bool operator==(const AugmentationDescriptor&) const = default;
};

/// Draws a descriptor for an image of the given size. Every transform consumes
/// one gate draw whenever its strength is non-zero, fired or not.
AugmentationDescriptor draw_augmentation(const AugmentationPolicy& policy, Resolution size, Rng& rng);

/// Applies a descriptor to a [3, H, W] (or [B, 3, H, W]) image using
/// differentiable tensor ops, then clamps to [-1, 1].
torch::Tensor apply_augmentation(const torch::Tensor& image, const AugmentationDescriptor& desc);

struct AugmentedImage {
  torch::Tensor image;
  AugmentationDescriptor descriptor;
};

AugmentedImage augment(const torch::Tensor& image, const AugmentationPolicy& policy, Rng& rng);

/// Augments each image of a [B, 3, H, W] batch independently.
torch::Tensor augment_batch(const torch::Tensor& images, const AugmentationPolicy& policy, Rng& rng,
                            std::vector<AugmentationDescriptor>* descriptors = nullptr);

struct SampleProvenance {
  std::int64_t frame_index = 0;
  AugmentationDescriptor augmentation;
};

struct SampleBatch {
  torch::Tensor images;  // [B, 3, H, W]
  std::vector<SampleProvenance> provenance;
};

/// Draws batch_size frame indices uniformly with replacement and augments each.
SampleBatch sample_batch(const FrameSet& fs, const AugmentationPolicy& policy, std::int64_t batch_size, Rng& rng);

}  // namespace oneshot
