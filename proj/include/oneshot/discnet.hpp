// Copyright (c) 2026 The oneshot Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>

#include <torch/torch.h>

#include "oneshot/image.hpp"
#include "oneshot/layers.hpp"
#include "oneshot/rng.hpp"

namespace oneshot {

struct DiscriminatorConfig {
  std::int64_t trunk_blocks = 3;
  std::int64_t branch_blocks = 4;
  std::int64_t trunk_channels = 128;  // width of the last trunk block (= C of F)
  std::int64_t branch_channels = 64;  // width of residual blocks inside both branches
  std::int64_t layout_collapse_channels = 1;
  bool spectral_norm = false;

  /// Trunk widths double per block and end at trunk_channels.
  std::int64_t trunk_block_channels(std::int64_t block) const;
  /// Trunk output spatial size for an input of `input` (each block halves).
  Resolution trunk_resolution(Resolution input) const;

  void validate() const;
};

/// Pre-sigmoid logits for a batch of B images.
struct DiscriminatorVerdict {
  torch::Tensor low_level;  // [B, 1, h_t, w_t]
  torch::Tensor content;    // [B]
  torch::Tensor layout;     // [B, 1, h_t, w_t]
};

/// Residual block with two convolutions and leaky-ReLU pre-activation.
/// `downsample` halves the resolution by 2x2 average pooling (main and skip);
/// `preactivate` is false for the first trunk block, which sees raw pixels.
class ResBlockImpl : public torch::nn::Module {
 public:
  ResBlockImpl(std::int64_t in, std::int64_t out, std::int64_t kernel, bool downsample, bool preactivate, Rng& rng,
               bool spectral_norm);
  torch::Tensor forward(const torch::Tensor& x);

 private:
  Conv conv1_{nullptr};
  Conv conv2_{nullptr};
  Conv skip_{nullptr};
  bool downsample_;
  bool preactivate_;
};
TORCH_MODULE(ResBlock);

/// Shared low-level trunk feeding three heads:
///   low-level head  1x1 conv C -> 1 on the trunk features (patch logits)
///   content branch  global average pool -> 1x1-spatial residual blocks -> scalar
///   layout branch   1x1 conv C -> k collapse -> spatial residual blocks -> 1x1 conv -> logit map
/// The content branch sees only C numbers per image and the layout branch only
/// h_t * w_t * k numbers.
class DiscriminatorImpl : public torch::nn::Module {
 public:
  DiscriminatorImpl(DiscriminatorConfig config, Rng& init_rng);

  DiscriminatorVerdict discriminate(const torch::Tensor& images);
  /// Heads evaluated on precomputed trunk features (test seam).
  DiscriminatorVerdict discriminate_features(const torch::Tensor& features);

  torch::Tensor trunk(const torch::Tensor& images);
  torch::Tensor content_branch(const torch::Tensor& features);
  torch::Tensor content_from_pooled(const torch::Tensor& pooled);  // pooled: [B, C, 1, 1]
  torch::Tensor layout_branch(const torch::Tensor& features);
  torch::Tensor layout_collapse(const torch::Tensor& features);
  torch::Tensor low_level_head(const torch::Tensor& features);

  /// Features after each trunk block (used by the metrics extractors).
  std::vector<torch::Tensor> trunk_stages(const torch::Tensor& images);

  Conv& collapse() { return collapse_; }
  Conv& low_level_conv() { return low_level_; }
  const DiscriminatorConfig& config() const { return config_; }

 private:
  DiscriminatorConfig config_;
  torch::nn::ModuleList trunk_blocks_;
  Conv low_level_{nullptr};
  torch::nn::ModuleList content_blocks_;
  Conv content_out_{nullptr};
  Conv collapse_{nullptr};
  torch::nn::ModuleList layout_blocks_;
  Conv layout_out_{nullptr};
};
TORCH_MODULE(Discriminator);

}  // namespace oneshot
