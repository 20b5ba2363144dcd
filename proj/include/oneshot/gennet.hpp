// Copyright (c) 2026 The oneshot Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include <torch/torch.h>

#include "oneshot/image.hpp"
#include "oneshot/layers.hpp"
#include "oneshot/rng.hpp"

namespace oneshot {

struct GeneratorConfig {
  std::int64_t z_dim = 64;
  Resolution base_spatial{4, 4};
  std::int64_t num_up_blocks = 4;
  std::int64_t base_channels = 256;

  /// base_spatial scaled by 2^num_up_blocks.
  Resolution output_resolution() const {
    return {base_spatial.height << num_up_blocks, base_spatial.width << num_up_blocks};
  }
  std::int64_t upsampling_factor() const { return std::int64_t{1} << num_up_blocks; }

  /// Output channels of up-block `block` (0-based): base_channels halved per block.
  std::int64_t block_channels(std::int64_t block) const;

  void validate() const;

  /// Config whose output matches `resolution`, which must be divisible by
  /// 2^num_up_blocks.
  static GeneratorConfig for_resolution(Resolution resolution, std::int64_t z_dim = 64,
                                        std::int64_t num_up_blocks = 4, std::int64_t base_channels = 256);
};

struct GeneratorOutput {
  torch::Tensor image;                        // [B, 3, H, W] in [-1, 1]
  std::vector<torch::Tensor> block_features;  // one per up-block, coarse to fine
};

/// i.i.d. standard normal latent code, shape [z_dim].
torch::Tensor sample_latent(Rng& rng, std::int64_t z_dim, torch::Dtype dtype = torch::kFloat32);

/// A batch of latent codes, shape [batch, z_dim], drawn row by row.
torch::Tensor sample_latents(Rng& rng, std::int64_t batch, std::int64_t z_dim, torch::Dtype dtype = torch::kFloat32);

/// Nearest x2 upsample -> 3x3 conv -> instance norm -> leaky ReLU, plus an
/// additive (1x1-projected when widths differ) skip from the upsampled input.
class UpBlockImpl : public torch::nn::Module {
 public:
  UpBlockImpl(std::int64_t in, std::int64_t out, Rng& rng);
  torch::Tensor forward(const torch::Tensor& x);

 private:
  Conv conv_{nullptr};
  torch::nn::InstanceNorm2d norm_{nullptr};
  Conv skip_{nullptr};
};
TORCH_MODULE(UpBlock);

class GeneratorImpl : public torch::nn::Module {
 public:
  GeneratorImpl(GeneratorConfig config, Rng& init_rng);

  /// z is [B, z_dim] or a single [z_dim] code (treated as B = 1).
  GeneratorOutput generate(const torch::Tensor& z);

  /// Output projection applied to the last block's features: 3x3 conv + tanh.
  torch::Tensor to_image(const torch::Tensor& last_features);

  const GeneratorConfig& config() const { return config_; }

 private:
  GeneratorConfig config_;
  torch::nn::Linear project_{nullptr};
  torch::nn::ModuleList blocks_;
  Conv to_rgb_{nullptr};
};
TORCH_MODULE(Generator);

}  // namespace oneshot
