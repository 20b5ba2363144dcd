// Copyright (c) 2026 The oneshot Authors
// SPDX-License-Identifier: Apache-2.0

#include "oneshot/gennet.hpp"

#include <algorithm>

#include "oneshot/error.hpp"

namespace oneshot {

std::int64_t GeneratorConfig::block_channels(std::int64_t block) const {
  return std::max<std::int64_t>(base_channels >> (block + 1), 1);
}

void GeneratorConfig::validate() const {
  if (z_dim < 1) throw ValidationError("z_dim must be at least 1");
  if (num_up_blocks < 1) throw ValidationError("num_up_blocks must be at least 1");
  if (base_channels < 1) throw ValidationError("base_channels must be at least 1");
  if (base_spatial.height < 1 || base_spatial.width < 1) throw ValidationError("base_spatial must be positive");
}

GeneratorConfig GeneratorConfig::for_resolution(Resolution resolution, std::int64_t z_dim,
                                                std::int64_t num_up_blocks, std::int64_t base_channels) {
  GeneratorConfig c;
  c.z_dim = z_dim;
  c.num_up_blocks = num_up_blocks;
  c.base_channels = base_channels;
  const auto factor = c.upsampling_factor();
  if (resolution.height % factor != 0 || resolution.width % factor != 0) {
    throw ValidationError("resolution " + std::to_string(resolution.width) + "x" + std::to_string(resolution.height) +
                          " is not divisible by the upsampling factor " + std::to_string(factor));
  }
  c.base_spatial = {resolution.height / factor, resolution.width / factor};
  c.validate();
  return c;
}

torch::Tensor sample_latent(Rng& rng, std::int64_t z_dim, torch::Dtype dtype) {
  if (z_dim < 1) throw ValidationError("z_dim must be at least 1");
  return rng.normal_tensor({z_dim}, dtype);
}

torch::Tensor sample_latents(Rng& rng, std::int64_t batch, std::int64_t z_dim, torch::Dtype dtype) {
  if (z_dim < 1) throw ValidationError("z_dim must be at least 1");
  if (batch < 1) throw ValidationError("latent batch must be at least 1");
  return rng.normal_tensor({batch, z_dim}, dtype);
}

UpBlockImpl::UpBlockImpl(std::int64_t in, std::int64_t out, Rng& rng) {
  // No bias: instance norm removes any per-channel offset anyway.
  conv_ = register_module("conv", Conv(in, out, 3, rng, /*spectral_norm=*/false, /*bias=*/false));
  norm_ = register_module("norm", torch::nn::InstanceNorm2d(torch::nn::InstanceNorm2dOptions(out).affine(true)));
  if (in != out) skip_ = register_module("skip", Conv(in, out, 1, rng));
}

torch::Tensor UpBlockImpl::forward(const torch::Tensor& x) {
  auto up = torch::upsample_nearest2d(x, std::vector<std::int64_t>{x.size(2) * 2, x.size(3) * 2});
  auto main = lrelu(norm_(conv_(up)));
  return main + (skip_ ? skip_(up) : up);
}

GeneratorImpl::GeneratorImpl(GeneratorConfig config, Rng& init_rng) : config_(config) {
  config_.validate();
  const auto c0 = config_.base_channels;
  const auto cells = config_.base_spatial.height * config_.base_spatial.width;
  project_ = register_module("project", torch::nn::Linear(config_.z_dim, c0 * cells));
  {
    torch::NoGradGuard no_grad;
    orthogonal_init(project_->weight, init_rng);
    project_->bias.zero_();
  }
  blocks_ = register_module("blocks", torch::nn::ModuleList());
  auto in = c0;
  for (std::int64_t l = 0; l < config_.num_up_blocks; ++l) {
    const auto out = config_.block_channels(l);
    blocks_->push_back(UpBlock(in, out, init_rng));
    in = out;
  }
  to_rgb_ = register_module("to_rgb", Conv(in, 3, 3, init_rng));
}

GeneratorOutput GeneratorImpl::generate(const torch::Tensor& z) {
  auto codes = z.dim() == 1 ? z.unsqueeze(0) : z;
  if (codes.dim() != 2 || codes.size(1) != config_.z_dim) {
    throw ValidationError("latent code has shape " + c10::str(z.sizes()) + ", generator expects z_dim " +
                          std::to_string(config_.z_dim));
  }
  GeneratorOutput out;
  auto x = project_(codes).view(
      {codes.size(0), config_.base_channels, config_.base_spatial.height, config_.base_spatial.width});
  for (const auto& block : *blocks_) {
    x = block->as<UpBlockImpl>()->forward(x);
    out.block_features.push_back(x);
  }
  out.image = to_image(x);
  return out;
}

torch::Tensor GeneratorImpl::to_image(const torch::Tensor& last_features) {
  return torch::tanh(to_rgb_(last_features));
}

}  // namespace oneshot
