// Copyright (c) 2026 The oneshot Authors
// SPDX-License-Identifier: Apache-2.0

#include "oneshot/discnet.hpp"

#include <algorithm>

#include "oneshot/error.hpp"

namespace oneshot {

std::int64_t DiscriminatorConfig::trunk_block_channels(std::int64_t block) const {
  return std::max<std::int64_t>(trunk_channels >> (trunk_blocks - 1 - block), 1);
}

Resolution DiscriminatorConfig::trunk_resolution(Resolution input) const {
  return {input.height >> trunk_blocks, input.width >> trunk_blocks};
}

void DiscriminatorConfig::validate() const {
  if (trunk_blocks < 1) throw ValidationError("trunk_blocks must be at least 1");
  if (branch_blocks < 1) throw ValidationError("branch_blocks must be at least 1");
  if (trunk_channels < 1 || branch_channels < 1) throw ValidationError("channel widths must be positive");
  if (layout_collapse_channels < 1) throw ValidationError("layout_collapse_channels must be at least 1");
}

ResBlockImpl::ResBlockImpl(std::int64_t in, std::int64_t out, std::int64_t kernel, bool downsample, bool preactivate,
                           Rng& rng, bool spectral_norm)
    : downsample_(downsample), preactivate_(preactivate) {
  conv1_ = register_module("conv1", Conv(in, out, kernel, rng, spectral_norm));
  conv2_ = register_module("conv2", Conv(out, out, kernel, rng, spectral_norm));
  if (in != out) skip_ = register_module("skip", Conv(in, out, 1, rng, spectral_norm));
}

torch::Tensor ResBlockImpl::forward(const torch::Tensor& x) {
  auto h = preactivate_ ? lrelu(x) : x;
  h = conv2_(lrelu(conv1_(h)));
  auto s = x;
  if (downsample_) {
    h = torch::avg_pool2d(h, 2);
    s = torch::avg_pool2d(s, 2);
  }
  if (skip_) s = skip_(s);
  return h + s;
}

DiscriminatorImpl::DiscriminatorImpl(DiscriminatorConfig config, Rng& init_rng) : config_(config) {
  config_.validate();
  const bool sn = config_.spectral_norm;

  trunk_blocks_ = register_module("trunk", torch::nn::ModuleList());
  std::int64_t in = 3;
  for (std::int64_t i = 0; i < config_.trunk_blocks; ++i) {
    const auto out = config_.trunk_block_channels(i);
    trunk_blocks_->push_back(ResBlock(in, out, 3, /*downsample=*/true, /*preactivate=*/i > 0, init_rng, sn));
    in = out;
  }
  const auto c = config_.trunk_channels;
  const auto width = config_.branch_channels;

  low_level_ = register_module("low_level", Conv(c, 1, 1, init_rng, sn));

  content_blocks_ = register_module("content", torch::nn::ModuleList());
  for (std::int64_t i = 0; i < config_.branch_blocks; ++i)
    content_blocks_->push_back(ResBlock(i == 0 ? c : width, width, 1, false, true, init_rng, sn));
  content_out_ = register_module("content_out", Conv(width, 1, 1, init_rng, sn));

  const auto k = config_.layout_collapse_channels;
  collapse_ = register_module("collapse", Conv(c, k, 1, init_rng, sn));
  layout_blocks_ = register_module("layout", torch::nn::ModuleList());
  for (std::int64_t i = 0; i < config_.branch_blocks; ++i)
    layout_blocks_->push_back(ResBlock(i == 0 ? k : width, width, 3, false, true, init_rng, sn));
  layout_out_ = register_module("layout_out", Conv(width, 1, 1, init_rng, sn));
}

std::vector<torch::Tensor> DiscriminatorImpl::trunk_stages(const torch::Tensor& images) {
  if (images.dim() != 4 || images.size(1) != 3) throw ValidationError("discriminator expects [B, 3, H, W] images");
  std::vector<torch::Tensor> stages;
  auto x = images;
  for (const auto& block : *trunk_blocks_) {
    x = block->as<ResBlockImpl>()->forward(x);
    stages.push_back(x);
  }
  return stages;
}

torch::Tensor DiscriminatorImpl::trunk(const torch::Tensor& images) {
  return trunk_stages(images).back();
}

torch::Tensor DiscriminatorImpl::content_from_pooled(const torch::Tensor& pooled) {
  auto x = pooled;
  for (const auto& block : *content_blocks_) x = block->as<ResBlockImpl>()->forward(x);
  return content_out_(lrelu(x)).view({pooled.size(0)});
}

torch::Tensor DiscriminatorImpl::content_branch(const torch::Tensor& features) {
  return content_from_pooled(features.mean({2, 3}, /*keepdim=*/true));
}

torch::Tensor DiscriminatorImpl::layout_collapse(const torch::Tensor& features) {
  return collapse_(features);
}

torch::Tensor DiscriminatorImpl::layout_branch(const torch::Tensor& features) {
  auto x = layout_collapse(features);
  for (const auto& block : *layout_blocks_) x = block->as<ResBlockImpl>()->forward(x);
  return layout_out_(lrelu(x));
}

torch::Tensor DiscriminatorImpl::low_level_head(const torch::Tensor& features) {
  return low_level_(features);
}

DiscriminatorVerdict DiscriminatorImpl::discriminate_features(const torch::Tensor& features) {
  return {low_level_head(features), content_branch(features), layout_branch(features)};
}

DiscriminatorVerdict DiscriminatorImpl::discriminate(const torch::Tensor& images) {
  return discriminate_features(trunk(images));
}

}  // namespace oneshot
