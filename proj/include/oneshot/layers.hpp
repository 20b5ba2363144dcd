// Copyright (c) 2026 The oneshot Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>

#include <torch/torch.h>

#include "oneshot/container.hpp"
#include "oneshot/rng.hpp"

namespace oneshot {

inline constexpr double kLeakySlope = 0.2;

inline torch::Tensor lrelu(const torch::Tensor& x) {
  return torch::leaky_relu(x, kLeakySlope);
}

/// Fills a weight with a (semi-)orthogonal matrix over its flattened
/// [out, in * kh * kw] view, drawn from rng.
void orthogonal_init(torch::Tensor& weight, Rng& rng, double gain = 1.0);

/// Square-kernel convolution with "same" padding, orthogonal weights and zero
/// bias. With spectral normalization the kernel is divided by a power-iteration
/// estimate of its largest singular value; the estimate only changes in
/// power_iteration(), so forward() stays a pure function of the parameters.
class ConvImpl : public torch::nn::Module {
 public:
  ConvImpl(std::int64_t in, std::int64_t out, std::int64_t kernel, Rng& rng, bool spectral_norm = false,
           bool bias = true);

  torch::Tensor forward(const torch::Tensor& x);
  torch::Tensor effective_weight() const;
  void power_iteration();

  std::int64_t in_channels() const { return weight_.size(1); }
  std::int64_t out_channels() const { return weight_.size(0); }

 private:
  torch::Tensor weight_;
  torch::Tensor bias_;
  torch::Tensor u_;  // spectral-norm left singular vector estimate
  std::int64_t padding_;
  bool spectral_norm_;
};
TORCH_MODULE(Conv);

/// Runs one power iteration on every spectrally normalized Conv in a module tree.
void update_spectral_estimates(torch::nn::Module& module);

/// Appends parameters and buffers as "<prefix><name>" entries.
void export_state(const torch::nn::Module& module, const std::string& prefix, TensorContainer& out);

/// Copies "<prefix><name>" tensors into parameters and buffers. Missing names
/// or shape mismatches throw ValidationError; dtype is converted.
void import_state(torch::nn::Module& module, const std::string& prefix, const TensorContainer& in);

/// Flattened copy of all parameters (for delta/no-contamination checks).
torch::Tensor flatten_parameters(const torch::nn::Module& module);

}  // namespace oneshot
