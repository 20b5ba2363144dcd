// Copyright (c) 2026 The oneshot Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include <torch/torch.h>

#include "oneshot/gennet.hpp"
#include "oneshot/metrics.hpp"

namespace oneshot {

/// n images [3, H, W] from latents drawn off the "sample" stream of `seed`.
/// Runs in chunks so large n does not hold every activation at once.
std::vector<torch::Tensor> sample_images(Generator& generator, std::int64_t n, std::uint64_t seed,
                                         std::int64_t chunk = 16);

class GeneratorSource final : public ImageSource {
 public:
  explicit GeneratorSource(Generator generator) : generator_(std::move(generator)) {}
  std::vector<torch::Tensor> generate(std::int64_t n, std::uint64_t seed) override {
    return sample_images(generator_, n, seed);
  }

 private:
  Generator generator_;
};

}  // namespace oneshot
