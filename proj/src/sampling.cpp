// Copyright (c) 2026 The oneshot Authors
// SPDX-License-Identifier: Apache-2.0

#include "oneshot/sampling.hpp"

#include <algorithm>

#include "oneshot/error.hpp"

namespace oneshot {

std::vector<torch::Tensor> sample_images(Generator& generator, std::int64_t n, std::uint64_t seed,
                                         std::int64_t chunk) {
  if (n < 1) throw ValidationError("number of samples must be at least 1, got " + std::to_string(n));
  torch::NoGradGuard no_grad;
  auto rng = Rng::stream(seed, "sample");
  // All latents first, so a sample's code does not depend on the chunk size.
  auto z = sample_latents(rng, n, generator->config().z_dim);
  std::vector<torch::Tensor> out;
  out.reserve(static_cast<std::size_t>(n));
  for (std::int64_t begin = 0; begin < n; begin += chunk) {
    const auto end = std::min(n, begin + chunk);
    auto images = generator->generate(z.slice(0, begin, end)).image;
    for (std::int64_t i = 0; i < images.size(0); ++i) out.push_back(images[i].contiguous());
  }
  return out;
}

}  // namespace oneshot
