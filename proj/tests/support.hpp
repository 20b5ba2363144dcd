// Copyright (c) 2026 The oneshot Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <unistd.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <string>

#include <torch/torch.h>

#include "oneshot/dataio.hpp"
#include "oneshot/discnet.hpp"
#include "oneshot/gennet.hpp"
#include "oneshot/image.hpp"
#include "oneshot/trainer.hpp"

namespace oneshot::testing {

class TempDir {
 public:
  TempDir() {
    std::string pattern = (std::filesystem::temp_directory_path() / "oneshot-test-XXXXXX").string();
    if (!::mkdtemp(pattern.data())) throw std::runtime_error("mkdtemp failed");
    path_ = pattern;
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

// Structured scene with a sky gradient, a sun, hills and a striped ground so
// position and texture both carry signal. Values in [-1, 1].
inline torch::Tensor synthetic_scene(std::int64_t h, std::int64_t w, double phase = 0.0) {
  auto ys = torch::linspace(0.0, 1.0, h, torch::kFloat64).view({h, 1}).expand({h, w});
  auto xs = torch::linspace(0.0, 1.0, w, torch::kFloat64).view({1, w}).expand({h, w});
  auto horizon = 0.55 + 0.08 * torch::sin(6.0 * xs + phase);
  auto ground = (ys > horizon).to(torch::kFloat64);
  auto sun = (((xs - 0.25 - 0.1 * phase).pow(2) + (ys - 0.25).pow(2)) < 0.012).to(torch::kFloat64);
  auto stripes = 0.5 + 0.5 * torch::sin(40.0 * ys + 3.0 * xs);

  auto r = (1 - ground) * (0.3 + 0.3 * ys) + ground * (0.25 + 0.2 * stripes);
  auto g = (1 - ground) * (0.5 + 0.3 * ys) + ground * (0.45 + 0.25 * stripes);
  auto b = (1 - ground) * (0.9 - 0.2 * ys) + ground * (0.15 + 0.1 * stripes);
  r = r * (1 - sun) + sun * 1.0;
  g = g * (1 - sun) + sun * 0.9;
  b = b * (1 - sun) + sun * 0.3;
  return (torch::stack({r, g, b}) * 2.0 - 1.0).clamp(-1.0, 1.0).to(torch::kFloat32).contiguous();
}

inline FrameSet single_frame(const torch::Tensor& image) {
  return FrameSet(image.unsqueeze(0), "synthetic", resolution_of(image), SourceMode::kSingleImage);
}

// Tiny networks for gradient checks: 16x16 images, at most 8 channels.
inline GeneratorConfig tiny_generator() {
  GeneratorConfig c;
  c.z_dim = 4;
  c.base_spatial = {4, 4};
  c.num_up_blocks = 2;
  c.base_channels = 8;
  return c;
}

inline DiscriminatorConfig tiny_discriminator() {
  DiscriminatorConfig c;
  c.trunk_blocks = 2;
  c.branch_blocks = 1;
  c.trunk_channels = 8;
  c.branch_channels = 4;
  return c;
}

// A fast training config at 16x16 for loop-level tests.
inline TrainingConfig tiny_training(std::uint64_t seed = 7) {
  TrainingConfig c;
  c.seed = seed;
  c.max_side = 16;
  c.batch_size = 2;
  c.total_steps = 10;
  c.checkpoint_every = 5;
  c.sample_every = 5;
  c.sample_rows = 2;
  c.sample_cols = 2;
  c.generator = tiny_generator();
  c.discriminator = tiny_discriminator();
  return c;
}

// Central differences over every element of `param` (or a strided subset),
// compared against the analytic gradient. Returns the worst relative error
// |a - n| / max(|a| + |n|, floor).
inline double max_gradient_error(const std::function<torch::Tensor()>& loss, torch::Tensor param,
                                 std::int64_t max_checks = 40, double eps = 1e-6, double floor = 1e-7) {
  if (param.grad().defined()) param.mutable_grad().zero_();
  auto l = loss();
  auto grads = torch::autograd::grad({l}, {param}, {}, false, false, true);
  auto analytic = grads[0].defined() ? grads[0].detach().flatten() : torch::zeros({param.numel()}, param.options());
  auto flat = param.detach().view(-1);
  const auto n = flat.numel();
  const auto stride = std::max<std::int64_t>(1, n / max_checks);
  double worst = 0.0;
  for (std::int64_t i = 0; i < n; i += stride) {
    const double original = flat[i].item<double>();
    double up = 0.0;
    double down = 0.0;
    {
      torch::NoGradGuard g;
      flat[i].fill_(original + eps);
      up = loss().item<double>();
      flat[i].fill_(original - eps);
      down = loss().item<double>();
      flat[i].fill_(original);
    }
    const double numeric = (up - down) / (2.0 * eps);
    const double a = analytic[i].item<double>();
    worst = std::max(worst, std::abs(a - numeric) / std::max(std::abs(a) + std::abs(numeric), floor));
  }
  return worst;
}

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

}  // namespace oneshot::testing
