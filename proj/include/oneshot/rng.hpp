// Copyright (c) 2026 The oneshot Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>

#include <torch/torch.h>

namespace oneshot {

/// Seedable random stream. The engine state is the complete stream state:
/// distributions are constructed per call, so serialize()/restore() capture
/// everything needed to continue a sequence bit-for-bit.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  /// Named sub-stream of a master seed ("data", "latent", "augment", ...).
  static Rng stream(std::uint64_t master_seed, std::string_view name);
  /// Child stream keyed by index and the current state. Does not advance *this.
  Rng fork(std::uint64_t index) const;

  double uniform();                                   // [0, 1)
  double uniform(double lo, double hi);               // [lo, hi)
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);  // inclusive
  double normal();
  bool bernoulli(double p);

  /// Tensor of i.i.d. standard normal draws, filled in row-major order.
  torch::Tensor normal_tensor(torch::IntArrayRef shape, torch::Dtype dtype = torch::kFloat32);

  std::string serialize() const;
  static Rng restore(const std::string& state);

  bool operator==(const Rng& other) const { return engine_ == other.engine_; }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

/// SplitMix64 finalizer; used to derive well-separated sub-stream seeds.
std::uint64_t mix64(std::uint64_t x);

}  // namespace oneshot
