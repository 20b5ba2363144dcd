// Copyright (c) 2026 The oneshot Authors
// SPDX-License-Identifier: Apache-2.0

#include "oneshot/rng.hpp"

#include <sstream>

#include "oneshot/error.hpp"

namespace oneshot {

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

Rng Rng::stream(std::uint64_t master_seed, std::string_view name) {
  // FNV-1a over the name, then mixed with the master seed.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : name) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return Rng(mix64(master_seed ^ mix64(h)));
}

Rng Rng::fork(std::uint64_t index) const {
  auto copy = engine_;
  return Rng(mix64(copy() ^ mix64(index + 1)));
}

double Rng::uniform() {
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  return dist(engine_);
}

double Rng::uniform(double lo, double hi) {
  std::uniform_real_distribution<double> dist(lo, hi);
  return dist(engine_);
}

std::int64_t Rng::uniform_int(std::int64_t lo, std::int64_t hi) {
  std::uniform_int_distribution<std::int64_t> dist(lo, hi);
  return dist(engine_);
}

double Rng::normal() {
  std::normal_distribution<double> dist(0.0, 1.0);
  return dist(engine_);
}

bool Rng::bernoulli(double p) {
  if (p <= 0.0) return false;
  return uniform() < p;
}

torch::Tensor Rng::normal_tensor(torch::IntArrayRef shape, torch::Dtype dtype) {
  auto out = torch::empty(shape, torch::kFloat64);
  auto* data = out.data_ptr<double>();
  std::normal_distribution<double> dist(0.0, 1.0);
  for (std::int64_t i = 0; i < out.numel(); ++i) data[i] = dist(engine_);
  return out.to(dtype);
}

std::string Rng::serialize() const {
  std::ostringstream os;
  os << engine_;
  return os.str();
}

Rng Rng::restore(const std::string& state) {
  Rng rng;
  std::istringstream is(state);
  is >> rng.engine_;
  if (is.fail()) throw CheckpointError("malformed random stream state");
  return rng;
}

}  // namespace oneshot
