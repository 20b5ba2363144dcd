// Copyright (c) 2026 The oneshot Authors
// SPDX-License-Identifier: Apache-2.0

#include "oneshot/layers.hpp"

#include <vector>

#include "oneshot/error.hpp"

namespace oneshot {

void orthogonal_init(torch::Tensor& weight, Rng& rng, double gain) {
  torch::NoGradGuard no_grad;
  const auto rows = weight.size(0);
  const auto cols = weight.numel() / rows;
  auto flat = rng.normal_tensor({rows, cols}, torch::kFloat64);
  if (rows < cols) flat = flat.t();
  auto [q, r] = torch::linalg_qr(flat);
  q = q * torch::sign(torch::diagonal(r)).unsqueeze(0);
  if (rows < cols) q = q.t();
  weight.copy_(q.reshape(weight.sizes()).mul(gain));
}

ConvImpl::ConvImpl(std::int64_t in, std::int64_t out, std::int64_t kernel, Rng& rng, bool spectral_norm, bool bias)
    : padding_(kernel / 2), spectral_norm_(spectral_norm) {
  weight_ = register_parameter("weight", torch::empty({out, in, kernel, kernel}));
  if (bias) bias_ = register_parameter("bias", torch::zeros({out}));
  orthogonal_init(weight_, rng);
  if (spectral_norm_) {
    auto u = rng.normal_tensor({out}, torch::kFloat32);
    u_ = register_buffer("sn_u", u / u.norm().clamp_min(1e-12));
  }
}

torch::Tensor ConvImpl::effective_weight() const {
  if (!spectral_norm_) return weight_;
  auto w = weight_.view({weight_.size(0), -1});
  auto u = u_.to(w.scalar_type());
  auto v = torch::mv(w.t().detach(), u);
  v = v / v.norm().clamp_min(1e-12);
  auto sigma = torch::dot(u, torch::mv(w, v));
  return weight_ / sigma;
}

torch::Tensor ConvImpl::forward(const torch::Tensor& x) {
  return torch::conv2d(x, effective_weight(), bias_, /*stride=*/1, /*padding=*/padding_);
}

void ConvImpl::power_iteration() {
  if (!spectral_norm_) return;
  torch::NoGradGuard no_grad;
  auto w = weight_.view({weight_.size(0), -1});
  auto v = torch::mv(w.t(), u_.to(w.scalar_type()));
  v = v / v.norm().clamp_min(1e-12);
  auto u = torch::mv(w, v);
  u_.copy_(u / u.norm().clamp_min(1e-12));
}

void update_spectral_estimates(torch::nn::Module& module) {
  for (auto& m : module.modules()) {
    if (auto* conv = m->as<ConvImpl>()) conv->power_iteration();
  }
}

void export_state(const torch::nn::Module& module, const std::string& prefix, TensorContainer& out) {
  for (const auto& p : module.named_parameters()) out.tensors.emplace_back(prefix + p.key(), p.value().detach().clone());
  for (const auto& b : module.named_buffers()) out.tensors.emplace_back(prefix + b.key(), b.value().detach().clone());
}

void import_state(torch::nn::Module& module, const std::string& prefix, const TensorContainer& in) {
  torch::NoGradGuard no_grad;
  auto assign = [&](const std::string& name, torch::Tensor& dst) {
    const auto* src = in.find(prefix + name);
    if (!src) throw ValidationError("missing tensor '" + prefix + name + "'");
    if (src->sizes() != dst.sizes()) {
      throw ValidationError("shape mismatch for '" + prefix + name + "': expected " + c10::str(dst.sizes()) +
                            ", got " + c10::str(src->sizes()));
    }
    dst.copy_(src->to(dst.scalar_type()));
  };
  for (auto& p : module.named_parameters()) assign(p.key(), p.value());
  for (auto& b : module.named_buffers()) assign(b.key(), b.value());
}

torch::Tensor flatten_parameters(const torch::nn::Module& module) {
  std::vector<torch::Tensor> flat;
  for (const auto& p : module.parameters()) flat.push_back(p.detach().reshape({-1}).to(torch::kFloat64));
  return torch::cat(flat).clone();
}

}  // namespace oneshot
