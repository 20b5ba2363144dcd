// Copyright (c) 2026 The oneshot Authors
// SPDX-License-Identifier: Apache-2.0

#include "oneshot/adam.hpp"

#include <cmath>

#include "oneshot/error.hpp"

namespace oneshot {

void AdamOptions::validate() const {
  if (!(learning_rate > 0.0)) throw ValidationError("learning_rate must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0)) throw ValidationError("adam beta1 must lie in [0, 1)");
  if (!(beta2 >= 0.0 && beta2 < 1.0)) throw ValidationError("adam beta2 must lie in [0, 1)");
  if (!(eps > 0.0)) throw ValidationError("adam eps must be positive");
}

Adam::Adam(std::vector<torch::Tensor> params, AdamOptions options)
    : params_(std::move(params)), options_(options) {
  options_.validate();
  for (const auto& p : params_) {
    m_.push_back(torch::zeros_like(p, torch::MemoryFormat::Contiguous));
    v_.push_back(torch::zeros_like(p, torch::MemoryFormat::Contiguous));
  }
}

void Adam::zero_grad() {
  for (auto& p : params_) {
    if (p.grad().defined()) p.mutable_grad() = torch::Tensor();
  }
}

void Adam::step() {
  torch::NoGradGuard no_grad;
  ++step_;
  const auto t = static_cast<double>(step_);
  const double bias1 = 1.0 - std::pow(options_.beta1, t);
  const double bias2 = 1.0 - std::pow(options_.beta2, t);
  const double step_size = options_.learning_rate / bias1;
  const double inv_sqrt_bias2 = 1.0 / std::sqrt(bias2);
  for (std::size_t i = 0; i < params_.size(); ++i) {
    const auto& g = params_[i].grad();
    if (!g.defined()) continue;
    m_[i].mul_(options_.beta1).add_(g, 1.0 - options_.beta1);
    v_[i].mul_(options_.beta2).addcmul_(g, g, 1.0 - options_.beta2);
    auto denom = v_[i].sqrt().mul_(inv_sqrt_bias2).add_(options_.eps);
    params_[i].addcdiv_(m_[i], denom, -step_size);
  }
}

void Adam::export_state(const std::string& prefix, TensorContainer& out) const {
  out.meta[prefix + "step"] = std::to_string(step_);
  for (std::size_t i = 0; i < params_.size(); ++i) {
    out.tensors.emplace_back(prefix + "m." + std::to_string(i), m_[i].clone());
    out.tensors.emplace_back(prefix + "v." + std::to_string(i), v_[i].clone());
  }
}

void Adam::import_state(const std::string& prefix, const TensorContainer& in) {
  step_ = std::stoll(in.meta_at(prefix + "step"));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    for (auto* slot : {&m_, &v_}) {
      const auto name = prefix + (slot == &m_ ? "m." : "v.") + std::to_string(i);
      const auto& src = in.at(name);
      auto& dst = (*slot)[i];
      if (src.sizes() != dst.sizes()) throw CheckpointError("optimizer moment '" + name + "' has the wrong shape");
      dst.copy_(src.to(dst.scalar_type()));
    }
  }
}

}  // namespace oneshot
