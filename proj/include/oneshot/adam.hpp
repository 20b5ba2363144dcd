// Copyright (c) 2026 The oneshot Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <torch/torch.h>

#include "oneshot/container.hpp"

namespace oneshot {

struct AdamOptions {
  double learning_rate = 2e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  double eps = 1e-8;

  void validate() const;
};

/// ADAM with bias-corrected first/second moments. Parameters without a
/// gradient are skipped for that step but the shared step counter advances.
class Adam {
 public:
  Adam(std::vector<torch::Tensor> params, AdamOptions options);

  void zero_grad();
  void step();

  std::int64_t steps() const { return step_; }
  const AdamOptions& options() const { return options_; }

  /// Moments as "<prefix>m.<i>" / "<prefix>v.<i>" and the counter as meta "<prefix>step".
  void export_state(const std::string& prefix, TensorContainer& out) const;
  void import_state(const std::string& prefix, const TensorContainer& in);

 private:
  std::vector<torch::Tensor> params_;
  std::vector<torch::Tensor> m_;
  std::vector<torch::Tensor> v_;
  AdamOptions options_;
  std::int64_t step_ = 0;
};

}  // namespace oneshot
