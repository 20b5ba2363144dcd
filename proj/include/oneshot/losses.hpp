// Copyright (c) 2026 The oneshot Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include <torch/torch.h>

#include "oneshot/discnet.hpp"

namespace oneshot {

/// Scalar summary of one training step. d_total = d_content + d_layout +
/// 2 * d_low_level and g_total = g_adv - lambda * g_dr hold exactly.
struct LossReport {
  double d_content = 0.0;
  double d_layout = 0.0;
  double d_low_level = 0.0;
  double d_total = 0.0;
  double g_adv = 0.0;
  double g_dr = 0.0;
  double g_total = 0.0;

  bool operator==(const LossReport&) const = default;
};

/// E[log sigmoid(real)] + E[log(1 - sigmoid(fake))], each expectation a mean
/// over every element. Evaluated as -mean(softplus(-real)) - mean(softplus(fake)).
/// Always <= 0; the discriminator maximizes it. Throws NumericalError("bce")
/// on non-finite logits.
torch::Tensor bce_head_loss(const torch::Tensor& logits_real, const torch::Tensor& logits_fake);

struct AdversarialTerms {
  torch::Tensor content;
  torch::Tensor layout;
  torch::Tensor low_level;
  torch::Tensor total;
};

/// Per-head BCE terms and their 1:1:2 weighted sum (low-level doubled).
AdversarialTerms discriminator_loss(const DiscriminatorVerdict& real, const DiscriminatorVerdict& fake);

enum class GeneratorLossForm { kNonSaturating, kSaturating };

/// Generator's adversarial objective on fake verdicts, minimized by G, with the
/// same 1:1:2 weighting. Non-saturating: -E[log sigmoid(x)] per head.
/// Saturating: E[log(1 - sigmoid(x))] per head.
AdversarialTerms generator_adversarial_loss(const DiscriminatorVerdict& fake,
                                            GeneratorLossForm form = GeneratorLossForm::kNonSaturating);

enum class DiversityNorm {
  kMeanPerElement,  // mean |a - b| within each block
  kRawL1,           // sum |a - b| per sample, averaged over the batch
};

/// (1/L) sum_l dist(a_l, b_l) over paired generator block features.
/// Throws ValidationError on length or shape mismatch.
torch::Tensor diversity_regularization(const std::vector<torch::Tensor>& features_1,
                                       const std::vector<torch::Tensor>& features_2,
                                       DiversityNorm norm = DiversityNorm::kMeanPerElement);

/// g_adv - lambda * min(g_dr, ceiling): the generator's full objective.
torch::Tensor generator_objective(const torch::Tensor& g_adv, const torch::Tensor& g_dr, double lambda,
                                  double dr_ceiling);

/// Assembles a report from scalar values. g_dr should already be the value
/// entering the objective (i.e. clamped at the ceiling).
LossReport full_objective_step_values(double lambda, double g_adv, double g_dr, const AdversarialTerms& d_terms);
LossReport full_objective_step_values(double lambda, double g_adv, double g_dr, double d_content, double d_layout,
                                      double d_low_level);

}  // namespace oneshot
