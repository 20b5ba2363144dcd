// Copyright (c) 2026 The oneshot Authors
// SPDX-License-Identifier: Apache-2.0

#include "oneshot/losses.hpp"

#include <cmath>

#include "oneshot/error.hpp"

namespace oneshot {
namespace {

void require_finite(const torch::Tensor& t, const char* head) {
  if (!torch::isfinite(t.detach()).all().item<bool>()) throw NumericalError(head);
}

// mean(log sigmoid(x)) computed stably.
torch::Tensor mean_log_sigmoid(const torch::Tensor& x) {
  return -torch::softplus(-x).mean();
}

// mean(log(1 - sigmoid(x))) computed stably.
torch::Tensor mean_log_one_minus_sigmoid(const torch::Tensor& x) {
  return -torch::softplus(x).mean();
}

torch::Tensor head_bce(const torch::Tensor& real, const torch::Tensor& fake, const char* head) {
  require_finite(real, head);
  require_finite(fake, head);
  return mean_log_sigmoid(real) + mean_log_one_minus_sigmoid(fake);
}

}  // namespace

torch::Tensor bce_head_loss(const torch::Tensor& logits_real, const torch::Tensor& logits_fake) {
  return head_bce(logits_real, logits_fake, "bce");
}

AdversarialTerms discriminator_loss(const DiscriminatorVerdict& real, const DiscriminatorVerdict& fake) {
  AdversarialTerms t;
  t.content = head_bce(real.content, fake.content, "d_content");
  t.layout = head_bce(real.layout, fake.layout, "d_layout");
  t.low_level = head_bce(real.low_level, fake.low_level, "d_low_level");
  t.total = t.content + t.layout + 2.0 * t.low_level;
  return t;
}

AdversarialTerms generator_adversarial_loss(const DiscriminatorVerdict& fake, GeneratorLossForm form) {
  auto term = [form](const torch::Tensor& x, const char* head) {
    require_finite(x, head);
    return form == GeneratorLossForm::kNonSaturating ? -mean_log_sigmoid(x) : mean_log_one_minus_sigmoid(x);
  };
  AdversarialTerms t;
  t.content = term(fake.content, "g_content");
  t.layout = term(fake.layout, "g_layout");
  t.low_level = term(fake.low_level, "g_low_level");
  t.total = t.content + t.layout + 2.0 * t.low_level;
  return t;
}

torch::Tensor diversity_regularization(const std::vector<torch::Tensor>& features_1,
                                       const std::vector<torch::Tensor>& features_2, DiversityNorm norm) {
  if (features_1.empty()) throw ValidationError("diversity regularization needs at least one feature block");
  if (features_1.size() != features_2.size()) {
    throw ValidationError("feature lists differ in length: " + std::to_string(features_1.size()) + " vs " +
                          std::to_string(features_2.size()));
  }
  torch::Tensor sum;
  for (std::size_t l = 0; l < features_1.size(); ++l) {
    const auto& a = features_1[l];
    const auto& b = features_2[l];
    if (a.sizes() != b.sizes()) {
      throw ValidationError("feature block " + std::to_string(l) + " shapes differ: " + c10::str(a.sizes()) +
                            " vs " + c10::str(b.sizes()));
    }
    auto diff = (a - b).abs();
    auto d = norm == DiversityNorm::kMeanPerElement ? diff.mean() : diff.sum() / static_cast<double>(a.size(0));
    sum = sum.defined() ? sum + d : d;
  }
  auto out = sum / static_cast<double>(features_1.size());
  if (!torch::isfinite(out.detach()).item<bool>()) throw NumericalError("g_dr");
  return out;
}

torch::Tensor generator_objective(const torch::Tensor& g_adv, const torch::Tensor& g_dr, double lambda,
                                  double dr_ceiling) {
  if (lambda < 0.0) throw ValidationError("lambda must be non-negative");
  return g_adv - lambda * g_dr.clamp_max(dr_ceiling);
}

LossReport full_objective_step_values(double lambda, double g_adv, double g_dr, double d_content, double d_layout,
                                      double d_low_level) {
  if (lambda < 0.0) throw ValidationError("lambda must be non-negative");
  LossReport r;
  r.d_content = d_content;
  r.d_layout = d_layout;
  r.d_low_level = d_low_level;
  r.d_total = d_content + d_layout + 2.0 * d_low_level;
  r.g_adv = g_adv;
  r.g_dr = g_dr;
  r.g_total = g_adv - lambda * g_dr;
  return r;
}

LossReport full_objective_step_values(double lambda, double g_adv, double g_dr, const AdversarialTerms& d_terms) {
  return full_objective_step_values(lambda, g_adv, g_dr, d_terms.content.item<double>(),
                                    d_terms.layout.item<double>(), d_terms.low_level.item<double>());
}

}  // namespace oneshot
