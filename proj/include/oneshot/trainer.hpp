// Copyright (c) 2026 The oneshot Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <vector>

#include <torch/torch.h>

#include "oneshot/adam.hpp"
#include "oneshot/dataio.hpp"
#include "oneshot/discnet.hpp"
#include "oneshot/gennet.hpp"
#include "oneshot/losses.hpp"
#include "oneshot/rng.hpp"

namespace oneshot {

struct TrainingConfig {
  double learning_rate = 2e-4;
  double adam_beta1 = 0.5;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::int64_t batch_size = 5;
  double lambda_dr = 0.15;
  double dr_ceiling = 5.0;
  DiversityNorm dr_norm = DiversityNorm::kMeanPerElement;
  GeneratorLossForm generator_loss = GeneratorLossForm::kNonSaturating;
  bool augment_fakes = true;
  double ema_decay = 0.0;  // 0 disables the averaged generator

  std::int64_t total_steps = 50000;
  std::int64_t checkpoint_every = 5000;
  std::int64_t sample_every = 1000;
  std::int64_t sample_rows = 4;
  std::int64_t sample_cols = 4;
  std::uint64_t seed = 0;

  std::int64_t max_side = 192;
  AugmentationPolicy augmentation;
  GeneratorConfig generator;  // base_spatial is derived from the training resolution
  DiscriminatorConfig discriminator;

  AdamOptions adam() const { return {learning_rate, adam_beta1, adam_beta2, adam_eps}; }
  std::int64_t divisor() const { return generator.upsampling_factor(); }
  void validate() const;

  /// Smoke-scale preset: 64-side images, narrower networks, 2000 steps.
  static TrainingConfig smoke();
};

/// Everything needed to continue a run bit-for-bit.
class TrainState {
 public:
  /// Fresh state: networks initialized from the "init" sub-stream of config.seed.
  static TrainState initialize(const TrainingConfig& config, Resolution resolution);

  TrainState(TrainState&&) = default;
  TrainState& operator=(TrainState&&) = default;

  const TrainingConfig& config() const { return config_; }
  Resolution resolution() const { return resolution_; }

  Generator generator;
  Discriminator discriminator;
  std::optional<Generator> ema_generator;
  Adam generator_optimizer;
  Adam discriminator_optimizer;
  Rng data_rng;
  Rng latent_rng;
  Rng augment_rng;
  std::int64_t step = 0;

  /// Generator used for sampling: the averaged copy when enabled.
  Generator& sampling_generator() { return ema_generator ? *ema_generator : generator; }

 private:
  TrainState(const TrainingConfig& config, Resolution resolution, Generator g, Discriminator d,
             std::optional<Generator> ema);

  TrainingConfig config_;
  Resolution resolution_;
};

/// Half-steps, exposed for isolation tests. Each mutates only its own network
/// and optimizer (plus the random streams it draws from).
AdversarialTerms discriminator_step(TrainState& state, const FrameSet& fs);
std::pair<AdversarialTerms, torch::Tensor> generator_step(TrainState& state);

/// One discriminator update followed by one generator update; step += 1.
/// Throws NumericalError carrying the step and head on non-finite losses.
LossReport train_step(TrainState& state, const FrameSet& fs);

std::vector<std::uint8_t> save_checkpoint(const TrainState& state);
TrainState load_checkpoint(const std::vector<std::uint8_t>& bytes);
TrainState load_checkpoint_file(const std::filesystem::path& path);

/// Training-config text and digest recorded in a checkpoint.
struct CheckpointInfo {
  TrainingConfig config;
  std::string config_text;
  std::string config_digest;
  Resolution resolution;
  std::int64_t step = 0;
};
CheckpointInfo checkpoint_info(const TensorContainer& container);

/// Observer for train(); defaults ignore everything.
class TrainingSink {
 public:
  virtual ~TrainingSink() = default;
  virtual void on_step(std::int64_t /*step*/, const LossReport& /*report*/) {}
  virtual void on_checkpoint(std::int64_t /*step*/, const TrainState& /*state*/) {}
  virtual void on_samples(std::int64_t /*step*/, const torch::Tensor& /*grid*/) {}
};

/// Writes losses.csv, checkpoints/step_%07d.ckpt and samples/step_%07d.png
/// under a run directory. With `append`, an existing loss log is kept.
class RunDirectorySink : public TrainingSink {
 public:
  RunDirectorySink(std::filesystem::path run_dir, bool append = false);

  void on_step(std::int64_t step, const LossReport& report) override;
  void on_checkpoint(std::int64_t step, const TrainState& state) override;
  void on_samples(std::int64_t step, const torch::Tensor& grid) override;

  static constexpr const char* kLossHeader = "step,d_content,d_layout,d_low_level,d_total,g_adv,g_dr,g_total";
  static std::string format_loss_row(std::int64_t step, const LossReport& report);

 private:
  std::filesystem::path run_dir_;
  std::ofstream losses_;
};

/// Fixed preview latents (independent of the training streams) rendered as a
/// sample_rows x sample_cols mosaic.
torch::Tensor preview_grid(TrainState& state);

/// Runs train_step until state.step == config.total_steps, notifying sinks.
/// Continues from `resume` when given.
TrainState train(const TrainingConfig& config, const FrameSet& fs, const std::vector<TrainingSink*>& sinks,
                 std::optional<TrainState> resume = std::nullopt);

}  // namespace oneshot
