// Copyright (c) 2026 The oneshot Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>
#include <torch/torch.h>

#include "oneshot/dataio.hpp"
#include "oneshot/discnet.hpp"
#include "oneshot/rng.hpp"

namespace oneshot {

/// Maps an image [3, H, W] to a spatial feature tensor [d, h_f, w_f].
/// Deterministic; output size depends only on input size.
class FeatureExtractor {
 public:
  virtual ~FeatureExtractor() = default;
  virtual std::string identifier() const = 0;
  virtual torch::Tensor map(const torch::Tensor& image) const = 0;
};

/// Distance between images with distance(x, x) = 0, symmetric, finite.
/// Split into embed + compare so pools of images are embedded once.
class PerceptualMetric {
 public:
  using Embedding = std::vector<torch::Tensor>;

  virtual ~PerceptualMetric() = default;
  virtual std::string identifier() const = 0;
  virtual Embedding embed(const torch::Tensor& image) const = 0;
  virtual double compare(const Embedding& a, const Embedding& b) const = 0;

  double distance(const torch::Tensor& a, const torch::Tensor& b) const { return compare(embed(a), embed(b)); }
};

/// Trunk of a discriminator used as a fixed feature network. The default
/// reference trunk is initialized deterministically from a seed; a weights
/// file in the container format ("trunk.<i>..." names) can replace it.
class TrunkFeatureNetwork {
 public:
  static constexpr std::uint64_t kReferenceSeed = 20210415;

  static std::shared_ptr<TrunkFeatureNetwork> reference(std::uint64_t seed = kReferenceSeed);
  static std::shared_ptr<TrunkFeatureNetwork> from_weights_file(const std::filesystem::path& path);

  /// Per-stage features, each [d_s, h_s, w_s], in float64.
  std::vector<torch::Tensor> stages(const torch::Tensor& image) const;
  const std::string& identifier() const { return id_; }
  std::int64_t num_stages() const { return net_->config().trunk_blocks; }

  static DiscriminatorConfig reference_config();

 private:
  TrunkFeatureNetwork(Discriminator net, std::string id);
  Discriminator net_;
  std::string id_;
};

/// FeatureExtractor over one stage of a TrunkFeatureNetwork.
class TrunkExtractor final : public FeatureExtractor {
 public:
  TrunkExtractor(std::shared_ptr<TrunkFeatureNetwork> net, std::int64_t stage);
  std::string identifier() const override;
  torch::Tensor map(const torch::Tensor& image) const override;

 private:
  std::shared_ptr<TrunkFeatureNetwork> net_;
  std::int64_t stage_;
};

/// LPIPS-shaped distance: per stage, unit-normalize each position's channel
/// vector, take squared differences summed over channels and averaged over
/// positions; average the stages.
class FeatureDistance final : public PerceptualMetric {
 public:
  explicit FeatureDistance(std::shared_ptr<TrunkFeatureNetwork> net);
  std::string identifier() const override;
  Embedding embed(const torch::Tensor& image) const override;
  double compare(const Embedding& a, const Embedding& b) const override;

 private:
  std::shared_ptr<TrunkFeatureNetwork> net_;
};

/// ||mu1 - mu2||^2 + tr(S1 + S2 - 2 (S1 S2)^{1/2}) in float64. The trace of the
/// square root is taken from the eigenvalues of sqrt(S1) S2 sqrt(S1), which is
/// symmetric and similar to S1 S2; negative eigenvalues are clipped at 0.
double frechet_distance(const torch::Tensor& mu1, const torch::Tensor& sigma1, const torch::Tensor& mu2,
                        const torch::Tensor& sigma2);

struct GaussianFit {
  torch::Tensor mean;        // [d]
  torch::Tensor covariance;  // [d, d], unbiased
};

/// Treats each spatial position of [d, h, w] features as one d-dim sample.
GaussianFit fit_spatial_gaussian(const torch::Tensor& features);

/// Mean Frechet distance between the real image's spatial feature Gaussian
/// and each fake's.
double sifid(const torch::Tensor& real, const std::vector<torch::Tensor>& fakes, const FeatureExtractor& extractor);

struct MsSsimOptions {
  std::int64_t window = 11;
  double sigma = 1.5;
  std::vector<double> weights{0.0448, 0.2856, 0.3001, 0.2363, 0.1333};
  double k1 = 0.01;
  double k2 = 0.03;
  double dynamic_range = 1.0;
};

/// Multi-scale SSIM of two [3, H, W] images in [-1, 1] (mapped to [0, 1]).
/// Contrast-structure terms at every scale, luminance at the coarsest;
/// channels averaged. At scales smaller than the window the window shrinks
/// to the image side with its sigma scaled proportionally.
double ms_ssim(const torch::Tensor& x, const torch::Tensor& y, const MsSsimOptions& options = {});

/// Single-scale SSIM (mean of the SSIM map over channels), same conventions.
double ssim(const torch::Tensor& x, const torch::Tensor& y, const MsSsimOptions& options = {});

using PairMeasure = std::function<double(const torch::Tensor&, const torch::Tensor&)>;

/// Mean of `measure` over all unordered pairs.
double pairwise_diversity(const std::vector<torch::Tensor>& images, const PairMeasure& measure);
double pairwise_diversity(const std::vector<torch::Tensor>& images, const PerceptualMetric& metric);

/// Mean over fakes of the minimum metric distance to a pool made of every
/// training frame plus n_aug augmentations of each. Frame f's augmentations
/// come from rng.fork(f), so growing n_aug only adds pool members.
double dist_to_train(const std::vector<torch::Tensor>& fakes, const FrameSet& fs, const AugmentationPolicy& policy,
                     const PerceptualMetric& metric, std::int64_t n_aug, const Rng& rng);

struct MetricsConfig {
  std::int64_t n_generated = 50;
  std::uint64_t seed = 1234;
  std::int64_t n_aug = 20;
  std::int64_t sifid_stage = 1;  // 0-based trunk stage used by SIFID
  std::string extractor_weights;  // empty: seeded reference trunk
  std::uint64_t extractor_seed = TrunkFeatureNetwork::kReferenceSeed;

  void validate() const;
};

struct MetricReport {
  double sifid = 0.0;
  double lpips_diversity = 0.0;
  double ms_ssim_diversity = 0.0;
  double dist_to_train = 0.0;
  std::int64_t n_generated = 0;
  std::string extractor;
  std::string perceptual_metric;

  nlohmann::json to_json() const;
  bool operator==(const MetricReport&) const = default;
};

/// Anything that can produce numbered samples deterministically.
class ImageSource {
 public:
  virtual ~ImageSource() = default;
  /// n images [3, H, W] in [-1, 1], reproducible for a given seed.
  virtual std::vector<torch::Tensor> generate(std::int64_t n, std::uint64_t seed) = 0;
};

/// Full protocol: SIFID (averaged over frames for video), pairwise feature
/// distance and MS-SSIM over the samples, and distance to the augmented
/// training set.
MetricReport evaluate(ImageSource& source, const FrameSet& fs, const AugmentationPolicy& policy,
                      const MetricsConfig& config);

}  // namespace oneshot
