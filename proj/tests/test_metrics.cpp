// Copyright (c) 2026 The oneshot Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>

#include "oneshot/container.hpp"
#include "oneshot/error.hpp"
#include "oneshot/layers.hpp"
#include "oneshot/metrics.hpp"
#include "support.hpp"

using namespace oneshot;
using oneshot::testing::synthetic_scene;

namespace {

torch::Tensor d1(double v) { return torch::tensor({v}, torch::kFloat64); }
torch::Tensor m1(double v) { return torch::tensor({v}, torch::kFloat64).view({1, 1}); }

torch::Tensor random_orthogonal(std::int64_t d, Rng& rng) {
  return std::get<0>(torch::linalg_qr(rng.normal_tensor({d, d}, torch::kFloat64)));
}

// Independent SSIM pieces built from torch convolutions (valid padding),
// following the textbook definition rather than the library's loops.
torch::Tensor gaussian_kernel(std::int64_t size, double sigma) {
  auto x = torch::arange(size, torch::kFloat64) - (size - 1) / 2.0;
  auto g = torch::exp(-x.pow(2) / (2 * sigma * sigma));
  g = g / g.sum();
  return torch::outer(g, g).view({1, 1, size, size});
}

std::pair<double, double> oracle_ssim_cs(const torch::Tensor& x, const torch::Tensor& y, std::int64_t win, double sigma) {
  auto k = gaussian_kernel(win, sigma);
  auto f = [&](const torch::Tensor& t) { return torch::conv2d(t, k); };
  const double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
  auto mx = f(x), my = f(y);
  auto vx = f(x * x) - mx * mx, vy = f(y * y) - my * my, cxy = f(x * y) - mx * my;
  auto cs = (2 * cxy + c2) / (vx + vy + c2);
  auto l = (2 * mx * my + c1) / (mx * mx + my * my + c1);
  return {(l * cs).mean().item<double>(), cs.mean().item<double>()};
}

// Per-channel 5-scale MS-SSIM with window shrinking, averaged over channels.
double oracle_ms_ssim(const torch::Tensor& a, const torch::Tensor& b) {
  const double w[] = {0.0448, 0.2856, 0.3001, 0.2363, 0.1333};
  double total = 0.0;
  for (int c = 0; c < 3; ++c) {
    auto x = ((a[c].to(torch::kFloat64) + 1) / 2).view({1, 1, a.size(1), a.size(2)});
    auto y = ((b[c].to(torch::kFloat64) + 1) / 2).view({1, 1, a.size(1), a.size(2)});
    double v = 1.0;
    for (int s = 0; s < 5; ++s) {
      const auto win = std::min<std::int64_t>({11, x.size(2), x.size(3)});
      const double sigma = 1.5 * static_cast<double>(win) / 11.0;
      auto [ssim, cs] = oracle_ssim_cs(x, y, win, sigma);
      if (s < 4) {
        v *= std::pow(std::max(cs, 0.0), w[s]);
        x = torch::avg_pool2d(x, 2);
        y = torch::avg_pool2d(y, 2);
      } else {
        v *= std::pow(std::max(ssim, 0.0), w[s]);
      }
    }
    total += v;
  }
  return total / 3.0;
}

torch::Tensor noisy(const torch::Tensor& x, double sigma, std::uint64_t seed) {
  Rng rng(seed);
  return (x + sigma * rng.normal_tensor(x.sizes())).clamp(-1, 1);
}

class ReplaySource : public ImageSource {
 public:
  explicit ReplaySource(const FrameSet& fs) : fs_(fs) {}
  std::vector<torch::Tensor> generate(std::int64_t n, std::uint64_t) override {
    std::vector<torch::Tensor> out;
    for (std::int64_t i = 0; i < n; ++i) out.push_back(fs_.frame(i % fs_.size()));
    return out;
  }

 private:
  const FrameSet& fs_;
};

class NoiseSource : public ImageSource {
 public:
  explicit NoiseSource(Resolution r) : r_(r) {}
  std::vector<torch::Tensor> generate(std::int64_t n, std::uint64_t seed) override {
    Rng rng(seed);
    std::vector<torch::Tensor> out;
    for (std::int64_t i = 0; i < n; ++i)
      out.push_back((rng.normal_tensor({3, r_.height, r_.width}) * 0.5).clamp(-1, 1));
    return out;
  }

 private:
  Resolution r_;
};

}  // namespace

TEST(Frechet, AnalyticCases) {
  EXPECT_NEAR(frechet_distance(d1(0), m1(1), d1(1), m1(1)), 1.0, 1e-12);
  EXPECT_NEAR(frechet_distance(d1(0), m1(4), d1(0), m1(1)), 1.0, 1e-12);
  EXPECT_NEAR(frechet_distance(d1(3), m1(2), d1(3), m1(2)), 0.0, 1e-12);
}

TEST(Frechet, CommutingCovariancesMatchClosedForm) {
  // Shared eigenbasis: trace term reduces to sum (sqrt(a_i) - sqrt(b_i))^2.
  Rng rng(1);
  for (int t = 0; t < 10; ++t) {
    const std::int64_t d = 6;
    auto q = random_orthogonal(d, rng);
    auto a = rng.normal_tensor({d}, torch::kFloat64).abs() + 0.1;
    auto b = rng.normal_tensor({d}, torch::kFloat64).abs() + 0.1;
    auto mu1 = rng.normal_tensor({d}, torch::kFloat64);
    auto mu2 = rng.normal_tensor({d}, torch::kFloat64);
    auto s1 = q.matmul(torch::diag(a)).matmul(q.t());
    auto s2 = q.matmul(torch::diag(b)).matmul(q.t());
    const double expect = (mu1 - mu2).pow(2).sum().item<double>() + (a.sqrt() - b.sqrt()).pow(2).sum().item<double>();
    ASSERT_NEAR(frechet_distance(mu1, s1, mu2, s2), expect, 1e-9);
  }
}

TEST(Frechet, PropertiesOnRandomGaussians) {
  Rng rng(2);
  for (int t = 0; t < 20; ++t) {
    const std::int64_t d = 8;
    auto x = rng.normal_tensor({d, 3}, torch::kFloat64);  // rank-deficient on purpose
    auto y = rng.normal_tensor({d, d}, torch::kFloat64);
    auto s1 = x.matmul(x.t());
    auto s2 = y.matmul(y.t());
    auto mu1 = rng.normal_tensor({d}, torch::kFloat64);
    auto mu2 = rng.normal_tensor({d}, torch::kFloat64);
    const double ab = frechet_distance(mu1, s1, mu2, s2);
    const double ba = frechet_distance(mu2, s2, mu1, s1);
    ASSERT_GE(ab, 0.0);
    ASSERT_NEAR(ab, ba, 1e-9 * std::max(1.0, ab));
    ASSERT_NEAR(frechet_distance(mu1, s1, mu1, s1), 0.0, 1e-6);
  }
}

TEST(Frechet, DimensionMismatch) {
  EXPECT_THROW(frechet_distance(d1(0), m1(1), torch::zeros({2}, torch::kFloat64), torch::eye(2, torch::kFloat64)),
               ValidationError);
  EXPECT_THROW(frechet_distance(d1(0), torch::eye(2, torch::kFloat64), d1(0), m1(1)), ValidationError);
}

TEST(SpatialGaussian, MatchesExplicitLoops) {
  Rng rng(3);
  auto f = rng.normal_tensor({3, 4, 5}, torch::kFloat64);
  auto fit = fit_spatial_gaussian(f);
  const int n = 20;
  for (int i = 0; i < 3; ++i) {
    double mi = 0;
    for (int p = 0; p < n; ++p) mi += f[i].view(-1)[p].item<double>() / n;
    EXPECT_NEAR(fit.mean[i].item<double>(), mi, 1e-12);
    for (int j = 0; j < 3; ++j) {
      double mj = 0;
      for (int p = 0; p < n; ++p) mj += f[j].view(-1)[p].item<double>() / n;
      double c = 0;
      for (int p = 0; p < n; ++p) c += (f[i].view(-1)[p].item<double>() - mi) * (f[j].view(-1)[p].item<double>() - mj);
      EXPECT_NEAR(fit.covariance[i][j].item<double>(), c / (n - 1), 1e-12);
    }
  }
  EXPECT_THROW(fit_spatial_gaussian(torch::zeros({3, 1, 1})), ValidationError);
}

class MetricsWithReference : public ::testing::Test {
 protected:
  static void SetUpTestSuite() { net_ = TrunkFeatureNetwork::reference(); }
  static void TearDownTestSuite() { net_.reset(); }
  static std::shared_ptr<TrunkFeatureNetwork> net_;
};
std::shared_ptr<TrunkFeatureNetwork> MetricsWithReference::net_;

TEST_F(MetricsWithReference, SifidZeroOnRealAndOracleOnConstantFake) {
  TrunkExtractor ex(net_, 1);
  auto real = synthetic_scene(64, 64);
  EXPECT_NEAR(sifid(real, {real}, ex), 0.0, 1e-6);
  EXPECT_NEAR(sifid(real, {real, real}, ex), 0.0, 1e-6);

  auto flat = torch::full({3, 64, 64}, 0.2f);
  auto fr = ex.map(real), ff = ex.map(flat);
  auto gr = fit_spatial_gaussian(fr), gf = fit_spatial_gaussian(ff);
  const double expect = frechet_distance(gr.mean, gr.covariance, gf.mean, gf.covariance);
  EXPECT_NEAR(sifid(real, {flat}, ex), expect, 1e-9);
  EXPECT_GT(expect, 0.0);
  EXPECT_NEAR(sifid(real, {real, flat}, ex), expect / 2.0, 1e-9);
  EXPECT_THROW(sifid(real, {}, ex), ValidationError);
}

TEST_F(MetricsWithReference, ExtractorIsDeterministicAndShaped) {
  TrunkExtractor ex(net_, 1);
  auto x = synthetic_scene(32, 48);
  auto a = ex.map(x);
  EXPECT_TRUE(torch::equal(a, ex.map(x)));
  EXPECT_EQ(a.dim(), 3);
  EXPECT_EQ(a.size(1), 8);
  EXPECT_EQ(a.size(2), 12);
  EXPECT_THROW(TrunkExtractor(net_, 3), ValidationError);
  EXPECT_NE(ex.identifier().find("stage1"), std::string::npos);
  // Reference trunk is a pure function of the seed.
  EXPECT_TRUE(torch::equal(TrunkExtractor(TrunkFeatureNetwork::reference(), 1).map(x), a));
}

TEST_F(MetricsWithReference, WeightsFileReproducesTrunk) {
  oneshot::testing::TempDir dir;
  const std::uint64_t seed = 77;
  auto rng = Rng::stream(seed, "extractor");
  Discriminator d(TrunkFeatureNetwork::reference_config(), rng);
  TensorContainer c;
  export_state(*d, "", c);
  write_container(dir / "trunk.bin", c);
  auto loaded = TrunkFeatureNetwork::from_weights_file(dir / "trunk.bin");
  auto x = synthetic_scene(32, 32);
  auto a = loaded->stages(x), b = TrunkFeatureNetwork::reference(seed)->stages(x);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_TRUE(torch::allclose(a[i], b[i], 1e-6, 1e-6));
  EXPECT_NE(loaded->identifier().find("trunk.bin"), std::string::npos);
}

TEST_F(MetricsWithReference, FeatureDistanceIsAMetricShape) {
  FeatureDistance m(net_);
  auto x = synthetic_scene(32, 32);
  auto y = synthetic_scene(32, 32, 1.0);
  EXPECT_EQ(m.distance(x, x), 0.0);
  EXPECT_EQ(m.distance(x, y), m.distance(y, x));
  EXPECT_GT(m.distance(x, y), 0.0);
  EXPECT_TRUE(std::isfinite(m.distance(x, -x)));
}

TEST(MsSsim, MatchesIndependentImplementation) {
  Rng rng(4);
  for (int t = 0; t < 5; ++t) {
    auto x = synthetic_scene(96, 96, 0.3 * t);
    auto y = noisy(x, 0.05 + 0.1 * t, 100 + t);
    ASSERT_NEAR(ms_ssim(x, y), oracle_ms_ssim(x, y), 1e-10);
    auto [s, cs] = oracle_ssim_cs(((x[0].to(torch::kFloat64) + 1) / 2).view({1, 1, 96, 96}),
                                  ((y[0].to(torch::kFloat64) + 1) / 2).view({1, 1, 96, 96}), 11, 1.5);
    (void)cs;
    MsSsimOptions one_channel;
    ASSERT_NEAR(ssim(x.narrow(0, 0, 1), y.narrow(0, 0, 1), one_channel), s, 1e-10);
  }
}

TEST(MsSsim, IdentitySymmetryRange) {
  Rng rng(5);
  for (int t = 0; t < 20; ++t) {
    auto x = (rng.normal_tensor({3, 96, 96}) * 0.5).clamp(-1, 1);
    auto y = (rng.normal_tensor({3, 96, 96}) * 0.5).clamp(-1, 1);
    ASSERT_NEAR(ms_ssim(x, x), 1.0, 1e-6);
    const double xy = ms_ssim(x, y);
    ASSERT_NEAR(xy, ms_ssim(y, x), 1e-9);
    ASSERT_GE(xy, 0.0);
    ASSERT_LE(xy, 1.0);
  }
}

TEST(MsSsim, DecreasesWithNoise) {
  auto gray = torch::zeros({3, 64, 64});
  double prev = 1.0;
  for (double s : {0.02, 0.05, 0.1, 0.2}) {
    const double v = ms_ssim(gray, noisy(gray, s, 9));
    const double single = ssim(gray, noisy(gray, s, 9));
    EXPECT_GT(v, 0.0);
    EXPECT_LT(v, prev);
    EXPECT_LT(single, 1.0);
    prev = v;
  }
}

TEST(MsSsim, Preconditions) {
  EXPECT_THROW(ms_ssim(torch::zeros({3, 8, 8}), torch::zeros({3, 8, 9})), ValidationError);
  EXPECT_THROW(ms_ssim(torch::zeros({3, 8, 8}), torch::zeros({3, 8, 8})), ValidationError);
  EXPECT_NO_THROW(ms_ssim(torch::zeros({3, 16, 16}), torch::zeros({3, 16, 16})));
}

TEST(PairwiseDiversity, MeanOverPairs) {
  std::vector<torch::Tensor> imgs{torch::tensor(0.0), torch::tensor(1.0), torch::tensor(2.0)};
  // Pair distances 0.1 (0,1), 0.2 (0,2), 0.3 (1,2).
  auto measure = [](const torch::Tensor& a, const torch::Tensor& b) {
    const int i = a.item<int>(), j = b.item<int>();
    return (i == 0 && j == 1) ? 0.1 : (i == 0 && j == 2) ? 0.2 : 0.3;
  };
  EXPECT_NEAR(pairwise_diversity(imgs, measure), 0.2, 1e-15);
  EXPECT_THROW(pairwise_diversity(std::vector<torch::Tensor>{imgs[0]}, measure), ValidationError);
}

TEST_F(MetricsWithReference, IdenticalImagesDiversity) {
  auto x = synthetic_scene(32, 32);
  std::vector<torch::Tensor> same{x, x, x, x};
  EXPECT_EQ(pairwise_diversity(same, FeatureDistance(net_)), 0.0);
  EXPECT_EQ(pairwise_diversity(same, [](const torch::Tensor& a, const torch::Tensor& b) { return ms_ssim(a, b); }), 1.0);
}

TEST_F(MetricsWithReference, DistToTrainPoolBehaviour) {
  FeatureDistance m(net_);
  std::vector<torch::Tensor> frames{synthetic_scene(32, 32, 0.0), synthetic_scene(32, 32, 0.7)};
  FrameSet fs(torch::stack(frames), "v", {32, 32}, SourceMode::kSingleVideo);
  AugmentationPolicy policy;
  policy.apply_prob = 0.9;
  const Rng rng(5);

  EXPECT_EQ(dist_to_train(frames, fs, policy, m, 3, rng), 0.0);

  // A fake equal to a pooled augmentation contributes zero.
  auto child = rng.fork(1);
  auto first = augment(frames[1], policy, child);
  auto second = augment(frames[1], policy, child);
  EXPECT_EQ(dist_to_train({second.image}, fs, policy, m, 2, rng), 0.0);

  Rng nr(6);
  std::vector<torch::Tensor> fakes;
  for (int i = 0; i < 3; ++i) fakes.push_back(noisy(frames[0], 0.3, 50 + i));
  double prev = 1e300;
  for (std::int64_t n_aug : {0, 1, 4, 10}) {
    const double v = dist_to_train(fakes, fs, policy, m, n_aug, rng);
    EXPECT_LE(v, prev);
    prev = v;
  }
}

TEST_F(MetricsWithReference, EvaluateSeparatesReplayFromNoise) {
  std::vector<torch::Tensor> frames;
  for (int i = 0; i < 3; ++i) frames.push_back(synthetic_scene(32, 32, 0.4 * i));
  FrameSet fs(torch::stack(frames), "v", {32, 32}, SourceMode::kSingleVideo);
  MetricsConfig cfg;
  cfg.n_generated = 6;
  cfg.n_aug = 2;
  ReplaySource replay(fs);
  NoiseSource noise({32, 32});
  auto r = evaluate(replay, fs, AugmentationPolicy{}, cfg);
  auto n = evaluate(noise, fs, AugmentationPolicy{}, cfg);
  EXPECT_LT(r.dist_to_train, 1e-3);
  EXPECT_GT(n.dist_to_train, 10 * std::max(r.dist_to_train, 1e-3));
  for (const auto& rep : {r, n}) {
    EXPECT_TRUE(std::isfinite(rep.sifid) && rep.sifid >= 0);
    EXPECT_TRUE(std::isfinite(rep.lpips_diversity) && rep.lpips_diversity >= 0);
    EXPECT_GE(rep.ms_ssim_diversity, 0.0);
    EXPECT_LE(rep.ms_ssim_diversity, 1.0);
    EXPECT_EQ(rep.n_generated, 6);
  }
  EXPECT_EQ(evaluate(noise, fs, AugmentationPolicy{}, cfg), n);
  auto j = n.to_json();
  for (const char* k : {"sifid", "lpips_diversity", "ms_ssim_diversity", "dist_to_train", "n_generated", "extractor",
                        "perceptual_metric"})
    EXPECT_TRUE(j.contains(k)) << k;
}

TEST_F(MetricsWithReference, EvaluateRejectsWrongResolution) {
  auto fs = oneshot::testing::single_frame(synthetic_scene(32, 32));
  NoiseSource noise({16, 16});
  MetricsConfig cfg;
  cfg.n_generated = 2;
  EXPECT_THROW(evaluate(noise, fs, AugmentationPolicy{}, cfg), ValidationError);
  cfg.n_generated = 1;
  EXPECT_THROW(cfg.validate(), ValidationError);
}
