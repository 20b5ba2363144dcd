// Copyright (c) 2026 The oneshot Authors
// SPDX-License-Identifier: Apache-2.0

#include "oneshot/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "oneshot/container.hpp"
#include "oneshot/error.hpp"
#include "oneshot/layers.hpp"

namespace oneshot {

DiscriminatorConfig TrunkFeatureNetwork::reference_config() {
  DiscriminatorConfig c;
  c.trunk_blocks = 3;
  c.trunk_channels = 64;
  c.branch_blocks = 1;
  c.branch_channels = 1;
  return c;
}

TrunkFeatureNetwork::TrunkFeatureNetwork(Discriminator net, std::string id) : net_(std::move(net)), id_(std::move(id)) {
  net_->to(torch::kFloat64);
  net_->eval();
}

std::shared_ptr<TrunkFeatureNetwork> TrunkFeatureNetwork::reference(std::uint64_t seed) {
  auto rng = Rng::stream(seed, "extractor");
  Discriminator net(reference_config(), rng);
  auto c = reference_config();
  std::string id = "disc-trunk-ref(seed=" + std::to_string(seed) + ",blocks=" + std::to_string(c.trunk_blocks) +
                   ",channels=" + std::to_string(c.trunk_channels) + ")";
  return std::shared_ptr<TrunkFeatureNetwork>(new TrunkFeatureNetwork(std::move(net), std::move(id)));
}

std::shared_ptr<TrunkFeatureNetwork> TrunkFeatureNetwork::from_weights_file(const std::filesystem::path& path) {
  auto c = read_container(path);
  auto config = reference_config();
  if (auto it = c.meta.find("trunk_blocks"); it != c.meta.end()) config.trunk_blocks = std::stoll(it->second);
  if (auto it = c.meta.find("trunk_channels"); it != c.meta.end()) config.trunk_channels = std::stoll(it->second);
  Rng rng(0);
  Discriminator net(config, rng);
  for (auto& child : net->named_children()) {
    if (child.key() == "trunk") import_state(*child.value(), "trunk.", c);
  }
  std::string id = "disc-trunk-file(" + path.filename().string() +
                   (c.config_digest.empty() ? "" : "," + c.config_digest) + ")";
  return std::shared_ptr<TrunkFeatureNetwork>(new TrunkFeatureNetwork(std::move(net), std::move(id)));
}

std::vector<torch::Tensor> TrunkFeatureNetwork::stages(const torch::Tensor& image) const {
  torch::NoGradGuard no_grad;
  auto batch = image.detach().to(torch::kFloat64).unsqueeze(0);
  auto net = net_;
  auto out = net->trunk_stages(batch);
  for (auto& s : out) s = s.squeeze(0);
  return out;
}

TrunkExtractor::TrunkExtractor(std::shared_ptr<TrunkFeatureNetwork> net, std::int64_t stage)
    : net_(std::move(net)), stage_(stage) {
  if (stage_ < 0 || stage_ >= net_->num_stages())
    throw ValidationError("extractor stage " + std::to_string(stage_) + " out of range [0, " +
                          std::to_string(net_->num_stages()) + ")");
}

std::string TrunkExtractor::identifier() const {
  return net_->identifier() + "/stage" + std::to_string(stage_);
}

torch::Tensor TrunkExtractor::map(const torch::Tensor& image) const {
  return net_->stages(image)[static_cast<std::size_t>(stage_)];
}

FeatureDistance::FeatureDistance(std::shared_ptr<TrunkFeatureNetwork> net) : net_(std::move(net)) {}

std::string FeatureDistance::identifier() const {
  return "feature-distance(" + net_->identifier() + ")";
}

PerceptualMetric::Embedding FeatureDistance::embed(const torch::Tensor& image) const {
  Embedding out;
  for (auto& f : net_->stages(image)) {
    auto norm = f.pow(2).sum(0, /*keepdim=*/true).sqrt();
    out.push_back(f / (norm + 1e-10));
  }
  return out;
}

double FeatureDistance::compare(const Embedding& a, const Embedding& b) const {
  if (a.size() != b.size()) throw ValidationError("embeddings have different stage counts");
  double total = 0.0;
  for (std::size_t s = 0; s < a.size(); ++s) {
    if (a[s].sizes() != b[s].sizes()) throw ValidationError("embeddings have different shapes (image sizes differ?)");
    total += (a[s] - b[s]).pow(2).sum(0).mean().item<double>();
  }
  return total / static_cast<double>(a.size());
}

namespace {

// tr sqrt(A^1/2 B A^1/2) for symmetric PSD inputs. Eigenvalues of A within
// round-off of zero are treated as zero.
double trace_sqrt_product(const torch::Tensor& a, const torch::Tensor& b) {
  auto [evals, evecs] = torch::linalg_eigh(a);
  const double cutoff = 1e-9 * std::max(evals.abs().max().item<double>(), 0.0);
  evals = torch::where(evals > cutoff, evals, torch::zeros_like(evals));
  auto root = evecs.matmul(torch::diag(evals.sqrt())).matmul(evecs.t());
  auto product = root.matmul(b).matmul(root);
  product = 0.5 * (product + product.t());
  return torch::linalg_eigvalsh(product).clamp_min(0.0).sqrt().sum().item<double>();
}

}  // namespace

double frechet_distance(const torch::Tensor& mu1, const torch::Tensor& sigma1, const torch::Tensor& mu2,
                        const torch::Tensor& sigma2) {
  if (mu1.dim() != 1 || mu2.dim() != 1 || mu1.size(0) != mu2.size(0))
    throw ValidationError("frechet_distance: mean vectors must be 1-D with equal length");
  const auto d = mu1.size(0);
  for (const auto* s : {&sigma1, &sigma2}) {
    if (s->dim() != 2 || s->size(0) != d || s->size(1) != d)
      throw ValidationError("frechet_distance: covariances must be " + std::to_string(d) + "x" + std::to_string(d));
  }
  auto m1 = mu1.to(torch::kFloat64);
  auto m2 = mu2.to(torch::kFloat64);
  auto s1 = sigma1.to(torch::kFloat64);
  auto s2 = sigma2.to(torch::kFloat64);
  s1 = 0.5 * (s1 + s1.t());
  s2 = 0.5 * (s2 + s2.t());

  auto diff = m1 - m2;
  const double mean_term = diff.dot(diff).item<double>();

  // Averaging both orderings makes the result exactly symmetric.
  const double trace_root = 0.5 * (trace_sqrt_product(s1, s2) + trace_sqrt_product(s2, s1));

  const double fd = mean_term + s1.trace().item<double>() + s2.trace().item<double>() - 2.0 * trace_root;
  return std::max(fd, 0.0);
}

GaussianFit fit_spatial_gaussian(const torch::Tensor& features) {
  if (features.dim() != 3) throw ValidationError("expected [d, h, w] features");
  const auto d = features.size(0);
  const auto n = features.size(1) * features.size(2);
  if (n < 2) throw ValidationError("feature map needs at least 2 spatial positions for a covariance");
  auto samples = features.to(torch::kFloat64).reshape({d, n}).t();
  auto mean = samples.mean(0);
  auto centered = samples - mean;
  return {mean, centered.t().matmul(centered) / static_cast<double>(n - 1)};
}

double sifid(const torch::Tensor& real, const std::vector<torch::Tensor>& fakes, const FeatureExtractor& extractor) {
  if (fakes.empty()) throw ValidationError("sifid needs at least one generated image");
  auto ref = fit_spatial_gaussian(extractor.map(real));
  double total = 0.0;
  for (const auto& fake : fakes) {
    auto fit = fit_spatial_gaussian(extractor.map(fake));
    total += frechet_distance(ref.mean, ref.covariance, fit.mean, fit.covariance);
  }
  return total / static_cast<double>(fakes.size());
}

namespace {

// Row-major single-channel plane in float64.
struct Plane {
  std::int64_t h = 0;
  std::int64_t w = 0;
  std::vector<double> v;

  double at(std::int64_t y, std::int64_t x) const { return v[static_cast<std::size_t>(y * w + x)]; }
};

std::vector<Plane> to_planes(const torch::Tensor& image) {
  auto x = image.detach().to(torch::kFloat64).add(1.0).mul(0.5).contiguous();
  std::vector<Plane> planes;
  for (std::int64_t c = 0; c < x.size(0); ++c) {
    Plane p{x.size(1), x.size(2), {}};
    auto ch = x[c].contiguous();
    const auto* data = ch.data_ptr<double>();
    p.v.assign(data, data + p.h * p.w);
    planes.push_back(std::move(p));
  }
  return planes;
}

Plane downsample(const Plane& p) {
  Plane out{p.h / 2, p.w / 2, {}};
  out.v.resize(static_cast<std::size_t>(out.h * out.w));
  for (std::int64_t y = 0; y < out.h; ++y)
    for (std::int64_t x = 0; x < out.w; ++x)
      out.v[static_cast<std::size_t>(y * out.w + x)] =
          0.25 * (p.at(2 * y, 2 * x) + p.at(2 * y, 2 * x + 1) + p.at(2 * y + 1, 2 * x) + p.at(2 * y + 1, 2 * x + 1));
  return out;
}

std::vector<double> gaussian_window(std::int64_t size, double sigma) {
  std::vector<double> g(static_cast<std::size_t>(size));
  const double center = 0.5 * static_cast<double>(size - 1);
  double sum = 0.0;
  for (std::int64_t i = 0; i < size; ++i) {
    const double t = static_cast<double>(i) - center;
    g[static_cast<std::size_t>(i)] = std::exp(-t * t / (2.0 * sigma * sigma));
    sum += g[static_cast<std::size_t>(i)];
  }
  for (auto& v : g) v /= sum;
  return g;
}

// Separable "valid" Gaussian filter of f(a, b) evaluated per pixel.
template <typename F>
Plane filter_valid(const Plane& a, const Plane& b, const std::vector<double>& g, F f) {
  const auto k = static_cast<std::int64_t>(g.size());
  const auto oh = a.h - k + 1;
  const auto ow = a.w - k + 1;
  Plane rows{a.h, ow, std::vector<double>(static_cast<std::size_t>(a.h * ow))};
  for (std::int64_t y = 0; y < a.h; ++y)
    for (std::int64_t x = 0; x < ow; ++x) {
      double s = 0.0;
      for (std::int64_t i = 0; i < k; ++i) s += g[static_cast<std::size_t>(i)] * f(a.at(y, x + i), b.at(y, x + i));
      rows.v[static_cast<std::size_t>(y * ow + x)] = s;
    }
  Plane out{oh, ow, std::vector<double>(static_cast<std::size_t>(oh * ow))};
  for (std::int64_t y = 0; y < oh; ++y)
    for (std::int64_t x = 0; x < ow; ++x) {
      double s = 0.0;
      for (std::int64_t i = 0; i < k; ++i) s += g[static_cast<std::size_t>(i)] * rows.at(y + i, x);
      out.v[static_cast<std::size_t>(y * ow + x)] = s;
    }
  return out;
}

struct ScaleStats {
  double cs = 0.0;    // mean contrast-structure term
  double ssim = 0.0;  // mean full SSIM term
};

// Every expression is written so that swapping x and y only reorders
// commutative operations, which keeps the result exactly symmetric.
ScaleStats ssim_scale(const Plane& x, const Plane& y, const MsSsimOptions& o) {
  const auto win = std::min({o.window, x.h, x.w});
  const double sigma = win < o.window ? o.sigma * static_cast<double>(win) / static_cast<double>(o.window) : o.sigma;
  const auto g = gaussian_window(win, sigma);
  const double c1 = (o.k1 * o.dynamic_range) * (o.k1 * o.dynamic_range);
  const double c2 = (o.k2 * o.dynamic_range) * (o.k2 * o.dynamic_range);

  auto first = [](double a, double) { return a; };
  auto second = [](double, double b) { return b; };
  auto mu_x = filter_valid(x, y, g, first);
  auto mu_y = filter_valid(x, y, g, second);
  auto xx = filter_valid(x, y, g, [](double a, double) { return a * a; });
  auto yy = filter_valid(x, y, g, [](double, double b) { return b * b; });
  auto xy = filter_valid(x, y, g, [](double a, double b) { return a * b; });

  ScaleStats s;
  const auto n = mu_x.v.size();
  for (std::size_t i = 0; i < n; ++i) {
    const double mx = mu_x.v[i];
    const double my = mu_y.v[i];
    const double vx = xx.v[i] - mx * mx;
    const double vy = yy.v[i] - my * my;
    const double cov = xy.v[i] - mx * my;
    const double cs = (2.0 * cov + c2) / ((vx + vy) + c2);
    const double lum = (2.0 * (mx * my) + c1) / ((mx * mx + my * my) + c1);
    s.cs += cs;
    s.ssim += lum * cs;
  }
  s.cs /= static_cast<double>(n);
  s.ssim /= static_cast<double>(n);
  return s;
}

void check_pair(const torch::Tensor& x, const torch::Tensor& y) {
  if (x.dim() != 3 || x.sizes() != y.sizes()) throw ValidationError("ms_ssim needs two equally shaped [C, H, W] images");
}

}  // namespace

double ssim(const torch::Tensor& x, const torch::Tensor& y, const MsSsimOptions& options) {
  check_pair(x, y);
  auto px = to_planes(x);
  auto py = to_planes(y);
  double total = 0.0;
  for (std::size_t c = 0; c < px.size(); ++c) total += ssim_scale(px[c], py[c], options).ssim;
  return total / static_cast<double>(px.size());
}

double ms_ssim(const torch::Tensor& x, const torch::Tensor& y, const MsSsimOptions& options) {
  check_pair(x, y);
  const auto scales = static_cast<std::int64_t>(options.weights.size());
  if (scales < 1) throw ValidationError("ms_ssim needs at least one scale weight");
  const auto min_side = std::min(x.size(1), x.size(2));
  if (min_side < (std::int64_t{1} << (scales - 1)))
    throw ValidationError("ms_ssim: image side " + std::to_string(min_side) + " is too small for " +
                          std::to_string(scales) + " scales");

  auto px = to_planes(x);
  auto py = to_planes(y);
  double total = 0.0;
  for (std::size_t c = 0; c < px.size(); ++c) {
    Plane a = px[c];
    Plane b = py[c];
    double value = 1.0;
    for (std::int64_t s = 0; s < scales; ++s) {
      auto stats = ssim_scale(a, b, options);
      const double w = options.weights[static_cast<std::size_t>(s)];
      if (s + 1 < scales) {
        value *= std::pow(std::max(stats.cs, 0.0), w);
        a = downsample(a);
        b = downsample(b);
      } else {
        value *= std::pow(std::max(stats.ssim, 0.0), w);
      }
    }
    total += value;
  }
  return std::clamp(total / static_cast<double>(px.size()), 0.0, 1.0);
}

double pairwise_diversity(const std::vector<torch::Tensor>& images, const PairMeasure& measure) {
  if (images.size() < 2) throw ValidationError("pairwise diversity needs at least two images");
  double total = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < images.size(); ++i)
    for (std::size_t j = i + 1; j < images.size(); ++j) {
      total += measure(images[i], images[j]);
      ++pairs;
    }
  return total / static_cast<double>(pairs);
}

double pairwise_diversity(const std::vector<torch::Tensor>& images, const PerceptualMetric& metric) {
  if (images.size() < 2) throw ValidationError("pairwise diversity needs at least two images");
  std::vector<PerceptualMetric::Embedding> emb;
  for (const auto& img : images) emb.push_back(metric.embed(img));
  double total = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < emb.size(); ++i)
    for (std::size_t j = i + 1; j < emb.size(); ++j) {
      total += metric.compare(emb[i], emb[j]);
      ++pairs;
    }
  return total / static_cast<double>(pairs);
}

double dist_to_train(const std::vector<torch::Tensor>& fakes, const FrameSet& fs, const AugmentationPolicy& policy,
                     const PerceptualMetric& metric, std::int64_t n_aug, const Rng& rng) {
  if (fakes.empty()) throw ValidationError("dist_to_train needs at least one generated image");
  if (n_aug < 0) throw ValidationError("n_aug must be non-negative");
  std::vector<PerceptualMetric::Embedding> pool;
  for (std::int64_t f = 0; f < fs.size(); ++f) {
    const auto frame = fs.frame(f);
    pool.push_back(metric.embed(frame));
    auto child = rng.fork(static_cast<std::uint64_t>(f));
    for (std::int64_t k = 0; k < n_aug; ++k) pool.push_back(metric.embed(augment(frame, policy, child).image));
  }
  double total = 0.0;
  for (const auto& fake : fakes) {
    const auto e = metric.embed(fake);
    double best = std::numeric_limits<double>::infinity();
    for (const auto& p : pool) best = std::min(best, metric.compare(e, p));
    total += best;
  }
  return total / static_cast<double>(fakes.size());
}

void MetricsConfig::validate() const {
  if (n_generated < 2) throw ValidationError("n_generated must be at least 2 (diversity is pairwise)");
  if (n_aug < 0) throw ValidationError("n_aug must be non-negative");
  if (sifid_stage < 0) throw ValidationError("sifid stage must be non-negative");
}

nlohmann::json MetricReport::to_json() const {
  return nlohmann::json{{"sifid", sifid},
                        {"lpips_diversity", lpips_diversity},
                        {"ms_ssim_diversity", ms_ssim_diversity},
                        {"dist_to_train", dist_to_train},
                        {"n_generated", n_generated},
                        {"extractor", extractor},
                        {"perceptual_metric", perceptual_metric}};
}

MetricReport evaluate(ImageSource& source, const FrameSet& fs, const AugmentationPolicy& policy,
                      const MetricsConfig& config) {
  config.validate();
  auto fakes = source.generate(config.n_generated, config.seed);
  if (static_cast<std::int64_t>(fakes.size()) != config.n_generated)
    throw ValidationError("image source returned the wrong number of samples");
  for (const auto& f : fakes) {
    if (resolution_of(f) != fs.resolution())
      throw ValidationError("generated images do not match the training frames' resolution");
  }

  auto net = config.extractor_weights.empty() ? TrunkFeatureNetwork::reference(config.extractor_seed)
                                              : TrunkFeatureNetwork::from_weights_file(config.extractor_weights);
  TrunkExtractor extractor(net, config.sifid_stage);
  FeatureDistance perceptual(net);

  MetricReport report;
  report.n_generated = config.n_generated;
  report.extractor = extractor.identifier();
  report.perceptual_metric = perceptual.identifier();

  // SIFID against every training frame, averaged (one frame in single-image mode).
  std::vector<GaussianFit> fake_fits;
  for (const auto& f : fakes) fake_fits.push_back(fit_spatial_gaussian(extractor.map(f)));
  double sifid_total = 0.0;
  for (std::int64_t i = 0; i < fs.size(); ++i) {
    auto ref = fit_spatial_gaussian(extractor.map(fs.frame(i)));
    double frame_total = 0.0;
    for (const auto& fit : fake_fits) frame_total += frechet_distance(ref.mean, ref.covariance, fit.mean, fit.covariance);
    sifid_total += frame_total / static_cast<double>(fake_fits.size());
  }
  report.sifid = sifid_total / static_cast<double>(fs.size());

  report.lpips_diversity = pairwise_diversity(fakes, perceptual);
  report.ms_ssim_diversity =
      pairwise_diversity(fakes, [](const torch::Tensor& a, const torch::Tensor& b) { return ms_ssim(a, b); });
  report.dist_to_train =
      dist_to_train(fakes, fs, policy, perceptual, config.n_aug, Rng::stream(config.seed, "dist_to_train"));
  return report;
}

}  // namespace oneshot
