// Copyright (c) 2026 The oneshot Authors
// SPDX-License-Identifier: Apache-2.0

#include "oneshot/trainer.hpp"

#include <cmath>
#include <cstdio>


#include "oneshot/config.hpp"
#include "oneshot/error.hpp"
#include "oneshot/log.hpp"

namespace oneshot {
namespace {

constexpr const char* kStateFormat = "oneshot-train-state";

// Disables gradient tracking for a module's parameters for one scope.
class FreezeParameters {
 public:
  explicit FreezeParameters(torch::nn::Module& module) : params_(module.parameters()) {
    for (auto& p : params_) p.set_requires_grad(false);
  }
  ~FreezeParameters() {
    for (auto& p : params_) p.set_requires_grad(true);
  }
  FreezeParameters(const FreezeParameters&) = delete;
  FreezeParameters& operator=(const FreezeParameters&) = delete;

 private:
  std::vector<torch::Tensor> params_;
};

Generator make_generator(const TrainingConfig& config, Resolution resolution, Rng& rng) {
  const auto& g = config.generator;
  return Generator(GeneratorConfig::for_resolution(resolution, g.z_dim, g.num_up_blocks, g.base_channels), rng);
}

void copy_parameters(torch::nn::Module& dst, const torch::nn::Module& src) {
  torch::NoGradGuard no_grad;
  auto d = dst.parameters();
  auto s = src.parameters();
  for (std::size_t i = 0; i < d.size(); ++i) d[i].copy_(s[i]);
}

std::string format_resolution(Resolution r) {
  return std::to_string(r.height) + "x" + std::to_string(r.width);
}

Resolution parse_resolution(const std::string& s) {
  auto x = s.find('x');
  if (x == std::string::npos) throw CheckpointError("malformed resolution '" + s + "' in checkpoint");
  return {std::stoll(s.substr(0, x)), std::stoll(s.substr(x + 1))};
}

TensorContainer make_container(const TrainState& state) {
  TensorContainer c;
  c.config_digest = config_digest(state.config());
  c.meta["format"] = kStateFormat;
  c.meta["config"] = format_training_config(state.config());
  c.meta["resolution"] = format_resolution(state.resolution());
  c.meta["step"] = std::to_string(state.step);
  c.meta["rng.data"] = state.data_rng.serialize();
  c.meta["rng.latent"] = state.latent_rng.serialize();
  c.meta["rng.augment"] = state.augment_rng.serialize();
  export_state(*state.generator, "generator.", c);
  export_state(*state.discriminator, "discriminator.", c);
  if (state.ema_generator) export_state(**state.ema_generator, "ema.", c);
  state.generator_optimizer.export_state("adam_g.", c);
  state.discriminator_optimizer.export_state("adam_d.", c);
  return c;
}

}  // namespace

void TrainingConfig::validate() const {
  adam().validate();
  if (batch_size < 1) throw ValidationError("batch_size must be at least 1");
  if (!(lambda_dr >= 0.0)) throw ValidationError("lambda_dr must be non-negative");
  if (!(dr_ceiling > 0.0)) throw ValidationError("dr_ceiling must be positive");
  if (!(ema_decay >= 0.0 && ema_decay < 1.0)) throw ValidationError("ema_decay must lie in [0, 1)");
  if (total_steps < 0) throw ValidationError("total_steps must be non-negative");
  if (checkpoint_every < 0 || sample_every < 0) throw ValidationError("schedules must be non-negative (0 disables)");
  if (sample_rows < 1 || sample_cols < 1) throw ValidationError("sample grid must be at least 1x1");
  if (max_side < divisor())
    throw ValidationError("max_side " + std::to_string(max_side) + " is smaller than the generator's upsampling factor " +
                          std::to_string(divisor()));
  augmentation.validate();
  generator.validate();
  discriminator.validate();
}

TrainingConfig TrainingConfig::smoke() {
  TrainingConfig c;
  c.max_side = 64;
  c.total_steps = 2000;
  c.checkpoint_every = 500;
  c.sample_every = 500;
  c.generator.base_channels = 256;
  c.discriminator.trunk_channels = 64;
  c.discriminator.branch_channels = 32;
  return c;
}

TrainState::TrainState(const TrainingConfig& config, Resolution resolution, Generator g, Discriminator d,
                       std::optional<Generator> ema)
    : generator(std::move(g)),
      discriminator(std::move(d)),
      ema_generator(std::move(ema)),
      generator_optimizer(generator->parameters(), config.adam()),
      discriminator_optimizer(discriminator->parameters(), config.adam()),
      data_rng(Rng::stream(config.seed, "data")),
      latent_rng(Rng::stream(config.seed, "latent")),
      augment_rng(Rng::stream(config.seed, "augment")),
      config_(config),
      resolution_(resolution) {}

TrainState TrainState::initialize(const TrainingConfig& config, Resolution resolution) {
  config.validate();
  auto init = Rng::stream(config.seed, "init");
  auto g = make_generator(config, resolution, init);
  auto d = Discriminator(config.discriminator, init);
  std::optional<Generator> ema;
  if (config.ema_decay > 0.0) {
    Rng unused(0);
    ema = make_generator(config, resolution, unused);
    copy_parameters(**ema, *g);
    for (auto& p : (*ema)->parameters()) p.set_requires_grad(false);
  }
  return TrainState(config, resolution, std::move(g), std::move(d), std::move(ema));
}

AdversarialTerms discriminator_step(TrainState& state, const FrameSet& fs) {
  const auto& cfg = state.config();
  auto& G = state.generator;
  auto& D = state.discriminator;
  if (cfg.discriminator.spectral_norm) update_spectral_estimates(*D);

  auto real = sample_batch(fs, cfg.augmentation, cfg.batch_size, state.data_rng).images;
  torch::Tensor fake;
  {
    torch::NoGradGuard no_grad;
    fake = G->generate(sample_latents(state.latent_rng, cfg.batch_size, cfg.generator.z_dim)).image;
  }
  if (cfg.augment_fakes) fake = augment_batch(fake, cfg.augmentation, state.augment_rng);

  auto terms = discriminator_loss(D->discriminate(real), D->discriminate(fake));
  state.discriminator_optimizer.zero_grad();
  (-terms.total).backward();
  state.discriminator_optimizer.step();
  return terms;
}

std::pair<AdversarialTerms, torch::Tensor> generator_step(TrainState& state) {
  const auto& cfg = state.config();
  auto& G = state.generator;
  auto& D = state.discriminator;
  const auto B = cfg.batch_size;

  FreezeParameters frozen(*D);
  // z1 and z2 drawn back to back; instance norm keeps the two halves independent.
  auto out = G->generate(sample_latents(state.latent_rng, 2 * B, cfg.generator.z_dim));
  std::vector<torch::Tensor> f1, f2;
  for (const auto& f : out.block_features) {
    f1.push_back(f.narrow(0, 0, B));
    f2.push_back(f.narrow(0, B, B));
  }
  auto fake = out.image.narrow(0, 0, B);
  if (cfg.augment_fakes) fake = augment_batch(fake, cfg.augmentation, state.augment_rng);

  auto adv = generator_adversarial_loss(D->discriminate(fake), cfg.generator_loss);
  auto dr = diversity_regularization(f1, f2, cfg.dr_norm);
  auto total = generator_objective(adv.total, dr, cfg.lambda_dr, cfg.dr_ceiling);

  state.generator_optimizer.zero_grad();
  total.backward();
  state.generator_optimizer.step();

  if (state.ema_generator) {
    torch::NoGradGuard no_grad;
    auto ema = (*state.ema_generator)->parameters();
    auto live = G->parameters();
    for (std::size_t i = 0; i < ema.size(); ++i) ema[i].mul_(cfg.ema_decay).add_(live[i], 1.0 - cfg.ema_decay);
  }
  return {adv, dr.detach()};
}

LossReport train_step(TrainState& state, const FrameSet& fs) {
  const auto step = state.step + 1;
  const auto& cfg = state.config();
  try {
    auto d = discriminator_step(state, fs);
    auto [g, dr] = generator_step(state);
    state.step = step;
    auto report = full_objective_step_values(cfg.lambda_dr, g.total.item<double>(),
                                             std::min(dr.item<double>(), cfg.dr_ceiling), d);
    const std::pair<const char*, double> fields[] = {
        {"d_content", report.d_content}, {"d_layout", report.d_layout}, {"d_low_level", report.d_low_level},
        {"g_adv", report.g_adv},         {"g_dr", report.g_dr},         {"g_total", report.g_total}};
    for (const auto& [name, v] : fields)
      if (!std::isfinite(v)) throw NumericalError(name);
    return report;
  } catch (const NumericalError& e) {
    throw NumericalError(e.head(), step);
  }
}

std::vector<std::uint8_t> save_checkpoint(const TrainState& state) {
  return encode_container(make_container(state));
}

CheckpointInfo checkpoint_info(const TensorContainer& c) {
  auto format = c.meta.find("format");
  if (format == c.meta.end() || format->second != kStateFormat)
    throw CheckpointError("container is not a training checkpoint");
  CheckpointInfo info;
  info.config_text = c.meta_at("config");
  try {
    info.config = parse_training_config(info.config_text);
  } catch (const ValidationError& e) {
    throw CheckpointError(std::string("checkpoint config is invalid: ") + e.what());
  }
  info.config_digest = c.config_digest;
  if (config_digest(info.config) != c.config_digest)
    throw CheckpointError("checkpoint config digest " + c.config_digest + " does not match its stored config");
  info.resolution = parse_resolution(c.meta_at("resolution"));
  info.step = std::stoll(c.meta_at("step"));
  return info;
}

TrainState load_checkpoint(const std::vector<std::uint8_t>& bytes) {
  auto c = decode_container(bytes);
  auto info = checkpoint_info(c);
  auto state = TrainState::initialize(info.config, info.resolution);
  try {
    import_state(*state.generator, "generator.", c);
    import_state(*state.discriminator, "discriminator.", c);
    if (state.ema_generator) import_state(**state.ema_generator, "ema.", c);
  } catch (const ValidationError& e) {
    throw CheckpointError(std::string("checkpoint tensors do not match its config: ") + e.what());
  }
  state.generator_optimizer.import_state("adam_g.", c);
  state.discriminator_optimizer.import_state("adam_d.", c);
  state.data_rng = Rng::restore(c.meta_at("rng.data"));
  state.latent_rng = Rng::restore(c.meta_at("rng.latent"));
  state.augment_rng = Rng::restore(c.meta_at("rng.augment"));
  state.step = info.step;
  return state;
}

TrainState load_checkpoint_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw InputError("cannot read checkpoint file '" + path.string() + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  return load_checkpoint(bytes);
}

RunDirectorySink::RunDirectorySink(std::filesystem::path run_dir, bool append) : run_dir_(std::move(run_dir)) {
  std::filesystem::create_directories(run_dir_ / "checkpoints");
  std::filesystem::create_directories(run_dir_ / "samples");
  const auto path = run_dir_ / "losses.csv";
  const bool fresh = !append || !std::filesystem::exists(path) || std::filesystem::file_size(path) == 0;
  losses_.open(path, fresh ? std::ios::trunc : std::ios::app);
  if (!losses_) throw InputError("cannot open loss log '" + path.string() + "'");
  if (fresh) losses_ << kLossHeader << '\n' << std::flush;
}

std::string RunDirectorySink::format_loss_row(std::int64_t step, const LossReport& r) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%lld,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g", static_cast<long long>(step),
                r.d_content, r.d_layout, r.d_low_level, r.d_total, r.g_adv, r.g_dr, r.g_total);
  return buf;
}

void RunDirectorySink::on_step(std::int64_t step, const LossReport& report) {
  losses_ << format_loss_row(step, report) << '\n' << std::flush;
}

void RunDirectorySink::on_checkpoint(std::int64_t step, const TrainState& state) {
  char name[32];
  std::snprintf(name, sizeof(name), "step_%07lld.ckpt", static_cast<long long>(step));
  write_container(run_dir_ / "checkpoints" / name, make_container(state));
}

void RunDirectorySink::on_samples(std::int64_t step, const torch::Tensor& grid) {
  char name[32];
  std::snprintf(name, sizeof(name), "step_%07lld.png", static_cast<long long>(step));
  write_png(run_dir_ / "samples" / name, grid);
}

torch::Tensor preview_grid(TrainState& state) {
  const auto& cfg = state.config();
  auto rng = Rng::stream(cfg.seed, "preview");
  torch::NoGradGuard no_grad;
  auto z = sample_latents(rng, cfg.sample_rows * cfg.sample_cols, cfg.generator.z_dim);
  auto images = state.sampling_generator()->generate(z).image;
  return make_grid(images, cfg.sample_rows, cfg.sample_cols);
}

TrainState train(const TrainingConfig& config, const FrameSet& fs, const std::vector<TrainingSink*>& sinks,
                 std::optional<TrainState> resume) {
  config.validate();
  TrainState state = resume ? std::move(*resume) : TrainState::initialize(config, fs.resolution());
  if (resume && config_digest(state.config()) != config_digest(config))
    throw ValidationError("resumed checkpoint was trained with a different config (digest " +
                          config_digest(state.config()) + ", expected " + config_digest(config) + ")");
  if (state.resolution() != fs.resolution())
    throw ValidationError("frame resolution " + format_resolution(fs.resolution()) +
                          " does not match the training state's " + format_resolution(state.resolution()));

  while (state.step < config.total_steps) {
    auto report = train_step(state, fs);
    for (auto* sink : sinks) sink->on_step(state.step, report);
    // The final step always gets a checkpoint and a preview.
    const bool last = state.step == config.total_steps;
    if (last || (config.checkpoint_every > 0 && state.step % config.checkpoint_every == 0))
      for (auto* sink : sinks) sink->on_checkpoint(state.step, state);
    if (last || (config.sample_every > 0 && state.step % config.sample_every == 0)) {
      auto grid = preview_grid(state);
      for (auto* sink : sinks) sink->on_samples(state.step, grid);
    }
    if (state.step % 50 == 0 || last) {
      char line[160];
      std::snprintf(line, sizeof(line), "step %lld/%lld  d_total %.4f  g_adv %.4f  g_dr %.4f",
                    static_cast<long long>(state.step), static_cast<long long>(config.total_steps), report.d_total,
                    report.g_adv, report.g_dr);
      log::info(line);
    }
  }
  return state;
}

}  // namespace oneshot
