// Copyright (c) 2026 The oneshot Authors
// SPDX-License-Identifier: Apache-2.0

#include "oneshot/commands.hpp"

#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <vector>

#include "oneshot/config.hpp"
#include "oneshot/error.hpp"
#include "oneshot/image.hpp"
#include "oneshot/metrics.hpp"
#include "oneshot/sampling.hpp"
#include "oneshot/trainer.hpp"

extern char** environ;

namespace oneshot {
namespace fs = std::filesystem;

namespace {

// Usage problems detected by the commands themselves (bad flags, occupied
// output directories); mapped to kExitUsage like config errors.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

template <typename F>
int guarded(std::ostream& err, F&& body) {
  try {
    return body();
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}

bool is_populated(const fs::path& dir) {
  return fs::exists(dir) && (!fs::is_directory(dir) || !fs::is_empty(dir));
}

void claim_output_dir(const fs::path& dir, bool force) {
  if (is_populated(dir)) {
    if (!force) throw UsageError("output '" + dir.string() + "' already exists and is not empty (use --force to replace it)");
    fs::remove_all(dir);
  }
  fs::create_directories(dir);
}

// Sibling scratch directory, renamed into place once complete.
fs::path scratch_dir_for(const fs::path& dir) {
  auto parent = dir.parent_path().empty() ? fs::path(".") : dir.parent_path();
  fs::create_directories(parent);
  for (int i = 0;; ++i) {
    auto candidate = parent / ("." + dir.filename().string() + ".partial-" + std::to_string(::getpid()) + "-" +
                               std::to_string(i));
    if (!fs::exists(candidate)) return candidate;
  }
}

int run_process(const std::vector<std::string>& argv) {
  std::vector<char*> args;
  for (const auto& a : argv) args.push_back(const_cast<char*>(a.c_str()));
  args.push_back(nullptr);
  pid_t pid = 0;
  if (::posix_spawn(&pid, args[0], nullptr, nullptr, args.data(), environ) != 0) return -1;
  int status = 0;
  if (::waitpid(pid, &status, 0) < 0) return -1;
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

// Drops loss rows past `step` so a resumed run appends without duplicates.
void truncate_loss_log(const fs::path& path, std::int64_t step) {
  if (!fs::exists(path)) return;
  std::ifstream in(path);
  std::vector<std::string> keep;
  std::string line;
  while (std::getline(in, line)) {
    if (keep.empty()) {
      keep.push_back(line);
      continue;
    }
    const auto comma = line.find(',');
    if (comma == std::string::npos) continue;
    if (std::stoll(line.substr(0, comma)) <= step) keep.push_back(line);
  }
  in.close();
  std::ofstream out(path, std::ios::trunc);
  for (const auto& l : keep) out << l << '\n';
}

}  // namespace

fs::path find_executable(const std::string& name) {
  if (name.empty()) return {};
  if (name.find('/') != std::string::npos) {
    return ::access(name.c_str(), X_OK) == 0 ? fs::path(name) : fs::path();
  }
  const char* path = std::getenv("PATH");
  if (!path) return {};
  std::stringstream dirs(path);
  std::string dir;
  while (std::getline(dirs, dir, ':')) {
    if (dir.empty()) continue;
    auto candidate = fs::path(dir) / name;
    if (::access(candidate.c_str(), X_OK) == 0 && !fs::is_directory(candidate)) return candidate;
  }
  return {};
}

int cmd_extract_frames(const ExtractFramesOptions& o, std::ostream& err) {
  return guarded(err, [&] {
    if (!(o.fps > 0.0) || !std::isfinite(o.fps)) throw UsageError("--fps must be positive");
    if (!fs::is_regular_file(o.video)) throw InputError("video file '" + o.video.string() + "' does not exist");
    if (is_populated(o.out_dir) && !o.force)
      throw UsageError("output '" + o.out_dir.string() + "' already exists and is not empty (use --force to replace it)");
    const auto decoder = find_executable(o.decoder);
    if (decoder.empty()) {
      err << "error: video decoder '" << o.decoder << "' was not found.\n"
          << "Install ffmpeg (or pass --decoder PATH), or extract the frames yourself as\n"
          << "  " << (o.out_dir / "frame_%05d.png").string() << "\n"
          << "and train with mode = single_video.\n";
      return kExitFailure;
    }

    const auto scratch = scratch_dir_for(o.out_dir);
    fs::create_directories(scratch);
    std::ostringstream filter;
    filter << "fps=" << o.fps;
    const int status = run_process({decoder.string(), "-hide_banner", "-loglevel", "error", "-nostdin", "-i",
                                     o.video.string(), "-vf", filter.str(), (scratch / "frame_%05d.png").string()});
    std::int64_t count = 0;
    if (status == 0) {
      for (const auto& e : fs::directory_iterator(scratch))
        if (e.path().extension() == ".png") ++count;
    }
    if (status != 0 || count == 0) {
      fs::remove_all(scratch);
      err << "error: decoder '" << decoder.string() << "' "
          << (status != 0 ? "failed with status " + std::to_string(status) : std::string("produced no frames"))
          << "; nothing was written\n";
      return kExitFailure;
    }
    if (fs::exists(o.out_dir)) fs::remove_all(o.out_dir);
    fs::rename(scratch, o.out_dir);
    err << "wrote " << count << " frames to " << o.out_dir.string() << "\n";
    return kExitOk;
  });
}

int cmd_train(const TrainOptions& o, std::ostream& err) {
  return guarded(err, [&] {
    auto config = load_run_config(o.config);
    if (o.out_dir) config.out_dir = *o.out_dir;
    const auto run_dir = config.out_dir;

    std::optional<TrainState> resume;
    if (o.resume) {
      resume = load_checkpoint_file(*o.resume);
      if (config_digest(resume->config()) != config_digest(config.training))
        throw UsageError("checkpoint '" + o.resume->string() + "' was written with a different training config");
      fs::create_directories(run_dir);
      truncate_loss_log(run_dir / "losses.csv", resume->step);
    } else {
      claim_output_dir(run_dir, o.force);
    }

    auto frames = load_frames(config.input, config.mode);
    auto fs_train = to_training_resolution(frames, config.training.max_side, config.training.divisor());
    err << "training on " << fs_train.size() << " frame(s) at " << fs_train.resolution().height << "x"
        << fs_train.resolution().width << " into " << run_dir.string() << "\n";

    {
      std::ofstream resolved(run_dir / "config.resolved", std::ios::trunc);
      resolved << format_run_config(config);
      if (!resolved) throw InputError("cannot write " + (run_dir / "config.resolved").string());
    }
    RunDirectorySink sink(run_dir, /*append=*/resume.has_value());
    train(config.training, fs_train, {&sink}, std::move(resume));
    return kExitOk;
  });
}

int cmd_sample(const SampleOptions& o, std::ostream& err) {
  return guarded(err, [&] {
    if (o.n < 1) throw UsageError("-n must be at least 1");
    auto state = load_checkpoint_file(o.checkpoint);
    auto images = sample_images(state.sampling_generator(), o.n, o.seed);

    claim_output_dir(o.out_dir, o.force);
    char name[32];
    for (std::size_t i = 0; i < images.size(); ++i) {
      std::snprintf(name, sizeof(name), "sample_%05zu.png", i);
      write_png(o.out_dir / name, images[i]);
    }
    const auto cols = static_cast<std::int64_t>(std::ceil(std::sqrt(static_cast<double>(o.n))));
    const auto rows = (o.n + cols - 1) / cols;
    write_png(o.out_dir / "grid.png", make_grid(torch::stack(images), rows, cols));
    err << "wrote " << o.n << " samples and a " << rows << "x" << cols << " grid to " << o.out_dir.string() << "\n";
    return kExitOk;
  });
}

int cmd_evaluate(const EvaluateOptions& o, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    auto state = load_checkpoint_file(o.checkpoint);
    const auto& training = state.config();

    MetricsConfig metrics;
    AugmentationPolicy policy = training.augmentation;
    if (o.config) metrics = load_run_config(*o.config).metrics;
    if (o.n_generated) metrics.n_generated = *o.n_generated;
    metrics.validate();

    const auto mode = o.mode ? *o.mode : (fs::is_directory(o.input) ? SourceMode::kSingleVideo : SourceMode::kSingleImage);
    auto frames = to_training_resolution(load_frames(o.input, mode), training.max_side, training.divisor());
    if (frames.resolution() != state.resolution()) {
      throw ValidationError("input '" + o.input.string() + "' maps to " + std::to_string(frames.resolution().height) +
                            "x" + std::to_string(frames.resolution().width) + " but the checkpoint was trained at " +
                            std::to_string(state.resolution().height) + "x" +
                            std::to_string(state.resolution().width));
    }

    GeneratorSource source(state.sampling_generator());
    const auto report = evaluate(source, frames, policy, metrics);
    const auto text = report.to_json().dump(2);
    const auto report_path = o.report ? *o.report : fs::path(o.checkpoint.string() + ".eval.json");
    {
      std::ofstream f(report_path, std::ios::trunc);
      f << text << "\n";
      if (!f) throw InputError("cannot write report '" + report_path.string() + "'");
    }
    out << text << "\n";
    return kExitOk;
  });
}

}  // namespace oneshot
