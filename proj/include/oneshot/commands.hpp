// Copyright (c) 2026 The oneshot Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "oneshot/dataio.hpp"

namespace oneshot {

// Process exit codes shared by every command.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

struct ExtractFramesOptions {
  std::filesystem::path video;
  std::filesystem::path out_dir;
  double fps = 20.0;
  std::string decoder = "ffmpeg";  // name on PATH or a path
  bool force = false;
};

struct TrainOptions {
  std::filesystem::path config;
  std::optional<std::filesystem::path> out_dir;  // overrides the config's out_dir
  std::optional<std::filesystem::path> resume;   // checkpoint to continue from
  bool force = false;
};

struct SampleOptions {
  std::filesystem::path checkpoint;
  std::int64_t n = 16;
  std::uint64_t seed = 0;
  std::filesystem::path out_dir;
  bool force = false;
};

struct EvaluateOptions {
  std::filesystem::path checkpoint;
  std::filesystem::path input;
  std::optional<SourceMode> mode;               // default: directory => video
  std::optional<std::filesystem::path> config;  // run config supplying metric settings
  std::optional<std::int64_t> n_generated;
  std::optional<std::filesystem::path> report;  // default: <checkpoint>.eval.json
};

// Each command reports progress and errors on `err` and returns an exit code.
int cmd_extract_frames(const ExtractFramesOptions& options, std::ostream& err);
int cmd_train(const TrainOptions& options, std::ostream& err);
int cmd_sample(const SampleOptions& options, std::ostream& err);
/// The report JSON goes to `out` as well as to the report file.
int cmd_evaluate(const EvaluateOptions& options, std::ostream& out, std::ostream& err);

/// Resolves a decoder name against PATH; empty when not found.
std::filesystem::path find_executable(const std::string& name);

}  // namespace oneshot
