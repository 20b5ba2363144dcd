// Copyright (c) 2026 The oneshot Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "oneshot/dataio.hpp"
#include "oneshot/error.hpp"
#include "oneshot/metrics.hpp"
#include "oneshot/trainer.hpp"

namespace oneshot {

/// A run: training settings plus paths, input mode and metric settings.
///
/// File format: one `key = value` per line, `#` starts a comment, blank lines
/// ignored. Every key except `input` and `mode` has a default; unknown or
/// repeated keys are rejected.
struct RunConfig {
  std::filesystem::path input;
  SourceMode mode = SourceMode::kSingleImage;
  std::filesystem::path out_dir = "run";
  TrainingConfig training;
  MetricsConfig metrics;
};

class ConfigError : public ValidationError {
 public:
  ConfigError(const std::string& message, std::string key = {}, std::string suggestion = {})
      : ValidationError(message), key_(std::move(key)), suggestion_(std::move(suggestion)) {}
  const std::string& key() const { return key_; }
  const std::string& suggestion() const { return suggestion_; }

 private:
  std::string key_;
  std::string suggestion_;
};

/// Relative `input`/`out_dir` values are resolved against `base_dir` when given.
RunConfig parse_run_config(std::string_view text, const std::filesystem::path& base_dir = {});
RunConfig load_run_config(const std::filesystem::path& path);

/// Every key in canonical order with canonical values; parses back to an
/// identical RunConfig.
std::string format_run_config(const RunConfig& config);

/// Training keys only (the subset stored in checkpoints and digested).
std::string format_training_config(const TrainingConfig& config);
TrainingConfig parse_training_config(std::string_view text);

/// 16 hex digits of FNV-1a 64 over format_training_config().
std::string config_digest(const TrainingConfig& config);

std::vector<std::string> config_keys();
/// Closest known key by edit distance.
std::string nearest_config_key(std::string_view key);

}  // namespace oneshot
