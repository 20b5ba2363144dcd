// Copyright (c) 2026 The oneshot Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

namespace oneshot {

/// Unreadable or undecodable input (files, directories, streams).
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A value or shape violates an operation's precondition or a type invariant.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Checkpoint container could not be decoded or has the wrong version.
class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A loss or logit became non-finite. Carries the loss head and, once known,
/// the training step at which it happened.
class NumericalError : public std::runtime_error {
 public:
  NumericalError(std::string head, std::optional<std::int64_t> step = std::nullopt)
      : std::runtime_error(describe(head, step)), head_(std::move(head)), step_(step) {}

  const std::string& head() const noexcept { return head_; }
  std::optional<std::int64_t> step() const noexcept { return step_; }

 private:
  static std::string describe(const std::string& head, std::optional<std::int64_t> step) {
    std::string msg = "non-finite value in loss head '" + head + "'";
    if (step) msg += " at step " + std::to_string(*step);
    return msg;
  }

  std::string head_;
  std::optional<std::int64_t> step_;
};

}  // namespace oneshot
