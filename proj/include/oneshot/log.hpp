// Copyright (c) 2026 The oneshot Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string_view>

// Thin wrapper over spdlog. libtorch ships its own fmt, which clashes with the
// one spdlog was built against, so spdlog stays out of every torch-facing TU.
namespace oneshot::log {

enum class Level { kDebug, kInfo, kWarn, kError, kOff };

void set_level(Level level);
void info(std::string_view message);
void warn(std::string_view message);

}  // namespace oneshot::log
