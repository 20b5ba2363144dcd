// Copyright (c) 2026 The oneshot Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <torch/torch.h>

namespace oneshot {

/// On-disk layout (all integers little-endian):
///
///   magic      8 bytes  "OSGANCK\0"
///   version    3 x u16  major, minor, patch
///   digest     string   config digest (u32 length + bytes)
///   meta       u32 count, then (string key, string value) pairs
///   tensors    u32 count, then per tensor:
///                string name, u8 dtype (1=f32, 2=f64, 3=i64),
///                u32 rank, rank x i64 dims, raw contiguous data
///
/// Used for training checkpoints and for standalone weight files.
struct TensorContainer {
  static constexpr std::uint16_t kVersionMajor = 1;
  static constexpr std::uint16_t kVersionMinor = 0;
  static constexpr std::uint16_t kVersionPatch = 0;

  std::string config_digest;
  std::map<std::string, std::string> meta;
  std::vector<std::pair<std::string, torch::Tensor>> tensors;

  static std::string version_string();

  const torch::Tensor* find(const std::string& name) const;
  const torch::Tensor& at(const std::string& name) const;
  const std::string& meta_at(const std::string& key) const;
};

std::vector<std::uint8_t> encode_container(const TensorContainer& c);
TensorContainer decode_container(const std::vector<std::uint8_t>& bytes);

void write_container(const std::filesystem::path& path, const TensorContainer& c);
TensorContainer read_container(const std::filesystem::path& path);

}  // namespace oneshot
