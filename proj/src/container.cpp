// Copyright (c) 2026 The oneshot Authors
// SPDX-License-Identifier: Apache-2.0

#include "oneshot/container.hpp"

#include <array>
#include <cstring>
#include <fstream>
#include <iterator>

#include "oneshot/error.hpp"

namespace oneshot {
namespace {

constexpr std::array<char, 8> kMagic = {'O', 'S', 'G', 'A', 'N', 'C', 'K', '\0'};

class Writer {
 public:
  template <typename T>
  void pod(T v) {
    const auto* p = reinterpret_cast<const std::uint8_t*>(&v);
    out_.insert(out_.end(), p, p + sizeof(T));
  }
  void raw(const void* data, std::size_t n) {
    const auto* p = static_cast<const std::uint8_t*>(data);
    out_.insert(out_.end(), p, p + n);
  }
  void str(const std::string& s) {
    pod<std::uint32_t>(static_cast<std::uint32_t>(s.size()));
    raw(s.data(), s.size());
  }
  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& in) : in_(in) {}

  template <typename T>
  T pod() {
    T v;
    need(sizeof(T));
    std::memcpy(&v, in_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  void raw(void* dst, std::size_t n) {
    need(n);
    std::memcpy(dst, in_.data() + pos_, n);
    pos_ += n;
  }
  std::string str() {
    auto n = pod<std::uint32_t>();
    need(n);
    std::string s(reinterpret_cast<const char*>(in_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == in_.size(); }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > in_.size()) throw CheckpointError("truncated checkpoint container");
  }

  const std::vector<std::uint8_t>& in_;
  std::size_t pos_ = 0;
};

std::uint8_t dtype_code(torch::Dtype t) {
  switch (t) {
    case torch::kFloat32: return 1;
    case torch::kFloat64: return 2;
    case torch::kInt64: return 3;
    default: throw ValidationError("unsupported tensor dtype for container");
  }
}

torch::Dtype dtype_from_code(std::uint8_t c) {
  switch (c) {
    case 1: return torch::kFloat32;
    case 2: return torch::kFloat64;
    case 3: return torch::kInt64;
    default: throw CheckpointError("unknown tensor dtype code " + std::to_string(c));
  }
}

}  // namespace

std::string TensorContainer::version_string() {
  return std::to_string(kVersionMajor) + "." + std::to_string(kVersionMinor) + "." +
         std::to_string(kVersionPatch);
}

const torch::Tensor* TensorContainer::find(const std::string& name) const {
  for (const auto& [n, t] : tensors)
    if (n == name) return &t;
  return nullptr;
}

const torch::Tensor& TensorContainer::at(const std::string& name) const {
  if (const auto* t = find(name)) return *t;
  throw CheckpointError("container has no tensor named '" + name + "'");
}

const std::string& TensorContainer::meta_at(const std::string& key) const {
  auto it = meta.find(key);
  if (it == meta.end()) throw CheckpointError("container has no metadata key '" + key + "'");
  return it->second;
}

std::vector<std::uint8_t> encode_container(const TensorContainer& c) {
  Writer w;
  w.raw(kMagic.data(), kMagic.size());
  w.pod(TensorContainer::kVersionMajor);
  w.pod(TensorContainer::kVersionMinor);
  w.pod(TensorContainer::kVersionPatch);
  w.str(c.config_digest);

  w.pod<std::uint32_t>(static_cast<std::uint32_t>(c.meta.size()));
  for (const auto& [k, v] : c.meta) {
    w.str(k);
    w.str(v);
  }

  w.pod<std::uint32_t>(static_cast<std::uint32_t>(c.tensors.size()));
  for (const auto& [name, tensor] : c.tensors) {
    auto t = tensor.detach().cpu().contiguous();
    w.str(name);
    w.pod(dtype_code(t.scalar_type()));
    w.pod<std::uint32_t>(static_cast<std::uint32_t>(t.dim()));
    for (auto d : t.sizes()) w.pod<std::int64_t>(d);
    w.raw(t.data_ptr(), t.numel() * t.element_size());
  }
  return w.take();
}

TensorContainer decode_container(const std::vector<std::uint8_t>& bytes) {
  const std::string expected = "expected checkpoint format version " + TensorContainer::version_string();
  if (bytes.size() < kMagic.size() + 6 || std::memcmp(bytes.data(), kMagic.data(), kMagic.size()) != 0)
    throw CheckpointError("not a oneshot checkpoint (bad magic bytes); " + expected);

  Reader r(bytes);
  std::array<char, 8> magic{};
  r.raw(magic.data(), magic.size());
  auto major = r.pod<std::uint16_t>();
  auto minor = r.pod<std::uint16_t>();
  auto patch = r.pod<std::uint16_t>();
  if (major != TensorContainer::kVersionMajor || minor > TensorContainer::kVersionMinor) {
    throw CheckpointError("checkpoint format version " + std::to_string(major) + "." + std::to_string(minor) +
                          "." + std::to_string(patch) + " is not supported; " + expected);
  }

  TensorContainer c;
  c.config_digest = r.str();
  auto n_meta = r.pod<std::uint32_t>();
  for (std::uint32_t i = 0; i < n_meta; ++i) {
    auto k = r.str();
    c.meta[k] = r.str();
  }
  auto n_tensors = r.pod<std::uint32_t>();
  for (std::uint32_t i = 0; i < n_tensors; ++i) {
    auto name = r.str();
    auto dtype = dtype_from_code(r.pod<std::uint8_t>());
    auto rank = r.pod<std::uint32_t>();
    if (rank > 8) throw CheckpointError("tensor '" + name + "' has implausible rank");
    std::vector<std::int64_t> dims(rank);
    for (auto& d : dims) {
      d = r.pod<std::int64_t>();
      if (d < 0) throw CheckpointError("tensor '" + name + "' has negative dimension");
    }
    auto t = torch::empty(dims, torch::TensorOptions().dtype(dtype));
    r.raw(t.data_ptr(), t.numel() * t.element_size());
    c.tensors.emplace_back(std::move(name), std::move(t));
  }
  if (!r.done()) throw CheckpointError("trailing bytes after checkpoint container");
  return c;
}

void write_container(const std::filesystem::path& path, const TensorContainer& c) {
  auto bytes = encode_container(c);
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw InputError("cannot open '" + tmp.string() + "' for writing");
    os.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!os) throw InputError("failed writing '" + tmp.string() + "'");
  }
  std::filesystem::rename(tmp, path);
}

TensorContainer read_container(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw InputError("cannot read checkpoint file '" + path.string() + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  return decode_container(bytes);
}

}  // namespace oneshot
