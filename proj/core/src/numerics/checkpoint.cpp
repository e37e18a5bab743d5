// Copyright 2026 The cmad Authors
// SPDX-License-Identifier: Apache-2.0

#include "cmad/numerics/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <map>
#include <set>

namespace cmad {
namespace {

static_assert(sizeof(float) == 4);

template <typename U>
U to_little(U v) {
  if constexpr (std::endian::native == std::endian::big) {
    unsigned char b[sizeof(U)];
    std::memcpy(b, &v, sizeof(U));
    for (std::size_t i = 0; i < sizeof(U) / 2; ++i) std::swap(b[i], b[sizeof(U) - 1 - i]);
    std::memcpy(&v, b, sizeof(U));
  }
  return v;
}

template <typename U>
void put(std::ostream& os, U v) {
  v = to_little(v);
  os.write(reinterpret_cast<const char*>(&v), sizeof(U));
}

template <typename U>
U get(std::istream& is, const std::filesystem::path& path) {
  U v;
  if (!is.read(reinterpret_cast<char*>(&v), sizeof(U))) {
    throw LoadError("checkpoint '" + path.string() + "' is truncated");
  }
  return to_little(v);
}

}  // namespace

void write_checkpoint(const std::filesystem::path& path, const std::vector<NamedTensor>& tensors) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open '" + path.string() + "' for writing");
  os.write(kCheckpointMagic, 4);
  put<std::uint32_t>(os, kCheckpointVersion);
  put<std::uint32_t>(os, static_cast<std::uint32_t>(tensors.size()));
  for (const auto& nt : tensors) {
    put<std::uint32_t>(os, static_cast<std::uint32_t>(nt.name.size()));
    os.write(nt.name.data(), static_cast<std::streamsize>(nt.name.size()));
    put<std::uint32_t>(os, static_cast<std::uint32_t>(nt.tensor.rank()));
    for (auto e : nt.tensor.shape()) put<std::uint64_t>(os, e);
    for (float v : nt.tensor.values()) {
      std::uint32_t bits = std::bit_cast<std::uint32_t>(v);
      put<std::uint32_t>(os, bits);
    }
  }
  if (!os) throw IoError("failed while writing '" + path.string() + "'");
}

std::vector<NamedTensor> read_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open checkpoint '" + path.string() + "'");
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, kCheckpointMagic, 4) != 0) {
    throw LoadError("'" + path.string() + "' is not a CMAD checkpoint (bad magic)");
  }
  const auto version = get<std::uint32_t>(is, path);
  if (version != kCheckpointVersion) {
    throw LoadError("checkpoint '" + path.string() + "' has unsupported version " + std::to_string(version));
  }
  const auto count = get<std::uint32_t>(is, path);
  std::vector<NamedTensor> out;
  out.reserve(count);
  for (std::uint32_t t = 0; t < count; ++t) {
    const auto len = get<std::uint32_t>(is, path);
    if (len > (1u << 20)) throw LoadError("checkpoint '" + path.string() + "' has an implausible name length");
    std::string name(len, '\0');
    if (!is.read(name.data(), len)) throw LoadError("checkpoint '" + path.string() + "' is truncated");
    const auto rank = get<std::uint32_t>(is, path);
    if (rank == 0 || rank > 8) throw LoadError("tensor '" + name + "' has invalid rank " + std::to_string(rank));
    Shape shape(rank);
    std::uint64_t numel = 1;
    for (auto& e : shape) {
      e = static_cast<std::size_t>(get<std::uint64_t>(is, path));
      if (e == 0) throw LoadError("tensor '" + name + "' has a zero extent");
      numel *= e;
    }
    if (numel > (std::uint64_t{1} << 32)) throw LoadError("tensor '" + name + "' is implausibly large");
    std::vector<float> data(static_cast<std::size_t>(numel));
    for (auto& v : data) v = std::bit_cast<float>(get<std::uint32_t>(is, path));
    out.push_back({std::move(name), Tensor<float>(std::move(shape), std::move(data))});
  }
  return out;
}

template <typename T>
std::vector<NamedTensor> snapshot_parameters(const ParameterStore<T>& params) {
  std::vector<NamedTensor> out;
  params.for_each([&](const Parameter<T>& p) { out.push_back({p.name, p.value.template cast<float>()}); });
  return out;
}

template <typename T>
void restore_parameters(ParameterStore<T>& params, const std::vector<NamedTensor>& tensors) {
  std::map<std::string, const NamedTensor*> by_name;
  for (const auto& nt : tensors) {
    if (!by_name.emplace(nt.name, &nt).second) throw LoadError("duplicate tensor '" + nt.name + "' in checkpoint");
  }
  std::set<std::string> expected;
  params.for_each([&](const Parameter<T>& p) { expected.insert(p.name); });
  for (const auto& [name, nt] : by_name) {
    if (!expected.count(name)) throw LoadError("checkpoint tensor '" + name + "' does not exist in the model");
  }
  params.for_each([&](Parameter<T>& p) {
    auto it = by_name.find(p.name);
    if (it == by_name.end()) throw LoadError("checkpoint is missing tensor '" + p.name + "'");
    const auto& src = it->second->tensor;
    if (src.shape() != p.value.shape()) {
      throw LoadError("shape mismatch for '" + p.name + "': checkpoint " + shape_string(src.shape()) +
                      ", model " + shape_string(p.value.shape()));
    }
    p.value = src.template cast<T>();
  });
}

template std::vector<NamedTensor> snapshot_parameters(const ParameterStore<float>&);
template std::vector<NamedTensor> snapshot_parameters(const ParameterStore<double>&);
template void restore_parameters(ParameterStore<float>&, const std::vector<NamedTensor>&);
template void restore_parameters(ParameterStore<double>&, const std::vector<NamedTensor>&);

}  // namespace cmad
