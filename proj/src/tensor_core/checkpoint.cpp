// Copyright 2026 The DMF Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "dmf/checkpoint.hpp"

#include <fstream>
#include <sstream>

#include "dmf/binary_io.hpp"

namespace dmf {

namespace binary {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, std::string_view data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path);
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
  if (!out) throw DataError("short write to " + path);
}

}  // namespace binary

namespace {
constexpr std::string_view kMagic = "DMF1";
}

const Tensor<float>* Checkpoint::find(std::string_view name) const {
  for (const auto& [n, t] : tensors)
    if (n == name) return &t;
  return nullptr;
}

std::string encode_checkpoint(const Checkpoint& ckpt) {
  binary::Writer w;
  w.bytes(kMagic);
  w.u8(ckpt.kind);
  w.u32(static_cast<std::uint32_t>(ckpt.tensors.size()));
  for (const auto& [name, t] : ckpt.tensors) {
    if (name.size() > 0xffff) throw FormatError("checkpoint tensor name too long: " + name);
    w.u16(static_cast<std::uint16_t>(name.size()));
    w.bytes(name);
    w.u8(static_cast<std::uint8_t>(t.rank()));
    for (std::size_t d : t.shape()) w.u64(d);
    for (float v : t.data()) w.f32(v);
  }
  return w.take();
}

Checkpoint decode_checkpoint(std::string_view bytes, const std::string& context) {
  binary::Reader r(bytes, context);
  if (bytes.size() < kMagic.size() || r.bytes(kMagic.size()) != kMagic) {
    throw FormatError(context + ": bad magic (expected \"DMF1\")");
  }
  Checkpoint ckpt;
  ckpt.kind = r.u8();
  const std::uint32_t count = r.u32();
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::uint16_t len = r.u16();
    std::string name(r.bytes(len));
    const std::uint8_t rank = r.u8();
    if (rank == 0) throw FormatError(context + ": tensor " + name + " has rank 0");
    Shape shape(rank);
    std::uint64_t numel = 1;
    for (auto& d : shape) {
      const std::uint64_t v = r.u64();
      if (v == 0) throw FormatError(context + ": tensor " + name + " has a zero dimension");
      d = static_cast<std::size_t>(v);
      numel *= v;
    }
    if (numel > r.remaining() / 4) throw FormatError(context + ": tensor " + name + " payload truncated");
    std::vector<float> data(static_cast<std::size_t>(numel));
    for (float& v : data) v = r.f32();
    ckpt.tensors.emplace_back(std::move(name), Tensor<float>(std::move(shape), std::move(data)));
  }
  if (!r.done()) throw FormatError(context + ": " + std::to_string(r.remaining()) + " trailing bytes");
  return ckpt;
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  binary::write_file(path, encode_checkpoint(ckpt));
}

Checkpoint load_checkpoint(const std::string& path) { return decode_checkpoint(binary::read_file(path), path); }

template <typename T>
Checkpoint to_checkpoint(const ParamStore<T>& params, std::uint8_t kind) {
  Checkpoint ckpt;
  ckpt.kind = kind;
  for (const auto& e : params.entries()) ckpt.tensors.emplace_back(e.name, tensor_cast<float>(*e.tensor));
  return ckpt;
}

template <typename T>
void restore_params(const Checkpoint& ckpt, ParamStore<T>& params) {
  if (ckpt.tensors.size() != params.size()) {
    throw FormatError("checkpoint holds " + std::to_string(ckpt.tensors.size()) + " tensors, model expects " +
                      std::to_string(params.size()));
  }
  for (const auto& e : params.entries()) {
    const Tensor<float>* src = ckpt.find(e.name);
    if (!src) throw FormatError("checkpoint is missing tensor " + e.name);
    if (src->shape() != e.tensor->shape()) {
      throw FormatError("checkpoint tensor " + e.name + " has shape " + shape_to_string(src->shape()) +
                        ", model expects " + shape_to_string(e.tensor->shape()));
    }
    for (std::size_t i = 0; i < src->size(); ++i) (*e.tensor)[i] = static_cast<T>((*src)[i]);
  }
}

template Checkpoint to_checkpoint(const ParamStore<float>&, std::uint8_t);
template Checkpoint to_checkpoint(const ParamStore<double>&, std::uint8_t);
template void restore_params(const Checkpoint&, ParamStore<float>&);
template void restore_params(const Checkpoint&, ParamStore<double>&);

}  // namespace dmf
