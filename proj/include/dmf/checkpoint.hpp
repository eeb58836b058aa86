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

#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "dmf/params.hpp"
#include "dmf/tensor.hpp"

namespace dmf {

/// Checkpoint file layout, all integers little-endian:
///
///   "DMF1"                 magic
///   u8                     model kind tag (0 when unused)
///   u32                    tensor count
///   per tensor:
///     u16 length + UTF-8   name
///     u8                   rank
///     u64 x rank           dims
///     f32 x product(dims)  row-major payload
struct Checkpoint {
  std::uint8_t kind = 0;
  std::vector<std::pair<std::string, Tensor<float>>> tensors;

  const Tensor<float>* find(std::string_view name) const;
  friend bool operator==(const Checkpoint&, const Checkpoint&) = default;
};

std::string encode_checkpoint(const Checkpoint& ckpt);
// Throws FormatError on bad magic, truncation, or trailing bytes.
Checkpoint decode_checkpoint(std::string_view bytes, const std::string& context = "checkpoint");

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

template <typename T>
Checkpoint to_checkpoint(const ParamStore<T>& params, std::uint8_t kind);

// Copies tensors by name into an existing store. Every store entry must be
// present with the same shape; extra checkpoint tensors are an error.
template <typename T>
void restore_params(const Checkpoint& ckpt, ParamStore<T>& params);

}  // namespace dmf
