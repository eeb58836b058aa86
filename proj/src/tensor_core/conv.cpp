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

#include <memory>

#include "dmf/ops.hpp"
#include "ops_util.hpp"

namespace dmf {

namespace {

struct ConvGeometry {
  std::size_t images, channels, height, width;
  std::size_t out_channels, kh, kw, stride, padding;
  std::size_t out_h, out_w;

  std::size_t patches() const { return out_h * out_w; }
  std::size_t patch_len() const { return channels * kh * kw; }
  std::size_t image_len() const { return channels * height * width; }
};

// cols[p][(c, ky, kx)] = padded input at the patch origin plus (ky, kx).
template <typename T>
void im2col(const ConvGeometry& g, const T* image, T* cols) {
  const std::size_t ck = g.patch_len();
  for (std::size_t oy = 0; oy < g.out_h; ++oy) {
    for (std::size_t ox = 0; ox < g.out_w; ++ox) {
      T* row = cols + (oy * g.out_w + ox) * ck;
      std::size_t q = 0;
      for (std::size_t c = 0; c < g.channels; ++c) {
        for (std::size_t ky = 0; ky < g.kh; ++ky) {
          const long iy = static_cast<long>(oy * g.stride + ky) - static_cast<long>(g.padding);
          for (std::size_t kx = 0; kx < g.kw; ++kx, ++q) {
            const long ix = static_cast<long>(ox * g.stride + kx) - static_cast<long>(g.padding);
            const bool inside = iy >= 0 && ix >= 0 && iy < static_cast<long>(g.height) &&
                                ix < static_cast<long>(g.width);
            row[q] = inside ? image[(c * g.height + static_cast<std::size_t>(iy)) * g.width +
                                    static_cast<std::size_t>(ix)]
                            : T(0);
          }
        }
      }
    }
  }
}

template <typename T>
void col2im_add(const ConvGeometry& g, const T* cols, T* image) {
  const std::size_t ck = g.patch_len();
  for (std::size_t oy = 0; oy < g.out_h; ++oy) {
    for (std::size_t ox = 0; ox < g.out_w; ++ox) {
      const T* row = cols + (oy * g.out_w + ox) * ck;
      std::size_t q = 0;
      for (std::size_t c = 0; c < g.channels; ++c) {
        for (std::size_t ky = 0; ky < g.kh; ++ky) {
          const long iy = static_cast<long>(oy * g.stride + ky) - static_cast<long>(g.padding);
          for (std::size_t kx = 0; kx < g.kw; ++kx, ++q) {
            const long ix = static_cast<long>(ox * g.stride + kx) - static_cast<long>(g.padding);
            if (iy >= 0 && ix >= 0 && iy < static_cast<long>(g.height) && ix < static_cast<long>(g.width)) {
              image[(c * g.height + static_cast<std::size_t>(iy)) * g.width + static_cast<std::size_t>(ix)] +=
                  row[q];
            }
          }
        }
      }
    }
  }
}

template <typename T>
Var<T> conv2d_impl(Var<T> input, Var<T> kernel, const Var<T>* bias, std::size_t stride, std::size_t padding) {
  detail::require_same_graph(input, kernel, "conv2d");
  const Shape& is = input.shape();
  const Shape& ks = kernel.shape();
  if (is.size() != 3 && is.size() != 4) {
    throw DimensionError("conv2d: input must be [C x H x W] or [N x C x H x W], got " + shape_to_string(is));
  }
  detail::require_rank(kernel, 4, "conv2d", "kernel");
  if (stride == 0) throw DimensionError("conv2d: stride must be positive");
  const bool batched = is.size() == 4;
  ConvGeometry geo{};
  geo.images = batched ? is[0] : 1;
  geo.channels = is[is.size() - 3];
  geo.height = is[is.size() - 2];
  geo.width = is[is.size() - 1];
  geo.out_channels = ks[0];
  geo.kh = ks[2];
  geo.kw = ks[3];
  geo.stride = stride;
  geo.padding = padding;
  if (ks[1] != geo.channels) {
    throw DimensionError("conv2d: input " + shape_to_string(is) + " has " + std::to_string(geo.channels) +
                         " channels but kernel " + shape_to_string(ks) + " expects " + std::to_string(ks[1]));
  }
  const long span_h = static_cast<long>(geo.height + 2 * padding) - static_cast<long>(geo.kh);
  const long span_w = static_cast<long>(geo.width + 2 * padding) - static_cast<long>(geo.kw);
  if (span_h < 0 || span_w < 0) {
    throw DimensionError("conv2d: kernel " + shape_to_string(ks) + " larger than padded input " +
                         shape_to_string(is) + " (output dimensions would be non-positive)");
  }
  geo.out_h = static_cast<std::size_t>(span_h) / stride + 1;
  geo.out_w = static_cast<std::size_t>(span_w) / stride + 1;
  if (bias && bias->value().size() != geo.out_channels) {
    throw DimensionError("conv2d: bias " + shape_to_string(bias->shape()) + " does not match kernel " +
                         shape_to_string(ks));
  }

  const std::size_t p = geo.patches(), ck = geo.patch_len();
  auto cols = std::make_shared<std::vector<T>>(geo.images * p * ck);
  Shape out_shape = batched ? Shape{geo.images, geo.out_channels, geo.out_h, geo.out_w}
                            : Shape{geo.out_channels, geo.out_h, geo.out_w};
  Tensor<T> out(out_shape);
  const auto& kt = kernels::active<T>();
  for (std::size_t n = 0; n < geo.images; ++n) {
    T* c = cols->data() + n * p * ck;
    im2col(geo, input.value().ptr() + n * geo.image_len(), c);
    T* o = out.ptr() + n * geo.out_channels * p;
    kt.gemm_nt(geo.out_channels, p, ck, kernel.value().ptr(), c, o, false);
    if (bias) {
      for (std::size_t oc = 0; oc < geo.out_channels; ++oc) {
        const T b = bias->value()[oc];
        for (std::size_t q = 0; q < p; ++q) o[oc * p + q] += b;
      }
    }
  }

  Graph<T>* g = &input.graph();
  const Var<T> b = bias ? *bias : Var<T>();
  auto backward = [g, input, kernel, b, cols, geo](std::span<const T> dout) {
    const auto& kt = kernels::active<T>();
    const std::size_t p = geo.patches(), ck = geo.patch_len(), oc = geo.out_channels;
    std::vector<T> dcols;
    if (input.needs_grad()) dcols.resize(p * ck);
    for (std::size_t n = 0; n < geo.images; ++n) {
      const T* d = dout.data() + n * oc * p;
      if (kernel.needs_grad()) kt.gemm_nn_acc(oc, ck, p, d, cols->data() + n * p * ck, g->grad(kernel.id()).data());
      if (b.valid() && b.needs_grad()) {
        auto db = g->grad(b.id());
        for (std::size_t o = 0; o < oc; ++o)
          for (std::size_t q = 0; q < p; ++q) db[o] += d[o * p + q];
      }
      if (input.needs_grad()) {
        std::fill(dcols.begin(), dcols.end(), T(0));
        kt.gemm_tn_acc(oc, ck, p, d, kernel.value().ptr(), dcols.data());
        col2im_add(geo, dcols.data(), g->grad(input.id()).data() + n * geo.image_len());
      }
    }
  };
  if (bias) return g->record(std::move(out), {input, kernel, *bias}, std::move(backward));
  return g->record(std::move(out), {input, kernel}, std::move(backward));
}

}  // namespace

template <typename T>
Var<T> conv2d(Var<T> input, Var<T> kernel, std::size_t stride, std::size_t padding) {
  return conv2d_impl<T>(input, kernel, nullptr, stride, padding);
}

template <typename T>
Var<T> conv2d(Var<T> input, Var<T> kernel, Var<T> bias, std::size_t stride, std::size_t padding) {
  detail::require_same_graph(input, bias, "conv2d");
  return conv2d_impl<T>(input, kernel, &bias, stride, padding);
}

template Var<float> conv2d(Var<float>, Var<float>, std::size_t, std::size_t);
template Var<double> conv2d(Var<double>, Var<double>, std::size_t, std::size_t);
template Var<float> conv2d(Var<float>, Var<float>, Var<float>, std::size_t, std::size_t);
template Var<double> conv2d(Var<double>, Var<double>, Var<double>, std::size_t, std::size_t);

}  // namespace dmf
