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

#include <cmath>
#include <memory>

#include "dmf/ops.hpp"
#include "ops_util.hpp"

namespace dmf {

namespace {

template <typename T>
T logistic(T v) {
  if (v >= T(0)) return T(1) / (T(1) + std::exp(-v));
  const T e = std::exp(v);
  return e / (T(1) + e);
}

template <typename T>
struct GruSaved {
  std::vector<T> z, r, cand, rh;
};

}  // namespace

template <typename T>
Var<T> gru_cell(Var<T> x, Var<T> h_prev, const GruVars<T>& weights) {
  using detail::require_rank;
  const Var<T> wx = weights.input_weights, wh = weights.hidden_weights, bias = weights.bias;
  detail::require_same_graph(x, h_prev, "gru_cell");
  detail::require_same_graph(x, wx, "gru_cell");
  detail::require_same_graph(x, wh, "gru_cell");
  detail::require_same_graph(x, bias, "gru_cell");
  require_rank(x, 2, "gru_cell", "x");
  require_rank(h_prev, 2, "gru_cell", "h_prev");
  require_rank(wx, 2, "gru_cell", "input_weights");
  require_rank(wh, 2, "gru_cell", "hidden_weights");
  const std::size_t rows = x.shape()[0], in = x.shape()[1], hid = h_prev.shape()[1];
  if (h_prev.shape()[0] != rows || wx.shape() != Shape{3 * hid, in} || wh.shape() != Shape{3 * hid, hid} ||
      bias.size() != 3 * hid) {
    throw DimensionError("gru_cell: x " + shape_to_string(x.shape()) + ", h " + shape_to_string(h_prev.shape()) +
                         ", input_weights " + shape_to_string(wx.shape()) + ", hidden_weights " +
                         shape_to_string(wh.shape()) + ", bias " + shape_to_string(bias.shape()) +
                         " are inconsistent");
  }
  const auto& kt = kernels::active<T>();
  const std::size_t g3 = 3 * hid;
  std::vector<T> gx(rows * g3);
  kt.gemm_nt(rows, g3, in, x.value().ptr(), wx.value().ptr(), gx.data(), false);
  std::vector<T> gzr(rows * 2 * hid);
  kt.gemm_nt(rows, 2 * hid, hid, h_prev.value().ptr(), wh.value().ptr(), gzr.data(), false);

  auto saved = std::make_shared<GruSaved<T>>();
  saved->z.resize(rows * hid);
  saved->r.resize(rows * hid);
  saved->cand.resize(rows * hid);
  saved->rh.resize(rows * hid);
  const T* b = bias.value().ptr();
  const T* h = h_prev.value().ptr();
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < hid; ++j) {
      const std::size_t k = i * hid + j;
      saved->z[k] = logistic(gx[i * g3 + j] + gzr[i * 2 * hid + j] + b[j]);
      saved->r[k] = logistic(gx[i * g3 + hid + j] + gzr[i * 2 * hid + hid + j] + b[hid + j]);
      saved->rh[k] = saved->r[k] * h[k];
    }
  }
  std::vector<T> gn(rows * hid);
  const T* u_cand = wh.value().ptr() + 2 * hid * hid;
  kt.gemm_nt(rows, hid, hid, saved->rh.data(), u_cand, gn.data(), false);
  Tensor<T> out({rows, hid});
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < hid; ++j) {
      const std::size_t k = i * hid + j;
      const T c = std::tanh(gx[i * g3 + 2 * hid + j] + gn[k] + b[2 * hid + j]);
      saved->cand[k] = c;
      out[k] = saved->z[k] * h[k] + (T(1) - saved->z[k]) * c;
    }
  }

  Graph<T>* g = &x.graph();
  auto backward = [g, x, h_prev, wx, wh, bias, saved, rows, in, hid](std::span<const T> dout) {
    const auto& kt = kernels::active<T>();
    const std::size_t g3 = 3 * hid;
    const T* h = h_prev.value().ptr();
    std::vector<T> dgx(rows * g3);   // pre-activation grads [z | r | cand]
    std::vector<T> dh(rows * hid);   // grad w.r.t. h_prev
    std::vector<T> da_cand(rows * hid);
    for (std::size_t i = 0; i < rows; ++i) {
      for (std::size_t j = 0; j < hid; ++j) {
        const std::size_t k = i * hid + j;
        const T z = saved->z[k], c = saved->cand[k];
        dh[k] = dout[k] * z;
        dgx[i * g3 + j] = dout[k] * (h[k] - c) * z * (T(1) - z);
        da_cand[k] = dout[k] * (T(1) - z) * (T(1) - c * c);
        dgx[i * g3 + 2 * hid + j] = da_cand[k];
      }
    }
    const T* u_cand = wh.value().ptr() + 2 * hid * hid;
    std::vector<T> drh(rows * hid);
    kt.gemm_nn_acc(rows, hid, hid, da_cand.data(), u_cand, drh.data());
    for (std::size_t i = 0; i < rows; ++i) {
      for (std::size_t j = 0; j < hid; ++j) {
        const std::size_t k = i * hid + j;
        const T r = saved->r[k];
        dh[k] += drh[k] * r;
        dgx[i * g3 + hid + j] = drh[k] * h[k] * r * (T(1) - r);
      }
    }
    // The z/r blocks of dgx double as grads of h_prev * U_zr^T.
    std::vector<T> dzr(rows * 2 * hid);
    for (std::size_t i = 0; i < rows; ++i) {
      std::copy_n(dgx.data() + i * g3, 2 * hid, dzr.data() + i * 2 * hid);
    }
    if (wh.needs_grad()) {
      auto dwh = g->grad(wh.id());
      kt.gemm_tn_acc(rows, hid, 2 * hid, dzr.data(), h, dwh.data());
      kt.gemm_tn_acc(rows, hid, hid, da_cand.data(), saved->rh.data(), dwh.data() + 2 * hid * hid);
    }
    if (h_prev.needs_grad()) {
      kt.gemm_nn_acc(rows, hid, 2 * hid, dzr.data(), wh.value().ptr(), dh.data());
      detail::accumulate(g->grad(h_prev.id()), std::span<const T>(dh));
    }
    if (wx.needs_grad()) kt.gemm_tn_acc(rows, in, g3, dgx.data(), x.value().ptr(), g->grad(wx.id()).data());
    if (bias.needs_grad()) {
      auto db = g->grad(bias.id());
      for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < g3; ++j) db[j] += dgx[i * g3 + j];
    }
    if (x.needs_grad()) kt.gemm_nn_acc(rows, in, g3, dgx.data(), wx.value().ptr(), g->grad(x.id()).data());
  };
  return g->record(std::move(out), {x, h_prev, wx, wh, bias}, std::move(backward));
}

template Var<float> gru_cell(Var<float>, Var<float>, const GruVars<float>&);
template Var<double> gru_cell(Var<double>, Var<double>, const GruVars<double>&);

}  // namespace dmf
