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

#include "dmf/ops.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

#include "ops_util.hpp"

namespace dmf {

using detail::accumulate;
using detail::require_rank;
using detail::require_same_graph;
using detail::require_same_shape;

template <typename T>
Var<T> matmul(Var<T> a, Var<T> b) {
  require_same_graph(a, b, "matmul");
  require_rank(a, 2, "matmul", "a");
  require_rank(b, 2, "matmul", "b");
  const std::size_t m = a.shape()[0], k = a.shape()[1], n = b.shape()[1];
  if (b.shape()[0] != k) {
    throw DimensionError("matmul: inner dimensions differ, a is " + shape_to_string(a.shape()) + ", b is " +
                         shape_to_string(b.shape()));
  }
  Tensor<T> out({m, n});
  kernels::active<T>().gemm_nn_acc(m, n, k, a.value().ptr(), b.value().ptr(), out.ptr());
  Graph<T>* g = &a.graph();
  return g->record(std::move(out), {a, b}, [g, a, b, m, n, k](std::span<const T> dout) {
    const auto& kt = kernels::active<T>();
    if (a.needs_grad()) kt.gemm_nt(m, k, n, dout.data(), b.value().ptr(), g->grad(a.id()).data(), true);
    if (b.needs_grad()) kt.gemm_tn_acc(m, n, k, a.value().ptr(), dout.data(), g->grad(b.id()).data());
  });
}

namespace {

template <typename T>
Var<T> affine_impl(Var<T> x, Var<T> w, const Var<T>* bias) {
  require_same_graph(x, w, "affine");
  require_rank(x, 2, "affine", "x");
  require_rank(w, 2, "affine", "w");
  const std::size_t rows = x.shape()[0], in = x.shape()[1], out_dim = w.shape()[0];
  if (w.shape()[1] != in) {
    throw DimensionError("affine: x is " + shape_to_string(x.shape()) + " but weight is " +
                         shape_to_string(w.shape()));
  }
  if (bias && (bias->value().size() != out_dim)) {
    throw DimensionError("affine: bias " + shape_to_string(bias->shape()) + " does not match weight " +
                         shape_to_string(w.shape()));
  }
  Tensor<T> out({rows, out_dim});
  kernels::active<T>().gemm_nt(rows, out_dim, in, x.value().ptr(), w.value().ptr(), out.ptr(), false);
  if (bias) {
    const T* b = bias->value().ptr();
    for (std::size_t r = 0; r < rows; ++r) {
      T* o = out.ptr() + r * out_dim;
      for (std::size_t j = 0; j < out_dim; ++j) o[j] += b[j];
    }
  }
  Graph<T>* g = &x.graph();
  const Var<T> b = bias ? *bias : Var<T>();
  auto backward = [g, x, w, b, rows, in, out_dim](std::span<const T> dout) {
    const auto& kt = kernels::active<T>();
    if (x.needs_grad()) kt.gemm_nn_acc(rows, in, out_dim, dout.data(), w.value().ptr(), g->grad(x.id()).data());
    if (w.needs_grad()) kt.gemm_tn_acc(rows, in, out_dim, dout.data(), x.value().ptr(), g->grad(w.id()).data());
    if (b.valid() && b.needs_grad()) {
      auto db = g->grad(b.id());
      for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t j = 0; j < out_dim; ++j) db[j] += dout[r * out_dim + j];
      }
    }
  };
  if (bias) return g->record(std::move(out), {x, w, *bias}, std::move(backward));
  return g->record(std::move(out), {x, w}, std::move(backward));
}

// Elementwise unary op; `deriv` maps (input, output) to d(output)/d(input).
template <typename T, typename F, typename D>
Var<T> unary(Var<T> x, F forward, D deriv) {
  Tensor<T> out(x.shape());
  const T* in = x.value().ptr();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = forward(in[i]);
  Graph<T>* g = &x.graph();
  Var<T> y;
  y = g->record(std::move(out), {x}, [g, x, deriv, id = g->size()](std::span<const T> dout) {
    const T* xin = x.value().ptr();
    const T* yv = g->value(static_cast<std::uint32_t>(id)).ptr();
    auto dx = g->grad(x.id());
    for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += dout[i] * deriv(xin[i], yv[i]);
  });
  return y;
}

}  // namespace

template <typename T>
Var<T> affine(Var<T> x, Var<T> w, Var<T> bias) {
  require_same_graph(x, bias, "affine");
  return affine_impl(x, w, &bias);
}

template <typename T>
Var<T> linear(Var<T> x, Var<T> w) {
  return affine_impl<T>(x, w, nullptr);
}

template <typename T>
Var<T> add(Var<T> a, Var<T> b) {
  require_same_graph(a, b, "add");
  require_same_shape(a, b, "add");
  Tensor<T> out(a.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.value()[i] + b.value()[i];
  Graph<T>* g = &a.graph();
  return g->record(std::move(out), {a, b}, [g, a, b](std::span<const T> dout) {
    if (a.needs_grad()) accumulate(g->grad(a.id()), dout);
    if (b.needs_grad()) accumulate(g->grad(b.id()), dout);
  });
}

template <typename T>
Var<T> sub(Var<T> a, Var<T> b) {
  require_same_graph(a, b, "sub");
  require_same_shape(a, b, "sub");
  Tensor<T> out(a.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.value()[i] - b.value()[i];
  Graph<T>* g = &a.graph();
  return g->record(std::move(out), {a, b}, [g, a, b](std::span<const T> dout) {
    if (a.needs_grad()) accumulate(g->grad(a.id()), dout);
    if (b.needs_grad()) {
      auto db = g->grad(b.id());
      for (std::size_t i = 0; i < db.size(); ++i) db[i] -= dout[i];
    }
  });
}

template <typename T>
Var<T> mul(Var<T> a, Var<T> b) {
  require_same_graph(a, b, "mul");
  require_same_shape(a, b, "mul");
  Tensor<T> out(a.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.value()[i] * b.value()[i];
  Graph<T>* g = &a.graph();
  return g->record(std::move(out), {a, b}, [g, a, b](std::span<const T> dout) {
    if (a.needs_grad()) {
      auto da = g->grad(a.id());
      const T* bv = b.value().ptr();
      for (std::size_t i = 0; i < da.size(); ++i) da[i] += dout[i] * bv[i];
    }
    if (b.needs_grad()) {
      auto db = g->grad(b.id());
      const T* av = a.value().ptr();
      for (std::size_t i = 0; i < db.size(); ++i) db[i] += dout[i] * av[i];
    }
  });
}

template <typename T>
Var<T> scale(Var<T> a, T factor) {
  Tensor<T> out(a.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.value()[i] * factor;
  Graph<T>* g = &a.graph();
  return g->record(std::move(out), {a}, [g, a, factor](std::span<const T> dout) {
    auto da = g->grad(a.id());
    for (std::size_t i = 0; i < da.size(); ++i) da[i] += dout[i] * factor;
  });
}

template <typename T>
Var<T> relu(Var<T> x) {
  return unary(
      x, [](T v) { return v > T(0) ? v : T(0); }, [](T in, T) { return in > T(0) ? T(1) : T(0); });
}

template <typename T>
Var<T> sigmoid(Var<T> x) {
  return unary(
      x,
      [](T v) {
        // Branches keep exp() from overflowing for large |v|.
        if (v >= T(0)) return T(1) / (T(1) + std::exp(-v));
        const T e = std::exp(v);
        return e / (T(1) + e);
      },
      [](T, T y) { return y * (T(1) - y); });
}

template <typename T>
Var<T> tanh(Var<T> x) {
  return unary(
      x, [](T v) { return std::tanh(v); }, [](T, T y) { return T(1) - y * y; });
}

template <typename T>
Var<T> softmax(Var<T> x) {
  const std::size_t rank = x.value().rank();
  if (rank != 1 && rank != 2) throw DimensionError("softmax: expected rank 1 or 2, got " + shape_to_string(x.shape()));
  const std::size_t cols = x.shape().back();
  const std::size_t rows = x.size() / cols;
  Tensor<T> out(x.shape());
  for (std::size_t r = 0; r < rows; ++r) {
    const T* in = x.value().ptr() + r * cols;
    T* o = out.ptr() + r * cols;
    const T mx = *std::max_element(in, in + cols);
    T total = 0;
    for (std::size_t j = 0; j < cols; ++j) total += (o[j] = std::exp(in[j] - mx));
    for (std::size_t j = 0; j < cols; ++j) o[j] /= total;
  }
  Graph<T>* g = &x.graph();
  return g->record(std::move(out), {x}, [g, x, rows, cols, id = g->size()](std::span<const T> dout) {
    const T* y = g->value(static_cast<std::uint32_t>(id)).ptr();
    auto dx = g->grad(x.id());
    for (std::size_t r = 0; r < rows; ++r) {
      T inner = 0;
      for (std::size_t j = 0; j < cols; ++j) inner += dout[r * cols + j] * y[r * cols + j];
      for (std::size_t j = 0; j < cols; ++j) dx[r * cols + j] += y[r * cols + j] * (dout[r * cols + j] - inner);
    }
  });
}

template <typename T>
Var<T> sum(Var<T> x) {
  T total = 0;
  for (T v : x.value().data()) total += v;
  Graph<T>* g = &x.graph();
  return g->record(Tensor<T>::scalar(total), {x}, [g, x](std::span<const T> dout) {
    auto dx = g->grad(x.id());
    for (T& v : dx) v += dout[0];
  });
}

template <typename T>
Var<T> reshape(Var<T> x, Shape shape) {
  Tensor<T> out(std::move(shape), std::vector<T>(x.value().data().begin(), x.value().data().end()));
  Graph<T>* g = &x.graph();
  return g->record(std::move(out), {x}, [g, x](std::span<const T> dout) { accumulate(g->grad(x.id()), dout); });
}

template <typename T>
Var<T> concat_cols(Var<T> a, Var<T> b) {
  require_same_graph(a, b, "concat_cols");
  require_rank(a, 2, "concat_cols", "a");
  require_rank(b, 2, "concat_cols", "b");
  const std::size_t rows = a.shape()[0], p = a.shape()[1], q = b.shape()[1];
  if (b.shape()[0] != rows) {
    throw DimensionError("concat_cols: row counts differ, " + shape_to_string(a.shape()) + " vs " +
                         shape_to_string(b.shape()));
  }
  Tensor<T> out({rows, p + q});
  for (std::size_t r = 0; r < rows; ++r) {
    std::copy_n(a.value().ptr() + r * p, p, out.ptr() + r * (p + q));
    std::copy_n(b.value().ptr() + r * q, q, out.ptr() + r * (p + q) + p);
  }
  Graph<T>* g = &a.graph();
  return g->record(std::move(out), {a, b}, [g, a, b, rows, p, q](std::span<const T> dout) {
    if (a.needs_grad()) {
      auto da = g->grad(a.id());
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t j = 0; j < p; ++j) da[r * p + j] += dout[r * (p + q) + j];
    }
    if (b.needs_grad()) {
      auto db = g->grad(b.id());
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t j = 0; j < q; ++j) db[r * q + j] += dout[r * (p + q) + p + j];
    }
  });
}

template <typename T>
Var<T> slice_rows(Var<T> x, std::size_t start, std::size_t count) {
  require_rank(x, 2, "slice_rows", "x");
  const std::size_t rows = x.shape()[0], cols = x.shape()[1];
  if (count == 0 || start + count > rows) {
    throw DimensionError("slice_rows: rows [" + std::to_string(start) + ", " + std::to_string(start + count) +
                         ") out of range for " + shape_to_string(x.shape()));
  }
  Tensor<T> out({count, cols},
                std::vector<T>(x.value().ptr() + start * cols, x.value().ptr() + (start + count) * cols));
  Graph<T>* g = &x.graph();
  return g->record(std::move(out), {x}, [g, x, start, cols](std::span<const T> dout) {
    auto dx = g->grad(x.id());
    for (std::size_t i = 0; i < dout.size(); ++i) dx[start * cols + i] += dout[i];
  });
}

template <typename T>
Var<T> column(Var<T> x, std::size_t j) {
  require_rank(x, 2, "column", "x");
  const std::size_t rows = x.shape()[0], cols = x.shape()[1];
  if (j >= cols) throw DimensionError("column: index " + std::to_string(j) + " out of range for " + shape_to_string(x.shape()));
  Tensor<T> out({rows, 1});
  for (std::size_t r = 0; r < rows; ++r) out[r] = x.value()[r * cols + j];
  Graph<T>* g = &x.graph();
  return g->record(std::move(out), {x}, [g, x, j, rows, cols](std::span<const T> dout) {
    auto dx = g->grad(x.id());
    for (std::size_t r = 0; r < rows; ++r) dx[r * cols + j] += dout[r];
  });
}

template <typename T>
Var<T> scale_rows(Var<T> x, Var<T> s) {
  require_same_graph(x, s, "scale_rows");
  require_rank(x, 2, "scale_rows", "x");
  const std::size_t rows = x.shape()[0], cols = x.shape()[1];
  if (s.size() != rows) {
    throw DimensionError("scale_rows: scale " + shape_to_string(s.shape()) + " does not match rows of " +
                         shape_to_string(x.shape()));
  }
  Tensor<T> out(x.shape());
  for (std::size_t r = 0; r < rows; ++r) {
    const T f = s.value()[r];
    for (std::size_t c = 0; c < cols; ++c) out[r * cols + c] = x.value()[r * cols + c] * f;
  }
  Graph<T>* g = &x.graph();
  return g->record(std::move(out), {x, s}, [g, x, s, rows, cols](std::span<const T> dout) {
    if (x.needs_grad()) {
      auto dx = g->grad(x.id());
      for (std::size_t r = 0; r < rows; ++r) {
        const T f = s.value()[r];
        for (std::size_t c = 0; c < cols; ++c) dx[r * cols + c] += dout[r * cols + c] * f;
      }
    }
    if (s.needs_grad()) {
      auto ds = g->grad(s.id());
      for (std::size_t r = 0; r < rows; ++r) {
        T acc = 0;
        for (std::size_t c = 0; c < cols; ++c) acc += dout[r * cols + c] * x.value()[r * cols + c];
        ds[r] += acc;
      }
    }
  });
}

template <typename T>
Var<T> select_rows(std::span<const std::uint8_t> take_a, Var<T> a, Var<T> b) {
  require_same_graph(a, b, "select_rows");
  require_same_shape(a, b, "select_rows");
  require_rank(a, 2, "select_rows", "a");
  const std::size_t rows = a.shape()[0], cols = a.shape()[1];
  if (take_a.size() != rows) throw DimensionError("select_rows: mask length does not match row count");
  std::vector<std::uint8_t> mask(take_a.begin(), take_a.end());
  Tensor<T> out(a.shape());
  for (std::size_t r = 0; r < rows; ++r) {
    const T* src = (mask[r] ? a.value().ptr() : b.value().ptr()) + r * cols;
    std::copy_n(src, cols, out.ptr() + r * cols);
  }
  Graph<T>* g = &a.graph();
  return g->record(std::move(out), {a, b}, [g, a, b, mask = std::move(mask), cols](std::span<const T> dout) {
    for (std::size_t r = 0; r < mask.size(); ++r) {
      const Var<T>& src = mask[r] ? a : b;
      if (!src.needs_grad()) continue;
      auto d = g->grad(src.id());
      for (std::size_t c = 0; c < cols; ++c) d[r * cols + c] += dout[r * cols + c];
    }
  });
}

template <typename T>
Var<T> embedding(Var<T> table, std::span<const std::int32_t> ids) {
  require_rank(table, 2, "embedding", "table");
  const std::size_t vocab = table.shape()[0], dim = table.shape()[1];
  if (ids.empty()) throw DimensionError("embedding: empty id list");
  std::vector<std::int32_t> rows(ids.begin(), ids.end());
  Tensor<T> out({rows.size(), dim});
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] < 0 || static_cast<std::size_t>(rows[i]) >= vocab) {
      throw DimensionError("embedding: id " + std::to_string(rows[i]) + " out of range for table " +
                           shape_to_string(table.shape()));
    }
    std::copy_n(table.value().ptr() + static_cast<std::size_t>(rows[i]) * dim, dim, out.ptr() + i * dim);
  }
  Graph<T>* g = &table.graph();
  return g->record(std::move(out), {table}, [g, table, rows = std::move(rows), dim](std::span<const T> dout) {
    auto dt = g->grad(table.id());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      T* dst = dt.data() + static_cast<std::size_t>(rows[i]) * dim;
      for (std::size_t c = 0; c < dim; ++c) dst[c] += dout[i * dim + c];
    }
  });
}

template <typename T>
Var<T> cross_entropy(Var<T> logits, std::span<const std::int32_t> targets, std::span<const T> weights) {
  require_rank(logits, 2, "cross_entropy", "logits");
  const std::size_t rows = logits.shape()[0], vocab = logits.shape()[1];
  if (targets.size() != rows || weights.size() != rows) {
    throw DimensionError("cross_entropy: " + std::to_string(targets.size()) + " targets and " +
                         std::to_string(weights.size()) + " weights for logits " + shape_to_string(logits.shape()));
  }
  auto probs = std::make_shared<std::vector<T>>(rows * vocab);
  std::vector<std::int32_t> tgt(targets.begin(), targets.end());
  std::vector<T> w(weights.begin(), weights.end());
  T loss = 0;
  for (std::size_t r = 0; r < rows; ++r) {
    if (tgt[r] < 0 || static_cast<std::size_t>(tgt[r]) >= vocab) {
      throw DimensionError("cross_entropy: target " + std::to_string(tgt[r]) + " out of range for " +
                           std::to_string(vocab) + " classes");
    }
    const T* in = logits.value().ptr() + r * vocab;
    T* p = probs->data() + r * vocab;
    const T mx = *std::max_element(in, in + vocab);
    T total = 0;
    for (std::size_t j = 0; j < vocab; ++j) total += (p[j] = std::exp(in[j] - mx));
    for (std::size_t j = 0; j < vocab; ++j) p[j] /= total;
    if (w[r] != T(0)) loss += w[r] * (std::log(total) + mx - in[tgt[r]]);
  }
  Graph<T>* g = &logits.graph();
  return g->record(Tensor<T>::scalar(loss), {logits},
                   [g, logits, probs, tgt = std::move(tgt), w = std::move(w), vocab](std::span<const T> dout) {
                     auto dl = g->grad(logits.id());
                     for (std::size_t r = 0; r < tgt.size(); ++r) {
                       if (w[r] == T(0)) continue;
                       const T f = dout[0] * w[r];
                       const T* p = probs->data() + r * vocab;
                       T* d = dl.data() + r * vocab;
                       for (std::size_t j = 0; j < vocab; ++j) d[j] += f * p[j];
                       d[tgt[r]] -= f;
                     }
                   });
}

#define DMF_INSTANTIATE_OPS(T)                                                             \
  template Var<T> matmul(Var<T>, Var<T>);                                                  \
  template Var<T> affine(Var<T>, Var<T>, Var<T>);                                          \
  template Var<T> linear(Var<T>, Var<T>);                                                  \
  template Var<T> add(Var<T>, Var<T>);                                                     \
  template Var<T> sub(Var<T>, Var<T>);                                                     \
  template Var<T> mul(Var<T>, Var<T>);                                                     \
  template Var<T> scale(Var<T>, T);                                                        \
  template Var<T> relu(Var<T>);                                                            \
  template Var<T> sigmoid(Var<T>);                                                         \
  template Var<T> tanh(Var<T>);                                                            \
  template Var<T> softmax(Var<T>);                                                         \
  template Var<T> sum(Var<T>);                                                             \
  template Var<T> reshape(Var<T>, Shape);                                                  \
  template Var<T> concat_cols(Var<T>, Var<T>);                                             \
  template Var<T> slice_rows(Var<T>, std::size_t, std::size_t);                            \
  template Var<T> column(Var<T>, std::size_t);                                             \
  template Var<T> scale_rows(Var<T>, Var<T>);                                              \
  template Var<T> select_rows(std::span<const std::uint8_t>, Var<T>, Var<T>);              \
  template Var<T> embedding(Var<T>, std::span<const std::int32_t>);                        \
  template Var<T> cross_entropy(Var<T>, std::span<const std::int32_t>, std::span<const T>);

DMF_INSTANTIATE_OPS(float)
DMF_INSTANTIATE_OPS(double)

}  // namespace dmf
