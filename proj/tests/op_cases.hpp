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

// Random small instances of every differentiable op, shared by the property
// suite and the acceptance runner.

#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "test_util.hpp"

namespace dmf::testing {

struct OpInstance {
  std::vector<Tensor<double>> inputs;
  GraphFn fn;
};

struct OpCase {
  std::string name;
  std::function<OpInstance(Rng&)> make;
};

inline std::size_t dim_in(Rng& rng, std::size_t lo, std::size_t hi) {
  return lo + static_cast<std::size_t>(rng.below(hi - lo + 1));
}

// ReLU has a kink at zero; keep samples clear of it so central differences
// with step 1e-5 never straddle it.
inline Tensor<double> away_from_zero(Tensor<double> t) {
  for (auto& v : t.data()) {
    if (std::abs(v) < 1e-3) v = v < 0 ? -1e-3 : 1e-3;
  }
  return t;
}

inline std::vector<OpCase> op_cases() {
  using V = std::vector<Var<double>>;
  std::vector<OpCase> cases;
  cases.push_back({"matmul", [](Rng& r) {
                     const std::size_t m = dim_in(r, 1, 4), k = dim_in(r, 1, 5), n = dim_in(r, 1, 4);
                     return OpInstance{{random_tensor({m, k}, r), random_tensor({k, n}, r)},
                                       [](Graph<double>&, const V& v) { return matmul(v[0], v[1]); }};
                   }});
  cases.push_back({"affine", [](Rng& r) {
                     const std::size_t b = dim_in(r, 1, 4), d = dim_in(r, 1, 5), h = dim_in(r, 1, 4);
                     return OpInstance{{random_tensor({b, d}, r), random_tensor({h, d}, r), random_tensor({h}, r)},
                                       [](Graph<double>&, const V& v) { return affine(v[0], v[1], v[2]); }};
                   }});
  cases.push_back({"linear", [](Rng& r) {
                     const std::size_t b = dim_in(r, 1, 4), d = dim_in(r, 1, 5), h = dim_in(r, 1, 4);
                     return OpInstance{{random_tensor({b, d}, r), random_tensor({h, d}, r)},
                                       [](Graph<double>&, const V& v) { return linear(v[0], v[1]); }};
                   }});
  auto binary = [](std::string name, Var<double> (*op)(Var<double>, Var<double>)) {
    return OpCase{name, [op](Rng& r) {
                    const Shape s{dim_in(r, 1, 4), dim_in(r, 1, 4)};
                    return OpInstance{{random_tensor(s, r), random_tensor(s, r)},
                                      [op](Graph<double>&, const V& v) { return op(v[0], v[1]); }};
                  }};
  };
  cases.push_back(binary("add", &add<double>));
  cases.push_back(binary("sub", &sub<double>));
  cases.push_back(binary("mul", &mul<double>));
  cases.push_back({"scale", [](Rng& r) {
                     const double f = r.uniform(-3, 3);
                     return OpInstance{{random_tensor({dim_in(r, 1, 6)}, r)},
                                       [f](Graph<double>&, const V& v) { return scale(v[0], f); }};
                   }});
  auto unary = [](std::string name, Var<double> (*op)(Var<double>), double span, bool kink) {
    return OpCase{name, [op, span, kink](Rng& r) {
                    auto x = random_tensor({dim_in(r, 1, 4), dim_in(r, 1, 4)}, r, -span, span);
                    if (kink) x = away_from_zero(std::move(x));
                    return OpInstance{{x}, [op](Graph<double>&, const V& v) { return op(v[0]); }};
                  }};
  };
  cases.push_back(unary("relu", &relu<double>, 2.0, true));
  cases.push_back(unary("sigmoid", &sigmoid<double>, 4.0, false));
  cases.push_back(unary("tanh", &tanh<double>, 3.0, false));
  cases.push_back(unary("softmax_rows", &softmax<double>, 4.0, false));
  cases.push_back(unary("sum", &sum<double>, 2.0, false));
  cases.push_back({"softmax_vector", [](Rng& r) {
                     return OpInstance{{random_tensor({dim_in(r, 1, 8)}, r, -4, 4)},
                                       [](Graph<double>&, const V& v) { return softmax(v[0]); }};
                   }});
  cases.push_back({"reshape", [](Rng& r) {
                     const std::size_t a = dim_in(r, 1, 3), b = dim_in(r, 1, 4);
                     return OpInstance{{random_tensor({a, b}, r)},
                                       [a, b](Graph<double>&, const V& v) { return reshape(v[0], {b * a}); }};
                   }});
  cases.push_back({"concat_cols", [](Rng& r) {
                     const std::size_t b = dim_in(r, 1, 4);
                     return OpInstance{{random_tensor({b, dim_in(r, 1, 4)}, r), random_tensor({b, dim_in(r, 1, 4)}, r)},
                                       [](Graph<double>&, const V& v) { return concat_cols(v[0], v[1]); }};
                   }});
  cases.push_back({"slice_rows", [](Rng& r) {
                     const std::size_t rows = dim_in(r, 1, 6), start = dim_in(r, 0, rows - 1);
                     const std::size_t count = dim_in(r, 1, rows - start);
                     return OpInstance{{random_tensor({rows, dim_in(r, 1, 3)}, r)},
                                       [start, count](Graph<double>&, const V& v) {
                                         return slice_rows(v[0], start, count);
                                       }};
                   }});
  cases.push_back({"column", [](Rng& r) {
                     const std::size_t cols = dim_in(r, 1, 5), j = dim_in(r, 0, cols - 1);
                     return OpInstance{{random_tensor({dim_in(r, 1, 4), cols}, r)},
                                       [j](Graph<double>&, const V& v) { return column(v[0], j); }};
                   }});
  cases.push_back({"scale_rows", [](Rng& r) {
                     const std::size_t b = dim_in(r, 1, 4);
                     return OpInstance{{random_tensor({b, dim_in(r, 1, 4)}, r), random_tensor({b, 1}, r)},
                                       [](Graph<double>&, const V& v) { return scale_rows(v[0], v[1]); }};
                   }});
  cases.push_back({"select_rows", [](Rng& r) {
                     const Shape s{dim_in(r, 1, 5), dim_in(r, 1, 3)};
                     std::vector<std::uint8_t> mask(s[0]);
                     for (auto& m : mask) m = r.bernoulli(0.5) ? 1 : 0;
                     return OpInstance{{random_tensor(s, r), random_tensor(s, r)},
                                       [mask](Graph<double>&, const V& v) {
                                         return select_rows<double>(mask, v[0], v[1]);
                                       }};
                   }});
  cases.push_back({"embedding", [](Rng& r) {
                     const std::size_t vocab = dim_in(r, 1, 6);
                     std::vector<std::int32_t> ids(dim_in(r, 1, 7));
                     for (auto& id : ids) id = static_cast<std::int32_t>(r.below(vocab));
                     return OpInstance{{random_tensor({vocab, dim_in(r, 1, 4)}, r)},
                                       [ids](Graph<double>&, const V& v) { return embedding<double>(v[0], ids); }};
                   }});
  cases.push_back({"cross_entropy", [](Rng& r) {
                     const std::size_t b = dim_in(r, 1, 5), n = dim_in(r, 2, 6);
                     std::vector<std::int32_t> targets(b);
                     std::vector<double> weights(b);
                     for (std::size_t i = 0; i < b; ++i) {
                       targets[i] = static_cast<std::int32_t>(r.below(n));
                       weights[i] = r.bernoulli(0.2) ? 0.0 : r.uniform(0.1, 2.0);
                     }
                     return OpInstance{{random_tensor({b, n}, r, -3, 3)},
                                       [targets, weights](Graph<double>&, const V& v) {
                                         return cross_entropy<double>(v[0], targets, weights);
                                       }};
                   }});
  cases.push_back({"conv2d", [](Rng& r) {
                     const std::size_t c = dim_in(r, 1, 3), o = dim_in(r, 1, 3), k = dim_in(r, 1, 3);
                     const std::size_t stride = dim_in(r, 1, 2), pad = dim_in(r, 0, 1);
                     const std::size_t h = dim_in(r, k, 6), w = dim_in(r, k, 6);
                     const bool batched = r.bernoulli(0.5);
                     Shape in = batched ? Shape{dim_in(r, 1, 2), c, h, w} : Shape{c, h, w};
                     return OpInstance{{random_tensor(in, r), random_tensor({o, c, k, k}, r), random_tensor({o}, r)},
                                       [stride, pad](Graph<double>&, const V& v) {
                                         return conv2d(v[0], v[1], v[2], stride, pad);
                                       }};
                   }});
  cases.push_back({"gru_cell", [](Rng& r) {
                     const std::size_t b = dim_in(r, 1, 3), d = dim_in(r, 1, 4), h = dim_in(r, 1, 4);
                     return OpInstance{{random_tensor({b, d}, r), random_tensor({b, h}, r),
                                        random_tensor({3 * h, d}, r), random_tensor({3 * h, h}, r),
                                        random_tensor({3 * h}, r)},
                                       [](Graph<double>&, const V& v) {
                                         return gru_cell(v[0], v[1], GruVars<double>{v[2], v[3], v[4]});
                                       }};
                   }});
  return cases;
}

}  // namespace dmf::testing
