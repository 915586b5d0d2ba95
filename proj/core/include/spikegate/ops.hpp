// Copyright 2026 The spikegate Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <vector>

#include "spikegate/tape.hpp"
#include "spikegate/tensor.hpp"

namespace spikegate {

/// Plain (untaped) kernels. The differentiable ops below wrap these.
namespace kernels {

/// C = op(A) * op(B) for rank-2 tensors.
Tensor matmul(const Tensor& a, const Tensor& b, bool trans_a = false, bool trans_b = false);

/// Channels-last convolution. x: [N,H,W,Cin], w: [Cout,k,k,Cin] -> [N,Ho,Wo,Cout].
/// Zero padding.
Tensor conv2d(const Tensor& x, const Tensor& w, std::size_t stride = 1, std::size_t pad = 1);

/// Channels-last depthwise convolution. x: [N,H,W,C], w: [C,k,k] -> [N,Ho,Wo,C].
Tensor depthwise_conv2d(const Tensor& x, const Tensor& w, std::size_t stride = 1,
                        std::size_t pad = 1);

double sigmoid(double x);
double softplus(double x);

}  // namespace kernels

// Elementwise binary ops broadcast `b` when its shape is a suffix of a's
// shape (row/channel vectors) or when b holds a single value.
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);

Var scale(Var a, double c);
Var add_scalar(Var a, double c);
Var neg(Var a);
Var square(Var a);

Var matmul(Var a, Var b, bool trans_a = false, bool trans_b = false);
Var conv2d(Var x, Var w, std::size_t stride = 1, std::size_t pad = 1);
Var depthwise_conv2d(Var x, Var w, std::size_t stride = 1, std::size_t pad = 1);

Var sigmoid(Var a);
Var softplus(Var a);
Var exp(Var a);
Var log(Var a);
/// tanh-approximated GELU.
Var gelu(Var a);
/// Gradient passes only where lo < a < hi.
Var clamp(Var a, double lo, double hi);

Var sum_all(Var a);
Var mean_all(Var a);
/// Reductions over the last axis: [..., n] -> [...].
Var sum_last(Var a);
Var mean_last(Var a);
Var max_last(Var a);

Var concat(const std::vector<Var>& parts, std::size_t axis);
/// Stacks equally shaped values along a new leading axis.
Var stack(const std::vector<Var>& parts);
/// Index `i` along the leading axis: [n, ...] -> [...].
Var select(Var a, std::size_t i);
/// Same value with the gradient path cut.
Var detach(Var a);
Var reshape(Var a, Shape shape);
/// Rows are vectors along the last axis.
Var l2_normalize(Var a, double eps = 1e-12);

}  // namespace spikegate
