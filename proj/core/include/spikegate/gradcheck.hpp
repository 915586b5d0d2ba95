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

#include <cstdint>
#include <functional>

#include "spikegate/tape.hpp"

namespace spikegate {

/// A map built from taped ops. It is re-run on a fresh tape per probe.
using DifferentiableMap = std::function<Var(Var)>;

/// Compares the taped gradient of f at `point` against central differences.
///
/// Vector-valued maps are contracted with fixed pseudo-random weights so a
/// single backward covers every output. Returns
/// max_i |analytic_i - numeric_i| / (|analytic_i| + 1e-8).
/// Throws NumericError if f is non-finite at any probe point.
double finite_difference_check(const DifferentiableMap& f, const Tensor& point,
                               double eps = 1e-5, std::uint64_t weight_seed = 7);

}  // namespace spikegate
