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

#include "spikegate/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "spikegate/error.hpp"
#include "spikegate/ops.hpp"

namespace spikegate {

namespace {

std::vector<double> contraction_weights(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(0.5, 1.5);
  std::vector<double> w(n);
  for (double& v : w) v = dist(rng);
  return w;
}

double contracted_value(const DifferentiableMap& f, const Tensor& x,
                        const std::vector<double>& w) {
  Tape tape;
  tape.set_grad_enabled(false);
  Var out = f(tape.constant(x));
  const Tensor& y = out.value();
  if (!y.all_finite()) throw NumericError("finite_difference_check: non-finite probe value");
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) s += w[i] * y[i];
  return s;
}

}  // namespace

double finite_difference_check(const DifferentiableMap& f, const Tensor& point, double eps,
                               std::uint64_t weight_seed) {
  Parameter probe("probe", point);
  Tape tape;
  Var y = f(tape.param(probe));
  const std::vector<double> w = contraction_weights(y.size(), weight_seed);
  Var loss = sum_all(mul(y, tape.constant(Tensor(y.shape(), w))));
  tape.backward(loss);
  const Tensor& analytic = probe.grad;

  double worst = 0.0;
  Tensor x = point;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double orig = x[i];
    x[i] = orig + eps;
    const double up = contracted_value(f, x, w);
    x[i] = orig - eps;
    const double down = contracted_value(f, x, w);
    x[i] = orig;
    const double numeric = (up - down) / (2.0 * eps);
    const double err = std::abs(analytic[i] - numeric) / (std::abs(analytic[i]) + 1e-8);
    worst = std::max(worst, err);
  }
  return worst;
}

}  // namespace spikegate
