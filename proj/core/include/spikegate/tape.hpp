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

#include <deque>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "spikegate/tensor.hpp"

namespace spikegate {

/// A named trainable tensor with its gradient accumulator.
class Parameter {
 public:
  Parameter(std::string name, Tensor value, bool learnable = true);

  const std::string& name() const { return name_; }
  bool learnable() const { return learnable_; }
  void set_learnable(bool on) { learnable_ = on; }

  Tensor value;
  Tensor grad;

  void zero_grad() { grad.fill(0.0); }

 private:
  std::string name_;
  bool learnable_;
};

/// Owning registry of parameters with stable addresses, in creation order.
class ParameterSet {
 public:
  Parameter& add(std::string name, Tensor value, bool learnable = true);

  Parameter& get(std::string_view name);
  const Parameter& get(std::string_view name) const;
  Parameter* find(std::string_view name);

  std::size_t size() const { return params_.size(); }
  Parameter& operator[](std::size_t i) { return *params_[i]; }
  const Parameter& operator[](std::size_t i) const { return *params_[i]; }

  void zero_grad();
  /// Global L2 norm over the gradients of learnable parameters.
  double grad_norm() const;
  std::size_t numel() const;

  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

 private:
  std::vector<std::unique_ptr<Parameter>> params_;
};

class Tape;

/// Handle to a value recorded on a tape. Cheap to copy; valid while the
/// owning tape is alive.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, int id) : tape_(tape), id_(id) {}

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  std::size_t size() const { return value().size(); }
  bool requires_grad() const;
  Tape& tape() const { return *tape_; }
  int id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  Tape* tape_ = nullptr;
  int id_ = -1;
};

/// Gradient callback of a recorded op. `out_grad` is dL/d(output);
/// `in_grads[i]` is the accumulator for input i, or null when input i does
/// not need a gradient. Callbacks must add into the accumulators.
using BackwardFn =
    std::function<void(const Tensor& out_grad, std::span<Tensor* const> in_grads)>;

/// Define-by-run reverse-mode tape. Nodes are appended in execution order,
/// which is a topological order, so backward is a single reverse sweep.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// When disabled, parameters enter as constants and no callbacks are kept.
  void set_grad_enabled(bool on) { grad_enabled_ = on; }
  bool grad_enabled() const { return grad_enabled_; }

  Var constant(Tensor value);
  Var param(Parameter& p);

  /// Records the result of a primitive. The output is checked for
  /// non-finite values; the callback is kept only if some input needs grad.
  Var record(std::string_view op, Tensor value, std::vector<Var> inputs, BackwardFn fn);

  /// Reverse sweep from a scalar loss. Parameter gradients accumulate.
  void backward(Var loss);

  /// dL/d(v) from the most recent backward; zeros if v was not reached.
  const Tensor& grad(Var v) const;

  const Tensor& value(int id) const { return nodes_[id].value; }
  bool requires_grad(int id) const { return nodes_[id].requires_grad; }
  std::size_t size() const { return nodes_.size(); }
  const std::string& op_name(int id) const { return nodes_[id].op; }
  /// Number of callbacks executed by the most recent backward.
  std::size_t last_backward_visits() const { return visits_; }

 private:
  struct Node {
    std::string op;
    Tensor value;
    Tensor grad;
    std::vector<int> inputs;
    BackwardFn backward;
    Parameter* param = nullptr;
    bool requires_grad = false;
  };

  std::deque<Node> nodes_;  // stable references across record()
  bool grad_enabled_ = true;
  std::size_t visits_ = 0;
};

}  // namespace spikegate
