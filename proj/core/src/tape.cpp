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

#include "spikegate/tape.hpp"

#include <cmath>

#include "spikegate/error.hpp"

namespace spikegate {

Parameter::Parameter(std::string name, Tensor v, bool learnable)
    : value(std::move(v)), grad(value.shape()), name_(std::move(name)), learnable_(learnable) {}

Parameter& ParameterSet::add(std::string name, Tensor value, bool learnable) {
  if (find(name) != nullptr) throw ArgumentError("duplicate parameter name: " + name);
  params_.push_back(std::make_unique<Parameter>(std::move(name), std::move(value), learnable));
  return *params_.back();
}

Parameter* ParameterSet::find(std::string_view name) {
  for (auto& p : params_) {
    if (p->name() == name) return p.get();
  }
  return nullptr;
}

Parameter& ParameterSet::get(std::string_view name) {
  if (Parameter* p = find(name)) return *p;
  throw ArgumentError("unknown parameter: " + std::string(name));
}

const Parameter& ParameterSet::get(std::string_view name) const {
  for (const auto& p : params_) {
    if (p->name() == name) return *p;
  }
  throw ArgumentError("unknown parameter: " + std::string(name));
}

void ParameterSet::zero_grad() {
  for (auto& p : params_) p->zero_grad();
}

double ParameterSet::grad_norm() const {
  double sq = 0.0;
  for (const auto& p : params_) {
    if (!p->learnable()) continue;
    for (double g : p->grad.values()) sq += g * g;
  }
  return std::sqrt(sq);
}

std::size_t ParameterSet::numel() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p->value.size();
  return n;
}

const Tensor& Var::value() const { return tape_->value(id_); }
bool Var::requires_grad() const { return tape_->requires_grad(id_); }

Var Tape::constant(Tensor value) {
  if (!value.all_finite()) throw NumericError("non-finite constant entered the tape");
  Node n;
  n.op = "constant";
  n.value = std::move(value);
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Var Tape::param(Parameter& p) {
  if (!p.value.all_finite()) {
    throw NumericError("parameter '" + p.name() + "' holds non-finite values");
  }
  Node n;
  n.op = "param:" + p.name();
  n.value = p.value;
  if (grad_enabled_ && p.learnable()) {
    n.param = &p;
    n.requires_grad = true;
  }
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Var Tape::record(std::string_view op, Tensor value, std::vector<Var> inputs, BackwardFn fn) {
  if (!value.all_finite()) {
    throw NumericError("non-finite output in op '" + std::string(op) + "' (shape " +
                       shape_str(value.shape()) + ")");
  }
  Node n;
  n.op = std::string(op);
  n.value = std::move(value);
  bool needs = false;
  for (const Var& in : inputs) {
    if (in.valid() && &in.tape() != this) {
      throw ArgumentError("op '" + n.op + "' mixes values from different tapes");
    }
    n.inputs.push_back(in.id());
    needs = needs || nodes_[in.id()].requires_grad;
  }
  if (needs && grad_enabled_) {
    n.requires_grad = true;
    n.backward = std::move(fn);
  }
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

void Tape::backward(Var loss) {
  if (loss.size() != 1) {
    throw ShapeError("backward: loss must be a scalar, got shape " + shape_str(loss.shape()));
  }
  for (Node& n : nodes_) n.grad = Tensor();
  visits_ = 0;
  Node& root = nodes_[loss.id()];
  if (!root.requires_grad) return;
  root.grad = Tensor(root.value.shape(), 1.0);

  std::vector<Tensor*> in_grads;
  for (int i = loss.id(); i >= 0; --i) {
    Node& n = nodes_[i];
    if (!n.requires_grad || n.grad.size() == 0) continue;
    if (n.param != nullptr) {
      Tensor& acc = n.param->grad;
      for (std::size_t k = 0; k < acc.size(); ++k) acc[k] += n.grad[k];
      continue;
    }
    if (!n.backward) continue;
    in_grads.clear();
    for (int in : n.inputs) {
      Node& src = nodes_[in];
      if (!src.requires_grad) {
        in_grads.push_back(nullptr);
        continue;
      }
      if (src.grad.size() == 0) src.grad = Tensor(src.value.shape());
      in_grads.push_back(&src.grad);
    }
    n.backward(n.grad, in_grads);
    ++visits_;
    for (int in : n.inputs) {
      const Node& src = nodes_[in];
      if (src.requires_grad && !src.grad.all_finite()) {
        throw NumericError("non-finite gradient flowing out of op '" + n.op + "'");
      }
    }
  }
}

const Tensor& Tape::grad(Var v) const {
  const Node& n = nodes_.at(v.id());
  if (n.grad.size() == n.value.size()) return n.grad;
  // Unreached node: report zeros with the right shape.
  auto& self = const_cast<Node&>(n);
  self.grad = Tensor(n.value.shape());
  return n.grad;
}

}  // namespace spikegate
