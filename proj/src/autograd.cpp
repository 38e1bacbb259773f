/* Copyright 2026 The MelGAN-CPP Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "melgan/autograd.hpp"

#include <algorithm>

#include "melgan/errors.hpp"

namespace melgan {

bool Graph::needs_record(std::initializer_list<const Tensor*> inputs) const {
  if (!recording_) return false;
  return std::any_of(inputs.begin(), inputs.end(), [](const Tensor* t) {
    return t && t->defined() && t->requires_grad();
  });
}

bool Graph::produced_here(const Tensor& t) const {
  return t.defined() && t.impl_->graph == this && t.impl_->node < nodes_.size() &&
         nodes_[t.impl_->node].output.impl_ == t.impl_;
}

std::size_t Graph::node_of(const Tensor& t) const { return t.impl_->node; }

void Graph::record(Tensor& output, std::vector<Tensor> inputs, BackwardFn fn) {
  output.impl().requires_grad = true;
  output.impl().graph = this;
  output.impl().node = nodes_.size();
  nodes_.push_back(Node{std::move(inputs), output, std::move(fn)});
}

void Graph::clear() {
  for (auto& n : nodes_) n.output.impl().graph = nullptr;
  nodes_.clear();
}

void backward(Graph& graph, Tensor& root) {
  if (!root.defined()) throw Error("backward: undefined root");
  if (!root.is_scalar())
    throw ShapeError("time", "backward root must be a scalar, got " + root.shape().str());
  if (!graph.produced_here(root))
    throw Error("backward: root was not produced by this graph (detached graph)");

  const std::size_t last = graph.node_of(root);
  std::vector<char> reached(last + 1, 0);
  reached[last] = 1;
  for (std::size_t i = last + 1; i-- > 0;) {
    if (!reached[i]) continue;
    for (const Tensor& in : graph.nodes_[i].inputs)
      if (graph.produced_here(in)) reached[graph.node_of(in)] = 1;
  }

  for (std::size_t i = 0; i <= last; ++i) {
    if (!reached[i]) continue;
    Tensor& out = graph.nodes_[i].output;
    out.ensure_grad();
    out.zero_grad();
  }
  root.grad()[0] = 1.0f;

  for (std::size_t i = last + 1; i-- > 0;) {
    if (!reached[i]) continue;
    auto& node = graph.nodes_[i];
    for (Tensor& in : node.inputs)
      if (in.defined() && in.requires_grad()) in.ensure_grad();
    node.fn(node.output.grad());
  }
}

}  // namespace melgan
