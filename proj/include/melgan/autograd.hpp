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

#pragma once

#include <functional>
#include <span>
#include <vector>

#include "melgan/tensor.hpp"

namespace melgan {

/// Tape of executed differentiable operations.
///
/// Ops append a node when recording is enabled and at least one input
/// requires a gradient; the node's output then requires a gradient too.
/// A non-recording graph is the no-grad mode: outputs carry no producer.
class Graph {
 public:
  // Receives the gradient of the node output; accumulates into the
  // gradient buffers of whichever captured inputs require one.
  using BackwardFn = std::function<void(std::span<const float> grad_out)>;

  explicit Graph(bool recording = true) : recording_(recording) {}
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  bool recording() const noexcept { return recording_; }
  std::size_t size() const noexcept { return nodes_.size(); }

  // True when an op on these inputs must be recorded.
  bool needs_record(std::initializer_list<const Tensor*> inputs) const;

  void record(Tensor& output, std::vector<Tensor> inputs, BackwardFn fn);

  // Releases all nodes (and the activations they hold).
  void clear();

  friend void backward(Graph& graph, Tensor& root);

 private:
  struct Node {
    std::vector<Tensor> inputs;
    Tensor output;
    BackwardFn fn;
  };

  bool produced_here(const Tensor& t) const;
  std::size_t node_of(const Tensor& t) const;

  bool recording_;
  std::vector<Node> nodes_;
};

/// Accumulates d(root)/d(leaf) into every requires-grad leaf reachable
/// from `root`. Intermediate gradients are reset on each call, so calling
/// twice doubles leaf gradients.
void backward(Graph& graph, Tensor& root);

}  // namespace melgan
