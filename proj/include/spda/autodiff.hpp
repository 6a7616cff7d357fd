#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "spda/tensor.hpp"

namespace spda {

struct Node;
using Var = std::shared_ptr<Node>;

/// One tape node: a value plus the rule that pushes its gradient to its inputs.
/// The tape is the DAG of Nodes reachable from a loss; backward() walks it in
/// reverse topological order exactly once per node.
struct Node {
  Tensor value;
  Tensor grad;  // empty until first touched; accumulates across backward calls
  bool requires_grad = false;
  std::vector<Var> inputs;
  std::function<void(Node&)> backprop;
  const char* op = "leaf";
};

/// Leaf that gradients flow past but not into (inputs, labels-as-data).
Var constant(Tensor value);

/// Leaf that collects gradients (weights).
Var parameter(Tensor value);

Var make_node(Tensor value, std::vector<Var> inputs,
              std::function<void(Node&)> backprop, const char* op);

/// Gradient buffer of v, allocated zero on first use.
Tensor& grad_buffer(const Var& v);

/// Reverse-mode sweep from a scalar root. Seeds d(root)/d(root) = 1 and
/// accumulates into every reachable grad buffer.
void backward(const Var& root);

}  // namespace spda
