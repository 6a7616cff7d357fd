#include "spda/autodiff.hpp"

#include <unordered_set>
#include <utility>

#include "spda/errors.hpp"

namespace spda {

Var constant(Tensor value) {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  return n;
}

Var parameter(Tensor value) {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  n->requires_grad = true;
  return n;
}

Var make_node(Tensor value, std::vector<Var> inputs,
              std::function<void(Node&)> backprop, const char* op) {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  n->inputs = std::move(inputs);
  n->op = op;
  for (const Var& in : n->inputs)
    if (in->requires_grad) n->requires_grad = true;
  if (n->requires_grad) n->backprop = std::move(backprop);
  return n;
}

Tensor& grad_buffer(const Var& v) {
  if (!v->grad.same_shape(v->value)) v->grad = Tensor(v->value.shape());
  return v->grad;
}

void backward(const Var& root) {
  if (!root) throw StateError("backward on empty graph");
  if (root->value.size() != 1)
    throw DimensionError("backward needs a scalar root, got shape " +
                         shape_str(root->value.shape()));
  if (!root->requires_grad) return;

  // Iterative postorder DFS: every node lands after all of its inputs.
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, size_t>> stack;
  stack.emplace_back(root.get(), 0);
  visited.insert(root.get());
  while (!stack.empty()) {
    auto& top = stack.back();
    if (top.second < top.first->inputs.size()) {
      Node* child = top.first->inputs[top.second].get();
      ++top.second;
      if (child->requires_grad && visited.insert(child).second)
        stack.emplace_back(child, 0);
    } else {
      order.push_back(top.first);
      stack.pop_back();
    }
  }

  grad_buffer(root)[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->backprop) n->backprop(*n);
  }
}

}  // namespace spda
