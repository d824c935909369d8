#include "ack/nn/tensor.hpp"

#include <unordered_set>

namespace ack::nn {

namespace {
thread_local bool g_grad_enabled = true;
}

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

Tensor Tensor::constant(Matrix value) {
  auto node = std::make_shared<detail::Node>();
  node->value = std::move(value);
  return Tensor(std::move(node));
}

Tensor Tensor::parameter(Matrix value) {
  auto node = std::make_shared<detail::Node>();
  node->value = std::move(value);
  node->requires_grad = true;
  return Tensor(std::move(node));
}

Matrix Tensor::grad() const {
  if (!node_) return {};
  if (node_->grad.size() == 0) return Matrix::Zero(node_->value.rows(), node_->value.cols());
  return node_->grad;
}

Tensor make_op(Matrix value, std::vector<Tensor> parents, std::function<void(detail::Node&)> backward) {
  auto node = std::make_shared<detail::Node>();
  node->value = std::move(value);
  if (g_grad_enabled) {
    bool any = false;
    for (const auto& p : parents) any = any || p.requires_grad();
    if (any) {
      node->requires_grad = true;
      node->parents.reserve(parents.size());
      for (auto& p : parents) node->parents.push_back(p.node_);
      node->backward = std::move(backward);
    }
  }
  return Tensor(std::move(node));
}

void Tensor::backward() const {
  if (!node_ || !node_->requires_grad) return;
  // Iterative post-order DFS yields a topological order.
  std::vector<detail::Node*> order;
  std::unordered_set<detail::Node*> visited;
  std::vector<std::pair<detail::Node*, std::size_t>> stack;
  stack.emplace_back(node_.get(), 0);
  visited.insert(node_.get());
  while (!stack.empty()) {
    auto& [n, next] = stack.back();
    if (next < n->parents.size()) {
      detail::Node* p = n->parents[next++].get();
      if (p->requires_grad && visited.insert(p).second) stack.emplace_back(p, 0);
    } else {
      order.push_back(n);
      stack.pop_back();
    }
  }
  node_->accumulate(Matrix::Ones(node_->value.rows(), node_->value.cols()));
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    detail::Node* n = *it;
    if (!n->backward || n->grad.size() == 0) continue;
    n->backward(*n);
    n->grad.resize(0, 0);
  }
}

}  // namespace ack::nn
