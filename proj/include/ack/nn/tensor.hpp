#pragma once

#include <Eigen/Core>
#include <functional>
#include <memory>
#include <vector>

namespace ack::nn {

using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

namespace detail {

struct Node {
  Matrix value;
  Matrix grad;  // empty until something flows into it
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward;

  template <typename Expr>
  void accumulate(const Expr& g) {
    if (!requires_grad) return;
    if (grad.size() == 0) {
      grad = g;
    } else {
      grad += g;
    }
  }
};

}  // namespace detail

// Reverse-mode autodiff handle. A tensor is a shared reference to one node
// of the computation graph; copies alias the same node.
class Tensor {
 public:
  Tensor() = default;

  static Tensor constant(Matrix value);
  static Tensor parameter(Matrix value);
  static Tensor scalar(double value) { return constant(Matrix::Constant(1, 1, value)); }

  bool defined() const { return static_cast<bool>(node_); }
  bool requires_grad() const { return node_ && node_->requires_grad; }

  const Matrix& value() const { return node_->value; }
  // Leaves only: optimizer updates and finite-difference probes.
  Matrix& mutable_value() { return node_->value; }

  // Zero matrix of the value's shape when nothing has flowed back yet.
  Matrix grad() const;
  bool has_grad() const { return node_ && node_->grad.size() != 0; }
  void zero_grad() const {
    if (node_) node_->grad.resize(0, 0);
  }

  Index rows() const { return node_->value.rows(); }
  Index cols() const { return node_->value.cols(); }
  double item() const { return node_->value(0, 0); }

  // Seeds d(self)/d(self) = 1 for a 1x1 tensor and propagates to every
  // leaf that requires a gradient. Intermediate gradients are released.
  void backward() const;

  const std::shared_ptr<detail::Node>& node() const { return node_; }

 private:
  explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}
  friend Tensor make_op(Matrix value, std::vector<Tensor> parents, std::function<void(detail::Node&)> backward);

  std::shared_ptr<detail::Node> node_;
};

// Records an op. When recording is disabled or no parent needs a gradient the
// result is a constant and `backward` is dropped.
Tensor make_op(Matrix value, std::vector<Tensor> parents, std::function<void(detail::Node&)> backward);

bool grad_enabled();

class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

}  // namespace ack::nn
