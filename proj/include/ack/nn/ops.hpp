#pragma once

#include <Eigen/Core>
#include <optional>
#include <span>
#include <vector>

#include "ack/nn/tensor.hpp"

namespace ack::nn {

// Shape errors throw ack::Error(DimensionMismatch).

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);  // elementwise
Tensor scale(const Tensor& a, double s);
Tensor add_row(const Tensor& x, const Tensor& row);  // x (n x d) + row (1 x d) on every row
Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias);  // x W + b, bias may be undefined

Tensor tanh(const Tensor& x);
Tensor gelu(const Tensor& x);  // tanh approximation

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps = 1e-5);

Tensor concat_rows(const std::vector<Tensor>& parts);
Tensor concat_cols(const std::vector<Tensor>& parts);
Tensor slice_rows(const Tensor& x, Index start, Index count);
Tensor transpose(const Tensor& x);
Tensor repeat_rows(const Tensor& row, Index count);  // (1 x d) -> (count x d)
Tensor slice_cols(const Tensor& x, Index start, Index count);
Tensor mean_of(const std::vector<Tensor>& parts);  // elementwise mean of equal-shape tensors
Tensor sum_all(const Tensor& x);                   // 1 x 1
Tensor weighted_sum(const Tensor& x, const Matrix& weights);  // sum(x .* weights), 1 x 1

Tensor softmax_rows(const Tensor& x);
Tensor log_softmax_rows(const Tensor& x);
// -log softmax(logits)[target] for a 1 x C row.
Tensor cross_entropy(const Tensor& logits, Index target);

Tensor gather_rows(const Tensor& table, std::span<const int> ids);

// Multi-head scaled dot-product probabilities. Q is (n x d), K is (L x d),
// d = heads * head_dim. Returns P of shape (n x heads*L) where block h holds
// softmax(Q_h K_h^T / sqrt(head_dim) + wa_h * A + ba_h). `adjacency` (n x L)
// and the (1 x heads) scalars wa/ba are optional. `logit_mask` (n x L) is
// added to every head's logits; use 0 / -infinity to block pairs. Every row
// needs at least one open entry.
Tensor attention_probs(const Tensor& q, const Tensor& k, int heads, const Matrix* adjacency = nullptr,
                       const Tensor& wa = {}, const Tensor& ba = {}, const Matrix* logit_mask = nullptr);

// Per-head P_h V_h, heads concatenated along columns: (n x d).
Tensor attention_apply(const Tensor& probs, const Tensor& v, int heads);

// Mean over the head blocks of P: (n x L).
Tensor head_mean(const Tensor& probs, int heads);

// Value-level stabilized softmax over a vector. Masked entries (mask[i] ==
// false) receive exactly 0. Throws AllMasked.
Eigen::VectorXd softmax(const Eigen::VectorXd& x, const std::optional<std::vector<bool>>& mask = std::nullopt);

}  // namespace ack::nn
