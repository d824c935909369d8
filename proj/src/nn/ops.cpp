#include "ack/nn/ops.hpp"

#include <cmath>
#include <limits>

#include "ack/error.hpp"

namespace ack::nn {

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw Error(ErrorCode::DimensionMismatch, what);
}

const Matrix& pv(detail::Node& n, std::size_t i) { return n.parents[i]->value; }
detail::Node& pn(detail::Node& n, std::size_t i) { return *n.parents[i]; }

// Row-wise softmax of a logits block, stabilized by max subtraction.
void softmax_inplace(Eigen::Ref<Matrix> s) {
  for (Index r = 0; r < s.rows(); ++r) {
    auto row = s.row(r);
    row.array() -= row.maxCoeff();
    row = row.array().exp().matrix();
    row /= row.sum();
  }
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  require(a.cols() == b.rows(), "matmul: inner dimensions differ");
  Matrix out(a.rows(), b.cols());
  out.noalias() = a.value() * b.value();
  return make_op(std::move(out), {a, b}, [](detail::Node& n) {
    if (pn(n, 0).requires_grad) pn(n, 0).accumulate(n.grad * pv(n, 1).transpose());
    if (pn(n, 1).requires_grad) pn(n, 1).accumulate(pv(n, 0).transpose() * n.grad);
  });
}

Tensor add(const Tensor& a, const Tensor& b) {
  require(a.rows() == b.rows() && a.cols() == b.cols(), "add: shapes differ");
  return make_op(a.value() + b.value(), {a, b}, [](detail::Node& n) {
    pn(n, 0).accumulate(n.grad);
    pn(n, 1).accumulate(n.grad);
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require(a.rows() == b.rows() && a.cols() == b.cols(), "sub: shapes differ");
  return make_op(a.value() - b.value(), {a, b}, [](detail::Node& n) {
    pn(n, 0).accumulate(n.grad);
    pn(n, 1).accumulate(-n.grad);
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require(a.rows() == b.rows() && a.cols() == b.cols(), "mul: shapes differ");
  return make_op(a.value().cwiseProduct(b.value()), {a, b}, [](detail::Node& n) {
    if (pn(n, 0).requires_grad) pn(n, 0).accumulate(n.grad.cwiseProduct(pv(n, 1)));
    if (pn(n, 1).requires_grad) pn(n, 1).accumulate(n.grad.cwiseProduct(pv(n, 0)));
  });
}

Tensor scale(const Tensor& a, double s) {
  return make_op(a.value() * s, {a}, [s](detail::Node& n) { pn(n, 0).accumulate(n.grad * s); });
}

Tensor add_row(const Tensor& x, const Tensor& row) {
  require(row.rows() == 1 && row.cols() == x.cols(), "add_row: bias must be 1 x cols");
  Matrix out = x.value();
  out.rowwise() += row.value().row(0);
  return make_op(std::move(out), {x, row}, [](detail::Node& n) {
    pn(n, 0).accumulate(n.grad);
    if (pn(n, 1).requires_grad) pn(n, 1).accumulate(n.grad.colwise().sum());
  });
}

Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias) {
  require(x.cols() == weight.rows(), "linear: input width differs from weight rows");
  Matrix out(x.rows(), weight.cols());
  out.noalias() = x.value() * weight.value();
  if (!bias.defined()) {
    return make_op(std::move(out), {x, weight}, [](detail::Node& n) {
      if (pn(n, 0).requires_grad) pn(n, 0).accumulate(n.grad * pv(n, 1).transpose());
      if (pn(n, 1).requires_grad) pn(n, 1).accumulate(pv(n, 0).transpose() * n.grad);
    });
  }
  require(bias.rows() == 1 && bias.cols() == weight.cols(), "linear: bias must be 1 x out");
  out.rowwise() += bias.value().row(0);
  return make_op(std::move(out), {x, weight, bias}, [](detail::Node& n) {
    if (pn(n, 0).requires_grad) pn(n, 0).accumulate(n.grad * pv(n, 1).transpose());
    if (pn(n, 1).requires_grad) pn(n, 1).accumulate(pv(n, 0).transpose() * n.grad);
    if (pn(n, 2).requires_grad) pn(n, 2).accumulate(n.grad.colwise().sum());
  });
}

Tensor tanh(const Tensor& x) {
  Matrix out = x.value().array().tanh().matrix();
  return make_op(std::move(out), {x}, [](detail::Node& n) {
    pn(n, 0).accumulate(n.grad.cwiseProduct((1.0 - n.value.array().square()).matrix()));
  });
}

Tensor gelu(const Tensor& x) {
  static constexpr double c = 0.7978845608028654;  // sqrt(2 / pi)
  constexpr double a = 0.044715;
  const auto& xv = x.value();
  Matrix t = (c * (xv.array() + a * xv.array().cube())).tanh().matrix();
  Matrix out = (0.5 * xv.array() * (1.0 + t.array())).matrix();
  return make_op(std::move(out), {x}, [t](detail::Node& n) {
    const auto& xv = pv(n, 0).array();
    auto d = 0.5 * (1.0 + t.array()) + 0.5 * xv * (1.0 - t.array().square()) * c * (1.0 + 3.0 * a * xv.square());
    pn(n, 0).accumulate((n.grad.array() * d).matrix());
  });
}

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps) {
  const Index d = x.cols();
  require(gamma.rows() == 1 && gamma.cols() == d && beta.rows() == 1 && beta.cols() == d,
          "layer_norm: gamma/beta must be 1 x cols");
  const auto& xv = x.value();
  Eigen::VectorXd mean = xv.rowwise().mean();
  Matrix centered = xv.colwise() - mean;
  Eigen::VectorXd inv_std =
      ((centered.array().square().rowwise().sum() / static_cast<double>(d)) + eps).rsqrt().matrix();
  Matrix xhat = centered.array().colwise() * inv_std.array();
  Matrix out = (xhat.array().rowwise() * gamma.value().row(0).array()).matrix();
  out.rowwise() += beta.value().row(0);
  return make_op(std::move(out), {x, gamma, beta}, [xhat, inv_std](detail::Node& n) {
    const Index d = xhat.cols();
    if (pn(n, 0).requires_grad) {
      Matrix dxhat = n.grad.array().rowwise() * pv(n, 1).row(0).array();
      Eigen::VectorXd m1 = dxhat.rowwise().mean();
      Eigen::VectorXd m2 = dxhat.cwiseProduct(xhat).rowwise().sum() / static_cast<double>(d);
      Matrix dx = dxhat.colwise() - m1;
      dx -= (xhat.array().colwise() * m2.array()).matrix();
      dx = dx.array().colwise() * inv_std.array();
      pn(n, 0).accumulate(dx);
    }
    if (pn(n, 1).requires_grad) pn(n, 1).accumulate(n.grad.cwiseProduct(xhat).colwise().sum());
    if (pn(n, 2).requires_grad) pn(n, 2).accumulate(n.grad.colwise().sum());
  });
}

Tensor concat_rows(const std::vector<Tensor>& parts) {
  require(!parts.empty(), "concat_rows: nothing to concatenate");
  Index rows = 0;
  const Index cols = parts.front().cols();
  for (const auto& p : parts) {
    require(p.cols() == cols, "concat_rows: column counts differ");
    rows += p.rows();
  }
  Matrix out(rows, cols);
  Index r = 0;
  for (const auto& p : parts) {
    out.middleRows(r, p.rows()) = p.value();
    r += p.rows();
  }
  return make_op(std::move(out), parts, [](detail::Node& n) {
    Index r = 0;
    for (auto& p : n.parents) {
      const Index h = p->value.rows();
      if (p->requires_grad) p->accumulate(n.grad.middleRows(r, h));
      r += h;
    }
  });
}

Tensor concat_cols(const std::vector<Tensor>& parts) {
  require(!parts.empty(), "concat_cols: nothing to concatenate");
  Index cols = 0;
  const Index rows = parts.front().rows();
  for (const auto& p : parts) {
    require(p.rows() == rows, "concat_cols: row counts differ");
    cols += p.cols();
  }
  Matrix out(rows, cols);
  Index c = 0;
  for (const auto& p : parts) {
    out.middleCols(c, p.cols()) = p.value();
    c += p.cols();
  }
  return make_op(std::move(out), parts, [](detail::Node& n) {
    Index c = 0;
    for (auto& p : n.parents) {
      const Index w = p->value.cols();
      if (p->requires_grad) p->accumulate(n.grad.middleCols(c, w));
      c += w;
    }
  });
}

Tensor slice_rows(const Tensor& x, Index start, Index count) {
  require(start >= 0 && count >= 0 && start + count <= x.rows(), "slice_rows: out of range");
  return make_op(x.value().middleRows(start, count), {x}, [start, count](detail::Node& n) {
    auto& p = pn(n, 0);
    if (p.grad.size() == 0) p.grad = Matrix::Zero(p.value.rows(), p.value.cols());
    p.grad.middleRows(start, count) += n.grad;
  });
}

Tensor transpose(const Tensor& x) {
  return make_op(x.value().transpose(), {x},
                 [](detail::Node& n) { pn(n, 0).accumulate(n.grad.transpose()); });
}

Tensor repeat_rows(const Tensor& row, Index count) {
  require(row.rows() == 1 && count >= 1, "repeat_rows: expects a single row and a positive count");
  return make_op(row.value().replicate(count, 1), {row},
                 [](detail::Node& n) { pn(n, 0).accumulate(n.grad.colwise().sum()); });
}

Tensor slice_cols(const Tensor& x, Index start, Index count) {
  require(start >= 0 && count >= 0 && start + count <= x.cols(), "slice_cols: out of range");
  return make_op(x.value().middleCols(start, count), {x}, [start, count](detail::Node& n) {
    auto& p = pn(n, 0);
    if (p.grad.size() == 0) p.grad = Matrix::Zero(p.value.rows(), p.value.cols());
    p.grad.middleCols(start, count) += n.grad;
  });
}

Tensor mean_of(const std::vector<Tensor>& parts) {
  require(!parts.empty(), "mean_of: nothing to average");
  Matrix out = parts.front().value();
  for (std::size_t i = 1; i < parts.size(); ++i) {
    require(parts[i].rows() == out.rows() && parts[i].cols() == out.cols(), "mean_of: shapes differ");
    out += parts[i].value();
  }
  const double inv = 1.0 / static_cast<double>(parts.size());
  out *= inv;
  return make_op(std::move(out), parts, [inv](detail::Node& n) {
    for (auto& p : n.parents) p->accumulate(n.grad * inv);
  });
}

Tensor sum_all(const Tensor& x) {
  return make_op(Matrix::Constant(1, 1, x.value().sum()), {x}, [](detail::Node& n) {
    auto& p = pn(n, 0);
    p.accumulate(Matrix::Constant(p.value.rows(), p.value.cols(), n.grad(0, 0)));
  });
}

Tensor weighted_sum(const Tensor& x, const Matrix& weights) {
  require(weights.rows() == x.rows() && weights.cols() == x.cols(), "weighted_sum: shapes differ");
  return make_op(Matrix::Constant(1, 1, x.value().cwiseProduct(weights).sum()), {x},
                 [weights](detail::Node& n) { pn(n, 0).accumulate(weights * n.grad(0, 0)); });
}

Tensor softmax_rows(const Tensor& x) {
  Matrix out = x.value();
  softmax_inplace(out);
  return make_op(std::move(out), {x}, [](detail::Node& n) {
    const Matrix& y = n.value;
    Eigen::VectorXd dot = n.grad.cwiseProduct(y).rowwise().sum();
    Matrix dx = n.grad.colwise() - dot;
    pn(n, 0).accumulate(dx.cwiseProduct(y));
  });
}

Tensor log_softmax_rows(const Tensor& x) {
  Matrix out = x.value();
  for (Index r = 0; r < out.rows(); ++r) {
    auto row = out.row(r);
    const double m = row.maxCoeff();
    const double lse = m + std::log((row.array() - m).exp().sum());
    row.array() -= lse;
  }
  return make_op(std::move(out), {x}, [](detail::Node& n) {
    Eigen::VectorXd total = n.grad.rowwise().sum();
    Matrix p = n.value.array().exp().matrix();
    pn(n, 0).accumulate(n.grad - (p.array().colwise() * total.array()).matrix());
  });
}

Tensor cross_entropy(const Tensor& logits, Index target) {
  require(logits.rows() == 1, "cross_entropy: logits must be a single row");
  if (target < 0 || target >= logits.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "cross_entropy: target out of range");
  }
  Eigen::RowVectorXd row = logits.value().row(0);
  const double m = row.maxCoeff();
  const double lse = m + std::log((row.array() - m).exp().sum());
  Eigen::RowVectorXd p = (row.array() - lse).exp().matrix();
  const double loss = lse - row(target);
  return make_op(Matrix::Constant(1, 1, loss), {logits}, [p, target](detail::Node& n) {
    Matrix g = p;
    g(0, target) -= 1.0;
    pn(n, 0).accumulate(g * n.grad(0, 0));
  });
}

Tensor gather_rows(const Tensor& table, std::span<const int> ids) {
  Matrix out(static_cast<Index>(ids.size()), table.cols());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || ids[i] >= table.rows()) {
      throw Error(ErrorCode::DimensionMismatch, "gather_rows: id out of range");
    }
    out.row(static_cast<Index>(i)) = table.value().row(ids[i]);
  }
  std::vector<int> idx(ids.begin(), ids.end());
  return make_op(std::move(out), {table}, [idx](detail::Node& n) {
    auto& p = pn(n, 0);
    if (p.grad.size() == 0) p.grad = Matrix::Zero(p.value.rows(), p.value.cols());
    for (std::size_t i = 0; i < idx.size(); ++i) p.grad.row(idx[i]) += n.grad.row(static_cast<Index>(i));
  });
}

Tensor attention_probs(const Tensor& q, const Tensor& k, int heads, const Matrix* adjacency, const Tensor& wa,
                       const Tensor& ba, const Matrix* logit_mask) {
  require(heads >= 1, "attention_probs: heads must be positive");
  require(q.cols() == k.cols(), "attention_probs: query and key widths differ");
  if (q.cols() % heads != 0) throw Error(ErrorCode::HeadsNotDivisible, "model width not divisible by heads");
  const Index n = q.rows();
  const Index len = k.rows();
  const Index dh = q.cols() / heads;
  const double s = 1.0 / std::sqrt(static_cast<double>(dh));
  const bool biased = adjacency != nullptr;
  if (biased) {
    require(adjacency->rows() == n && adjacency->cols() == len, "attention_probs: adjacency shape");
    require(wa.defined() && ba.defined() && wa.cols() == heads && ba.cols() == heads,
            "attention_probs: bias scalars must be 1 x heads");
  }
  if (logit_mask) require(logit_mask->rows() == n && logit_mask->cols() == len, "attention_probs: mask shape");
  Matrix probs(n, heads * len);
  for (int h = 0; h < heads; ++h) {
    auto block = probs.middleCols(h * len, len);
    block.noalias() = q.value().middleCols(h * dh, dh) * k.value().middleCols(h * dh, dh).transpose();
    block *= s;
    if (biased) {
      block += wa.value()(0, h) * *adjacency;
      block.array() += ba.value()(0, h);
    }
    if (logit_mask) block += *logit_mask;
    softmax_inplace(block);
  }
  std::vector<Tensor> parents{q, k};
  Matrix adj = biased ? *adjacency : Matrix();
  if (biased) {
    parents.push_back(wa);
    parents.push_back(ba);
  }
  return make_op(std::move(probs), std::move(parents), [adj, heads, len, dh, s, biased](detail::Node& nd) {
    const Matrix& probs = nd.value;
    const Matrix& qv = pv(nd, 0);
    const Matrix& kv = pv(nd, 1);
    Matrix dq, dk, dwa, dba;
    if (pn(nd, 0).requires_grad) dq = Matrix::Zero(qv.rows(), qv.cols());
    if (pn(nd, 1).requires_grad) dk = Matrix::Zero(kv.rows(), kv.cols());
    if (biased) {
      dwa = Matrix::Zero(1, heads);
      dba = Matrix::Zero(1, heads);
    }
    for (int h = 0; h < heads; ++h) {
      const auto p = probs.middleCols(h * len, len);
      const auto g = nd.grad.middleCols(h * len, len);
      Eigen::VectorXd dot = g.cwiseProduct(p).rowwise().sum();
      Matrix ds = (g.colwise() - dot).cwiseProduct(p);
      if (biased) {
        dwa(0, h) = ds.cwiseProduct(adj).sum();
        dba(0, h) = ds.sum();
      }
      ds *= s;
      if (dq.size()) dq.middleCols(h * dh, dh).noalias() += ds * kv.middleCols(h * dh, dh);
      if (dk.size()) dk.middleCols(h * dh, dh).noalias() += ds.transpose() * qv.middleCols(h * dh, dh);
    }
    if (dq.size()) pn(nd, 0).accumulate(dq);
    if (dk.size()) pn(nd, 1).accumulate(dk);
    if (biased) {
      pn(nd, 2).accumulate(dwa);
      pn(nd, 3).accumulate(dba);
    }
  });
}

Tensor attention_apply(const Tensor& probs, const Tensor& v, int heads) {
  const Index len = v.rows();
  require(heads >= 1 && probs.cols() == heads * len, "attention_apply: probs width must be heads * L");
  if (v.cols() % heads != 0) throw Error(ErrorCode::HeadsNotDivisible, "model width not divisible by heads");
  const Index dh = v.cols() / heads;
  Matrix out(probs.rows(), v.cols());
  for (int h = 0; h < heads; ++h) {
    out.middleCols(h * dh, dh).noalias() = probs.value().middleCols(h * len, len) * v.value().middleCols(h * dh, dh);
  }
  return make_op(std::move(out), {probs, v}, [heads, len, dh](detail::Node& n) {
    const Matrix& pvv = pv(n, 0);
    const Matrix& vv = pv(n, 1);
    if (pn(n, 0).requires_grad) {
      Matrix dp(pvv.rows(), pvv.cols());
      for (int h = 0; h < heads; ++h) {
        dp.middleCols(h * len, len).noalias() = n.grad.middleCols(h * dh, dh) * vv.middleCols(h * dh, dh).transpose();
      }
      pn(n, 0).accumulate(dp);
    }
    if (pn(n, 1).requires_grad) {
      Matrix dv(vv.rows(), vv.cols());
      for (int h = 0; h < heads; ++h) {
        dv.middleCols(h * dh, dh).noalias() = pvv.middleCols(h * len, len).transpose() * n.grad.middleCols(h * dh, dh);
      }
      pn(n, 1).accumulate(dv);
    }
  });
}

Tensor head_mean(const Tensor& probs, int heads) {
  require(heads >= 1 && probs.cols() % heads == 0, "head_mean: width not divisible by heads");
  const Index len = probs.cols() / heads;
  Matrix out = Matrix::Zero(probs.rows(), len);
  for (int h = 0; h < heads; ++h) out += probs.value().middleCols(h * len, len);
  out /= static_cast<double>(heads);
  return make_op(std::move(out), {probs}, [heads, len](detail::Node& n) {
    Matrix g(n.grad.rows(), heads * len);
    for (int h = 0; h < heads; ++h) g.middleCols(h * len, len) = n.grad / static_cast<double>(heads);
    pn(n, 0).accumulate(g);
  });
}

Eigen::VectorXd softmax(const Eigen::VectorXd& x, const std::optional<std::vector<bool>>& mask) {
  if (mask && static_cast<Index>(mask->size()) != x.size()) {
    throw Error(ErrorCode::DimensionMismatch, "softmax: mask length differs from input");
  }
  auto active = [&](Index i) { return !mask || (*mask)[static_cast<std::size_t>(i)]; };
  double m = -std::numeric_limits<double>::infinity();
  for (Index i = 0; i < x.size(); ++i) {
    if (active(i)) m = std::max(m, x[i]);
  }
  if (m == -std::numeric_limits<double>::infinity()) {
    throw Error(ErrorCode::AllMasked, "softmax over an empty or fully masked input");
  }
  Eigen::VectorXd out = Eigen::VectorXd::Zero(x.size());
  double total = 0.0;
  for (Index i = 0; i < x.size(); ++i) {
    if (!active(i)) continue;
    out[i] = std::exp(x[i] - m);
    total += out[i];
  }
  return out / total;
}

}  // namespace ack::nn
