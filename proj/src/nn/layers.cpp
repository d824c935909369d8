#include "ack/nn/layers.hpp"

#include <cmath>
#include <limits>

#include "ack/error.hpp"

namespace ack::nn {

Tensor& ParameterSet::insert(const std::string& name, Matrix value) {
  if (params_.contains(name)) throw Error(ErrorCode::InvalidParams, "duplicate parameter '" + name + "'");
  return params_.emplace(name, Tensor::parameter(std::move(value))).first->second;
}

Tensor ParameterSet::uniform(const std::string& name, Index rows, Index cols, double bound) {
  Matrix m(rows, cols);
  for (Index c = 0; c < cols; ++c) {
    for (Index r = 0; r < rows; ++r) m(r, c) = rng_.uniform(-bound, bound);
  }
  return insert(name, std::move(m));
}

Tensor ParameterSet::constant(const std::string& name, Index rows, Index cols, double value) {
  return insert(name, Matrix::Constant(rows, cols, value));
}

const Tensor& ParameterSet::get(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end()) throw Error(ErrorCode::InvalidParams, "unknown parameter '" + name + "'");
  return it->second;
}

std::size_t ParameterSet::scalar_count() const {
  std::size_t n = 0;
  for (const auto& [_, t] : params_) n += static_cast<std::size_t>(t.value().size());
  return n;
}

void ParameterSet::zero_grad() const {
  for (const auto& [_, t] : params_) t.zero_grad();
}

nlohmann::ordered_json ParameterSet::to_json() const {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (const auto& [name, t] : params_) {
    const Matrix& v = t.value();
    std::vector<double> flat(v.data(), v.data() + v.size());
    j[name] = {{"shape", {v.rows(), v.cols()}}, {"values", std::move(flat)}};
  }
  return j;
}

void ParameterSet::load_json(const nlohmann::json& j) {
  for (auto& [name, t] : params_) {
    if (!j.contains(name)) throw Error(ErrorCode::CheckpointError, "checkpoint lacks parameter '" + name + "'");
    const auto& entry = j.at(name);
    const auto shape = entry.at("shape").get<std::vector<Index>>();
    const auto values = entry.at("values").get<std::vector<double>>();
    Matrix& v = t.mutable_value();
    if (shape.size() != 2 || shape[0] != v.rows() || shape[1] != v.cols() ||
        static_cast<Index>(values.size()) != v.size()) {
      throw Error(ErrorCode::CheckpointError, "shape mismatch for parameter '" + name + "'");
    }
    std::copy(values.begin(), values.end(), v.data());
  }
  if (j.size() != params_.size()) {
    throw Error(ErrorCode::CheckpointError, "checkpoint has parameters this model does not define");
  }
}

Linear make_linear(ParameterSet& params, const std::string& name, Index in, Index out, bool bias) {
  Linear l;
  l.weight = params.uniform(name + ".weight", in, out, 1.0 / std::sqrt(static_cast<double>(in)));
  if (bias) l.bias = params.constant(name + ".bias", 1, out, 0.0);
  return l;
}

LayerNorm make_layer_norm(ParameterSet& params, const std::string& name, Index dim) {
  return {params.constant(name + ".gamma", 1, dim, 1.0), params.constant(name + ".beta", 1, dim, 0.0)};
}

FeedForward make_feed_forward(ParameterSet& params, const std::string& name, Index dim, Index hidden) {
  return {make_linear(params, name + ".up", dim, hidden), make_linear(params, name + ".down", hidden, dim)};
}

CrossAttentionParams make_cross_attention(ParameterSet& params, const std::string& name, Index dim, int heads) {
  if (heads < 1 || dim % heads != 0) {
    throw Error(ErrorCode::HeadsNotDivisible, name + ": width " + std::to_string(dim) + " not divisible by " +
                                                  std::to_string(heads) + " heads");
  }
  CrossAttentionParams p;
  p.q = make_linear(params, name + ".q", dim, dim);
  p.k = make_linear(params, name + ".k", dim, dim);
  p.v = make_linear(params, name + ".v", dim, dim);
  p.o = make_linear(params, name + ".o", dim, dim);
  p.heads = heads;
  return p;
}

KeyValues project_key_values(const CrossAttentionParams& p, const Tensor& keys_values) {
  if (keys_values.cols() != p.k.weight.rows()) {
    throw Error(ErrorCode::DimensionMismatch, "cross_attention: key/value width differs from model width");
  }
  return {p.k(keys_values), p.v(keys_values)};
}

AttentionOutput cross_attention(const Tensor& queries, const KeyValues& kv, const CrossAttentionParams& p) {
  if (queries.cols() != p.q.weight.rows()) {
    throw Error(ErrorCode::DimensionMismatch, "cross_attention: query width differs from model width");
  }
  if (queries.rows() < 1 || kv.keys.rows() < 1) {
    throw Error(ErrorCode::DimensionMismatch, "cross_attention: needs at least one query and one key");
  }
  Tensor probs = attention_probs(p.q(queries), kv.keys, p.heads);
  return {p.o(attention_apply(probs, kv.values, p.heads)), probs, p.heads};
}

AttentionOutput cross_attention(const Tensor& queries, const Tensor& keys_values, const CrossAttentionParams& p) {
  return cross_attention(queries, project_key_values(p, keys_values), p);
}

KgsParams make_kgs(ParameterSet& params, const std::string& name, Index dim, int heads) {
  if (heads < 1 || dim % heads != 0) {
    throw Error(ErrorCode::HeadsNotDivisible, name + ": width " + std::to_string(dim) + " not divisible by " +
                                                  std::to_string(heads) + " heads");
  }
  const double bound = 1.0 / std::sqrt(static_cast<double>(dim));
  KgsParams p;
  p.wq = params.uniform(name + ".wq", dim, dim, bound);
  p.wk = params.uniform(name + ".wk", dim, dim, bound);
  p.wv = params.uniform(name + ".wv", dim, dim, bound);
  p.wa = params.uniform(name + ".wa", 1, heads, bound);
  p.ba = params.uniform(name + ".ba", 1, heads, bound);
  p.heads = heads;
  return p;
}

AttentionOutput kgs_attention(const Tensor& x, const Matrix& adjacency, const KgsParams& p) {
  const Index n = x.rows();
  if (n < 1 || x.cols() != p.wq.rows()) {
    throw Error(ErrorCode::DimensionMismatch, "kgs_attention: input width differs from model width");
  }
  if (adjacency.rows() != n || adjacency.cols() != n) {
    throw Error(ErrorCode::DimensionMismatch, "kgs_attention: adjacency must be n x n");
  }
  if (adjacency != adjacency.transpose()) {
    throw Error(ErrorCode::AsymmetricAdjacency, "kgs_attention: adjacency must be symmetric");
  }
  Tensor q = matmul(x, p.wq);
  Tensor k = matmul(x, p.wk);
  Tensor v = matmul(x, p.wv);
  Tensor probs = attention_probs(q, k, p.heads, &adjacency, p.wa, p.ba);
  return {attention_apply(probs, v, p.heads), probs, p.heads};
}

AttentionOutput kgs_attention_blocks(const Tensor& x, const Matrix& adjacency, const std::vector<Index>& blocks,
                                     const KgsParams& p) {
  const Index n = x.rows();
  Index total = 0;
  for (Index b : blocks) {
    if (b < 1) throw Error(ErrorCode::DimensionMismatch, "kgs_attention_blocks: empty block");
    total += b;
  }
  if (total != n || x.cols() != p.wq.rows()) {
    throw Error(ErrorCode::DimensionMismatch, "kgs_attention_blocks: block sizes must cover the input rows");
  }
  if (adjacency.rows() != n || adjacency.cols() != n) {
    throw Error(ErrorCode::DimensionMismatch, "kgs_attention_blocks: adjacency must be n x n");
  }
  if (adjacency != adjacency.transpose()) {
    throw Error(ErrorCode::AsymmetricAdjacency, "kgs_attention_blocks: adjacency must be symmetric");
  }
  Matrix mask = Matrix::Constant(n, n, -std::numeric_limits<double>::infinity());
  Index start = 0;
  for (Index b : blocks) {
    if (adjacency.block(start, 0, b, n).cwiseAbs().sum() != adjacency.block(start, start, b, b).cwiseAbs().sum()) {
      throw Error(ErrorCode::DimensionMismatch, "kgs_attention_blocks: adjacency has edges across blocks");
    }
    mask.block(start, start, b, b).setZero();
    start += b;
  }
  Tensor q = matmul(x, p.wq);
  Tensor k = matmul(x, p.wk);
  Tensor v = matmul(x, p.wv);
  Tensor probs = attention_probs(q, k, p.heads, &adjacency, p.wa, p.ba, &mask);
  return {attention_apply(probs, v, p.heads), probs, p.heads};
}

TextEncoderParams make_text_encoder(ParameterSet& params, const std::string& name, Index vocab, Index dim,
                                    int heads, int layers, int max_len, int cls_id, int sep_id,
                                    Matrix word_vectors) {
  TextEncoderParams p;
  const double bound = 1.0 / std::sqrt(static_cast<double>(dim));
  p.token_embedding = params.uniform(name + ".token_embedding", vocab, dim, bound);
  p.position_embedding = params.uniform(name + ".position_embedding", max_len, dim, bound);
  if (word_vectors.size() != 0) {
    if (word_vectors.rows() != vocab) {
      throw Error(ErrorCode::DimensionMismatch, name + ": word vector table must have one row per token");
    }
    const Index wd = word_vectors.cols();
    p.word_projection = params.uniform(name + ".word_projection", wd, dim, 1.0 / std::sqrt(static_cast<double>(wd)));
    p.word_vectors = std::move(word_vectors);
  }
  p.embed_norm = make_layer_norm(params, name + ".embed_norm", dim);
  for (int l = 0; l < layers; ++l) {
    const std::string prefix = name + ".layer" + std::to_string(l);
    TextEncoderLayer layer;
    layer.attention = make_cross_attention(params, prefix + ".attention", dim, heads);
    layer.norm1 = make_layer_norm(params, prefix + ".norm1", dim);
    layer.ffn = make_feed_forward(params, prefix + ".ffn", dim, 2 * dim);
    layer.norm2 = make_layer_norm(params, prefix + ".norm2", dim);
    p.layers.push_back(std::move(layer));
  }
  p.cls_id = cls_id;
  p.sep_id = sep_id;
  p.max_len = max_len;
  return p;
}

TextEncoding text_encode(std::span<const int> tokens, const TextEncoderParams& p) {
  if (tokens.size() < 2 || tokens.front() != p.cls_id || tokens.back() != p.sep_id) {
    throw Error(ErrorCode::MissingSpecialTokens, "token sequence must start with [CLS] and end with [SEP]");
  }
  if (static_cast<int>(tokens.size()) > p.max_len) {
    throw Error(ErrorCode::SequenceTooLong,
                std::to_string(tokens.size()) + " tokens exceed max_len " + std::to_string(p.max_len));
  }
  const auto len = static_cast<Index>(tokens.size());
  Tensor x = add(gather_rows(p.token_embedding, tokens), slice_rows(p.position_embedding, 0, len));
  if (p.word_projection.defined()) {
    Matrix words(len, p.word_vectors.cols());
    for (Index i = 0; i < len; ++i) words.row(i) = p.word_vectors.row(tokens[static_cast<std::size_t>(i)]);
    x = add(x, matmul(Tensor::constant(std::move(words)), p.word_projection));
  }
  x = p.embed_norm(x);
  for (const auto& layer : p.layers) {
    x = layer.norm1(add(x, cross_attention(x, x, layer.attention).values));
    x = layer.norm2(add(x, layer.ffn(x)));
  }
  return {slice_rows(x, 0, 1), x};
}

}  // namespace ack::nn
