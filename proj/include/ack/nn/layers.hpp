#pragma once

#include <cstdint>
#include <json.hpp>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "ack/nn/ops.hpp"
#include "ack/nn/tensor.hpp"
#include "ack/random.hpp"

namespace ack::nn {

// Named, ordered parameter registry. Weights are drawn uniform(-1/sqrt(fan_in),
// 1/sqrt(fan_in)) from one run-level stream, so creation order is part of the
// model definition.
class ParameterSet {
 public:
  explicit ParameterSet(std::uint64_t seed = 0) : rng_(seed) {}

  Tensor uniform(const std::string& name, Index rows, Index cols, double bound);
  Tensor constant(const std::string& name, Index rows, Index cols, double value);

  const Tensor& get(const std::string& name) const;
  bool contains(const std::string& name) const { return params_.contains(name); }
  void erase(const std::string& name) { params_.erase(name); }
  const std::map<std::string, Tensor>& all() const { return params_; }

  std::size_t scalar_count() const;
  void zero_grad() const;

  void freeze(const std::string& name) { frozen_.insert(name); }
  bool frozen(const std::string& name) const { return frozen_.contains(name); }

  // {"name": {"shape": [rows, cols], "values": [...]}} in name order; values
  // are column-major and reload bit-exactly.
  nlohmann::ordered_json to_json() const;
  // Shapes must match the registered parameters exactly.
  void load_json(const nlohmann::json& j);

 private:
  Tensor& insert(const std::string& name, Matrix value);

  Rng rng_;
  std::map<std::string, Tensor> params_;
  std::set<std::string> frozen_;
};

struct Linear {
  Tensor weight;  // (in x out)
  Tensor bias;    // (1 x out), may be undefined
  Tensor operator()(const Tensor& x) const { return linear(x, weight, bias); }
};
Linear make_linear(ParameterSet& params, const std::string& name, Index in, Index out, bool bias = true);

struct LayerNorm {
  Tensor gamma;
  Tensor beta;
  Tensor operator()(const Tensor& x) const { return layer_norm(x, gamma, beta); }
};
LayerNorm make_layer_norm(ParameterSet& params, const std::string& name, Index dim);

struct FeedForward {
  Linear up;
  Linear down;
  Tensor operator()(const Tensor& x) const { return down(gelu(up(x))); }
};
FeedForward make_feed_forward(ParameterSet& params, const std::string& name, Index dim, Index hidden);

struct AttentionOutput {
  Tensor values;   // (n_queries x d)
  Tensor weights;  // (n_queries x heads * n_keys), one block per head
  int heads = 1;

  Index keys() const { return weights.cols() / heads; }
  Matrix head(int h) const { return weights.value().middleCols(h * keys(), keys()); }
};

// Standard multi-head attention with biased q/k/v/output projections.
struct CrossAttentionParams {
  Linear q, k, v, o;
  int heads = 1;
};
CrossAttentionParams make_cross_attention(ParameterSet& params, const std::string& name, Index dim, int heads);

struct KeyValues {
  Tensor keys;
  Tensor values;
};
// Projects the key/value side once so it can be reused across queries.
KeyValues project_key_values(const CrossAttentionParams& p, const Tensor& keys_values);

AttentionOutput cross_attention(const Tensor& queries, const KeyValues& kv, const CrossAttentionParams& p);
AttentionOutput cross_attention(const Tensor& queries, const Tensor& keys_values, const CrossAttentionParams& p);

// Graph-aware self-attention: softmax(X Wq (X Wk)^T / sqrt(d_head) + wa_h A + ba_h) X Wv
// per head, with wa/ba one scalar per head.
struct KgsParams {
  Tensor wq, wk, wv;  // (d x d)
  Tensor wa, ba;      // (1 x heads)
  int heads = 1;
};
KgsParams make_kgs(ParameterSet& params, const std::string& name, Index dim, int heads);

// Throws DimensionMismatch, AsymmetricAdjacency.
AttentionOutput kgs_attention(const Tensor& x, const Matrix& adjacency, const KgsParams& p);

// Several independent graphs stacked row-wise. `adjacency` is block diagonal
// with block sizes `blocks`; attention never crosses a block boundary, so
// each block's rows equal a separate kgs_attention call.
AttentionOutput kgs_attention_blocks(const Tensor& x, const Matrix& adjacency, const std::vector<Index>& blocks,
                                     const KgsParams& p);

struct TextEncoderLayer {
  CrossAttentionParams attention;
  LayerNorm norm1;
  FeedForward ffn;
  LayerNorm norm2;
};

struct TextEncoderParams {
  Tensor token_embedding;     // (vocab x d)
  Tensor position_embedding;  // (max_len x d)
  // Optional fixed word vectors (vocab x d_w) mapped in through a learned
  // (d_w x d) projection; lets instruction words share the concept space.
  Matrix word_vectors;
  Tensor word_projection;
  LayerNorm embed_norm;
  std::vector<TextEncoderLayer> layers;
  int cls_id = 2;
  int sep_id = 3;
  int max_len = 32;
};
TextEncoderParams make_text_encoder(ParameterSet& params, const std::string& name, Index vocab, Index dim,
                                    int heads, int layers, int max_len, int cls_id, int sep_id,
                                    Matrix word_vectors = {});

struct TextEncoding {
  Tensor h0;           // (1 x d), output at the CLS position
  Tensor instruction;  // (L x d)
};

// Throws MissingSpecialTokens, SequenceTooLong.
TextEncoding text_encode(std::span<const int> tokens, const TextEncoderParams& p);

}  // namespace ack::nn
