#include "ack/ack_model.hpp"

#include <algorithm>
#include <cmath>

#include "ack/error.hpp"

namespace ack::model {

using nn::Index;
using nn::Matrix;
using nn::Tensor;
using namespace ack::nn;

namespace {

void require_config(bool ok, const std::string& message) {
  if (!ok) throw Error(ErrorCode::InvalidConfig, message);
}

// Pulls the history row of every graph's block out of the stacked
// (N x heads*N) probability matrix: out(h, offset_g + c) is the weight the
// history node of graph g puts on its concept c under head h.
Tensor history_rows(const Tensor& probs, int heads, const std::vector<Index>& starts, const std::vector<Index>& sizes,
                    const std::vector<Index>& offsets, Index total_concepts) {
  const Index n = probs.rows();
  Matrix out(heads, total_concepts);
  for (std::size_t g = 0; g < starts.size(); ++g) {
    const Index nc = sizes[g] - 1;
    for (int h = 0; h < heads; ++h) {
      out.row(h).segment(offsets[g], nc) = probs.value().row(starts[g]).segment(h * n + starts[g] + 1, nc);
    }
  }
  return nn::make_op(std::move(out), {probs}, [heads, n, starts, sizes, offsets](nn::detail::Node& node) {
    Matrix g = Matrix::Zero(n, heads * n);
    for (std::size_t k = 0; k < starts.size(); ++k) {
      const Index nc = sizes[k] - 1;
      for (int h = 0; h < heads; ++h) {
        g.row(starts[k]).segment(h * n + starts[k] + 1, nc) += node.grad.row(h).segment(offsets[k], nc);
      }
    }
    node.parents[0]->accumulate(g);
  });
}

}  // namespace

void validate(const ModelConfig& c) {
  require_config(c.dim > 0, "dim: must be positive");
  require_config(c.heads > 0, "heads: must be positive");
  require_config(c.dim % c.heads == 0,
                 "dim: " + std::to_string(c.dim) + " is not divisible by heads " + std::to_string(c.heads));
  require_config(c.layers >= 1, "layers: need at least one encoder layer");
  require_config(c.text_layers >= 1, "text_layers: need at least one text layer");
  require_config(c.max_len >= 2, "max_len: must leave room for [CLS] and [SEP]");
  require_config(c.sigma >= 0.0 && c.sigma <= 1.0, "sigma: must lie in [0, 1]");
  require_config(c.weights.sap >= 0.0 && c.weights.og >= 0.0 && c.weights.cd >= 0.0,
                 "loss_weights: must be non-negative");
}

AckModel::AckModel(ModelConfig config, const std::vector<std::string>& vocabulary, const emb::TextEmbedder& text,
                   std::uint64_t seed)
    : config_(config), params_(seed) {
  validate(config_);
  const Index d = config_.dim;
  const Index de = text.dim();
  Matrix words = Matrix::Zero(static_cast<Index>(vocabulary.size()), de);
  for (std::size_t i = 0; i < vocabulary.size(); ++i) {
    const auto& w = vocabulary[i];
    if (!w.empty() && w.front() != '[') words.row(static_cast<Index>(i)) = text.embed(w).transpose();
  }
  word_vectors_ = words;
  text_ = nn::make_text_encoder(params_, "text", static_cast<Index>(vocabulary.size()), d, config_.heads,
                                config_.text_layers, config_.max_len, 2, 3, std::move(words));
  concept_proj_ = nn::make_linear(params_, "node.concept", de, d);
  type_embedding_ = params_.uniform("node.type", 3, d, 1.0 / std::sqrt(static_cast<double>(d)));
  direction_proj_ = nn::make_linear(params_, "node.direction", 4, d, false);
  mention_ = params_.uniform("node.mention", 1, d, 1.0);
  for (int l = 0; l < config_.layers; ++l) {
    const std::string p = "encoder.layer" + std::to_string(l);
    Layer layer;
    layer.cross = nn::make_cross_attention(params_, p + ".cross", d, config_.heads);
    layer.norm1 = nn::make_layer_norm(params_, p + ".norm1", d);
    layer.kgs = nn::make_kgs(params_, p + ".kgs", d, config_.heads);
    if (config_.share_kgs_bias && l > 0) {
      params_.erase(p + ".kgs.wa");
      params_.erase(p + ".kgs.ba");
      layer.kgs.wa = layers_[0].kgs.wa;
      layer.kgs.ba = layers_[0].kgs.ba;
    }
    layer.norm2 = nn::make_layer_norm(params_, p + ".norm2", d);
    layer.ffn = nn::make_feed_forward(params_, p + ".ffn", d, 2 * d);
    layer.norm3 = nn::make_layer_norm(params_, p + ".norm3", d);
    if (!config_.kgs_bias) {
      layer.kgs.wa.mutable_value().setZero();
      layer.kgs.ba.mutable_value().setZero();
      const std::string owner = config_.share_kgs_bias ? "encoder.layer0" : p;
      params_.freeze(owner + ".kgs.wa");
      params_.freeze(owner + ".kgs.ba");
    }
    layers_.push_back(std::move(layer));
  }
  nav_head_ = {nn::make_linear(params_, "head.nav.up", 3 * d, d), nn::make_linear(params_, "head.nav.out", d, 1)};
  stop_bias_ = params_.constant("head.stop.bias", 1, 1, 0.0);
  object_proj_ = nn::make_linear(params_, "head.object.proj", de, d);
  object_head_ = {nn::make_linear(params_, "head.object.up", 4 * d, d), nn::make_linear(params_, "head.object.out", d, 1)};
  image_proj_ = nn::make_linear(params_, "base.image", de, d);
  base_head_ = {nn::make_linear(params_, "base.head.up", 3 * d, d), nn::make_linear(params_, "base.head.out", d, 1)};
}

AckState AckModel::init_history(std::span<const int> tokens) const {
  auto enc = nn::text_encode(tokens, text_);
  AckState s;
  s.h0 = enc.h0;
  s.h = enc.h0;
  s.instruction = enc.instruction;
  for (const auto& layer : layers_) s.instruction_kv.push_back(nn::project_key_values(layer.cross, enc.instruction));
  std::vector<Index> rows;
  for (int t : tokens) {
    if (word_vectors_.row(t).squaredNorm() > 0.0) rows.push_back(t);
  }
  s.mention_words.resize(static_cast<Index>(rows.size()), word_vectors_.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) s.mention_words.row(static_cast<Index>(i)) = word_vectors_.row(rows[i]).normalized();
  return s;
}

EncodeOutput AckModel::encode_step(const AckState& state, const std::vector<graph::ConceptGraph>& graphs) const {
  if (graphs.empty()) throw Error(ErrorCode::EmptyCandidates, "encode_step: no candidate graphs");
  const Index d = config_.dim;
  if (state.h.cols() != d || state.instruction_kv.size() != layers_.size()) {
    throw Error(ErrorCode::DimensionMismatch, "encode_step: state does not match the model");
  }
  std::vector<Index> sizes, starts, offsets;
  Index total = 0, total_concepts = 0;
  for (const auto& g : graphs) {
    if (!g.has_history || g.nodes.empty() || g.nodes[0].type != graph::NodeType::History) {
      throw Error(ErrorCode::InvalidParams, "encode_step: every graph needs its history node at index 0");
    }
    if (g.history_state.size() != d || (g.history_state.transpose() - state.h.value()).cwiseAbs().maxCoeff() != 0.0) {
      throw Error(ErrorCode::InvalidParams, "encode_step: history node does not carry the current state");
    }
    const auto n = static_cast<Index>(g.size());
    starts.push_back(total);
    sizes.push_back(n);
    offsets.push_back(total_concepts);
    total += n;
    total_concepts += n - 1;
  }

  Tensor history_row = add(state.h, slice_rows(type_embedding_, 0, 1));
  Tensor concept_rows;
  if (total_concepts > 0) {
    const Index de = concept_proj_.weight.rows();
    Matrix emb(total_concepts, de);
    Matrix dir(total_concepts, 4);
    std::vector<int> types;
    types.reserve(static_cast<std::size_t>(total_concepts));
    Index r = 0;
    for (const auto& g : graphs) {
      for (std::size_t i = 1; i < g.size(); ++i, ++r) {
        const auto& node = g.nodes[i];
        if (node.base_embedding.size() != de) {
          throw Error(ErrorCode::DimensionMismatch, "encode_step: concept embedding width differs from the model");
        }
        emb.row(r) = node.base_embedding.transpose();
        for (int c = 0; c < 4; ++c) dir(r, c) = node.directional[c];
        types.push_back(static_cast<int>(node.type));
      }
    }
    Matrix mention = Matrix::Zero(total_concepts, 1);
    if (state.mention_words.rows() > 0) {
      if (state.mention_words.cols() != de) {
        throw Error(ErrorCode::DimensionMismatch, "encode_step: instruction word width differs from the model");
      }
      for (Index i = 0; i < total_concepts; ++i) {
        const double n = emb.row(i).norm();
        if (n > 0.0) mention(i, 0) = std::max(0.0, (state.mention_words * emb.row(i).transpose()).maxCoeff() / n);
      }
    }
    concept_rows = add(add(concept_proj_(Tensor::constant(std::move(emb))), gather_rows(type_embedding_, types)),
                       direction_proj_(Tensor::constant(std::move(dir))));
    concept_rows = add(concept_rows, matmul(Tensor::constant(std::move(mention)), mention_));
  }
  std::vector<Tensor> pieces;
  Matrix adjacency = Matrix::Zero(total, total);
  for (std::size_t g = 0; g < graphs.size(); ++g) {
    pieces.push_back(history_row);
    if (sizes[g] > 1) pieces.push_back(slice_rows(concept_rows, offsets[g], sizes[g] - 1));
    adjacency.block(starts[g], starts[g], sizes[g], sizes[g]) = graphs[g].adjacency;
  }
  Tensor x = pieces.size() == 1 ? pieces[0] : concat_rows(pieces);

  Tensor last_probs;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const auto& layer = layers_[l];
    x = layer.norm1(add(x, nn::cross_attention(x, state.instruction_kv[l], layer.cross).values));
    auto kgs = nn::kgs_attention_blocks(x, adjacency, sizes, layer.kgs);
    x = layer.norm2(add(x, kgs.values));
    x = layer.norm3(add(x, layer.ffn(x)));
    last_probs = kgs.weights;
  }

  EncodeOutput out;
  Tensor scores;
  if (total_concepts > 0) scores = history_rows(last_probs, config_.heads, starts, sizes, offsets, total_concepts);
  const Matrix& probs = last_probs.value();
  for (std::size_t g = 0; g < graphs.size(); ++g) {
    const Index nc = sizes[g] - 1;
    out.history.push_back(slice_rows(x, starts[g], 1));
    out.concepts.push_back(nc > 0 ? slice_rows(x, starts[g] + 1, nc) : Tensor());
    out.concept_attention.push_back(nc > 0 ? slice_cols(scores, offsets[g], nc) : Tensor());
    Matrix links = Matrix::Zero(sizes[g], sizes[g]);
    for (int h = 0; h < config_.heads; ++h) links += probs.block(starts[g], h * total + starts[g], sizes[g], sizes[g]);
    out.concept_links.push_back(links / static_cast<double>(config_.heads));
  }
  out.new_h = out.history.size() == 1 ? out.history[0] : mean_of(out.history);
  return out;
}

Aggregation aggregate_concepts(const Tensor& per_head_scores, const Tensor& concepts) {
  if (!per_head_scores.defined() || !concepts.defined() || per_head_scores.rows() < 1 || per_head_scores.cols() < 1 ||
      per_head_scores.cols() != concepts.rows()) {
    throw Error(ErrorCode::DimensionMismatch, "aggregate_concepts: scores must be K x n over n concept rows");
  }
  const Index k = per_head_scores.rows();
  Tensor mean = matmul(Tensor::constant(Matrix::Constant(1, k, 1.0 / static_cast<double>(k))), per_head_scores);
  Tensor weights = softmax_rows(mean);
  return {weights, matmul(weights, concepts)};
}

StepScores AckModel::decision_pipeline(const std::vector<Tensor>& aggregated, const std::vector<Tensor>& history,
                                       const Tensor& h_t, const Matrix& here_objects,
                                       const Tensor& here_tokens) const {
  if (aggregated.size() < 2 || aggregated.size() != history.size()) {
    throw Error(ErrorCode::EmptyCandidates, "decision_pipeline: needs at least one candidate plus the here view");
  }
  const std::size_t m = aggregated.size() - 1;
  // One head scores every view, the here view included, so "the instruction
  // matches what I see" is learned once for moving and for stopping.
  std::vector<Tensor> rows;
  for (std::size_t i = 0; i <= m; ++i) rows.push_back(concat_cols({aggregated[i], history[i], mul(aggregated[i], history[i])}));
  StepScores s;
  Tensor views = transpose(nav_head_(concat_rows(rows)));
  s.nav = add(views, concat_cols({Tensor::constant(Matrix::Zero(1, static_cast<Index>(m))), stop_bias_}));
  const Index n_o = here_objects.rows();
  if (n_o > 0) {
    if (!here_tokens.defined() || here_tokens.rows() != n_o) {
      throw Error(ErrorCode::DimensionMismatch, "decision_pipeline: one encoded token per here-view object");
    }
    Tensor e = object_proj_(Tensor::constant(here_objects));
    Tensor h = repeat_rows(h_t, n_o);
    s.objects = transpose(object_head_(concat_cols({e, h, mul(e, h), here_tokens})));
  }
  return s;
}

Tensor AckModel::baseline_scores(const Observation& obs, const AckState& state) const {
  const auto m = static_cast<Index>(obs.candidates.size());
  const Index de = image_proj_.weight.rows();
  Matrix images(m + 1, de);
  for (Index i = 0; i <= m; ++i) {
    const auto& v = i < m ? obs.candidates[static_cast<std::size_t>(i)].image : obs.here.image;
    if (v.size() != de) throw Error(ErrorCode::DimensionMismatch, "baseline: image embedding width differs");
    images.row(i) = v.transpose();
  }
  Tensor e = image_proj_(Tensor::constant(std::move(images)));
  Tensor h = repeat_rows(state.h0, m + 1);
  return transpose(base_head_(concat_cols({e, h, mul(e, h)})));
}

StepOutput AckModel::step(const AckState& state, const Observation& obs) const {
  if (obs.candidates.empty()) throw Error(ErrorCode::EmptyCandidates, "step: no candidate directions");
  const Eigen::VectorXd h_prev = state.h.value().transpose();
  std::vector<graph::ConceptGraph> graphs;
  graphs.reserve(obs.candidates.size() + 1);
  for (const auto& v : obs.candidates) graphs.push_back(graph::add_history_node(v.graph, h_prev, config_.dim));
  graphs.push_back(graph::add_history_node(obs.here.graph, h_prev, config_.dim));

  StepOutput out;
  out.encoding = encode_step(state, graphs);
  const auto& enc = out.encoding;
  std::vector<Tensor> aggregated;
  std::vector<Eigen::VectorXd> weights;
  for (std::size_t g = 0; g < graphs.size(); ++g) {
    if (enc.concepts[g].defined()) {
      auto agg = aggregate_concepts(enc.concept_attention[g], enc.concepts[g]);
      aggregated.push_back(agg.aggregated);
      weights.push_back(agg.weights.value().row(0).transpose());
    } else {
      aggregated.push_back(Tensor::constant(Matrix::Zero(1, config_.dim)));
      weights.emplace_back();
    }
  }
  const auto& here = graphs.back();
  const Index n_o = static_cast<Index>(here.num_objects());
  Matrix here_objects(n_o, concept_proj_.weight.rows());
  for (Index i = 0; i < n_o; ++i) here_objects.row(i) = here.nodes[static_cast<std::size_t>(i) + 1].base_embedding.transpose();
  Tensor here_tokens = n_o > 0 ? slice_rows(enc.concepts.back(), 0, n_o) : Tensor();

  out.scores = decision_pipeline(aggregated, enc.history, enc.new_h, here_objects, here_tokens);
  out.scores.concept_weights = std::move(weights);
  out.scores.baseline = baseline_scores(obs, state);
  out.fused = fuse_logits(out.scores.nav, out.scores.baseline, config_.use_cd ? config_.sigma : 0.0);

  out.next = state;
  out.next.h = config_.use_history ? enc.new_h : state.h0;
  out.next.step = state.step + 1;
  return out;
}

Tensor fuse_logits(const Tensor& local, const Tensor& base, double sigma) {
  if (!base.defined()) return local;
  if (local.rows() != 1 || base.rows() != 1 || local.cols() != base.cols()) {
    throw Error(ErrorCode::LengthMismatch, "fuse: local and baseline scores cover different candidates");
  }
  if (sigma == 1.0) return local;
  if (sigma == 0.0) return base;
  return add(scale(local, sigma), scale(base, 1.0 - sigma));
}

Eigen::VectorXd fuse_scores(const Eigen::VectorXd& local, const std::optional<Eigen::VectorXd>& base, double sigma) {
  if (!base) return nn::softmax(local);
  if (base->size() != local.size()) {
    throw Error(ErrorCode::LengthMismatch, "fuse: local and baseline scores cover different candidates");
  }
  return nn::softmax(sigma * local + (1.0 - sigma) * *base);
}

LossBreakdown losses(const std::vector<StepRecord>& trajectory, int target_object, const LossWeights& w,
                     bool use_cd) {
  if (trajectory.empty()) throw Error(ErrorCode::MissingDemonstratorAction, "losses: empty trajectory");
  std::vector<Tensor> sap, cd;
  for (std::size_t t = 0; t < trajectory.size(); ++t) {
    const auto& r = trajectory[t];
    if (r.demonstrator < 0 || r.demonstrator >= r.fused.cols()) {
      throw Error(ErrorCode::MissingDemonstratorAction, "losses: no demonstrator action at step " + std::to_string(t));
    }
    sap.push_back(cross_entropy(r.fused, r.demonstrator));
    if (r.local.defined()) cd.push_back(cross_entropy(r.local, r.demonstrator));
  }
  const double inv = 1.0 / static_cast<double>(trajectory.size());
  LossBreakdown out;
  out.sap = scale(sap.size() == 1 ? sap[0] : sum_all(concat_cols(sap)), inv);
  out.cd = cd.empty() ? Tensor::scalar(0.0) : scale(cd.size() == 1 ? cd[0] : sum_all(concat_cols(cd)), inv);
  const auto& last = trajectory.back();
  if (target_object >= 0 && last.objects.defined() && target_object < last.objects.cols()) {
    out.og = cross_entropy(last.objects, target_object);
  } else {
    out.og = Tensor::scalar(0.0);
  }
  out.total = add(scale(out.sap, w.sap), scale(out.og, w.og));
  if (use_cd) out.total = add(out.total, scale(out.cd, w.cd));
  return out;
}

nlohmann::ordered_json attention_record(int step, const std::string& candidate,
                                        const std::vector<std::string>& concepts, const Eigen::VectorXd& weights) {
  nlohmann::ordered_json j;
  j["step"] = step;
  j["candidate"] = candidate;
  j["concepts"] = concepts;
  j["weights"] = std::vector<double>(weights.data(), weights.data() + weights.size());
  return j;
}

}  // namespace ack::model
