#pragma once

#include <json.hpp>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ack/concept_graph.hpp"
#include "ack/embedding.hpp"
#include "ack/nn/layers.hpp"

namespace ack::model {

struct LossWeights {
  double sap = 1.0;
  double og = 1.0;
  double cd = 1.0;
};

struct ModelConfig {
  int dim = 96;
  int heads = 12;
  int layers = 2;
  int text_layers = 2;
  int max_len = 32;
  double sigma = 0.5;  // weight of the local pipeline in the fused distribution
  bool kgs_bias = true;      // false: wa/ba held at zero
  bool share_kgs_bias = false;  // one wa/ba pair for all layers instead of one per layer
  bool use_history = true;   // false: every step starts again from h0
  bool use_cd = true;        // false: local pipeline removed from the policy and the loss
  LossWeights weights;
};

// Throws InvalidConfig on a field-level problem.
void validate(const ModelConfig& config);

struct AckState {
  nn::Tensor h;            // (1 x d) concept history h_t
  nn::Tensor h0;           // (1 x d)
  nn::Tensor instruction;  // (L x d)
  std::vector<nn::KeyValues> instruction_kv;  // per encoder layer, projected once per episode
  Eigen::MatrixXd mention_words;  // (w x d_e) unit stub vectors of the instruction's words
  int step = 0;
};

// One observed direction: its concept graph (no history node) and image embedding.
struct View {
  std::string view_id;
  graph::ConceptGraph graph;
  emb::EmbeddingVector image;
};

// Candidate directions plus the current viewpoint's own view, which feeds
// the STOP logit and the object head.
struct Observation {
  std::vector<View> candidates;
  View here;
};

struct EncodeOutput {
  nn::Tensor new_h;                             // mean of the per-graph history outputs
  std::vector<nn::Tensor> history;              // per graph (1 x d)
  std::vector<nn::Tensor> concepts;             // per graph (n_c x d), final layer
  std::vector<nn::Tensor> concept_attention;    // per graph (K x n_c): history row of the last KGS
  std::vector<Eigen::MatrixXd> concept_links;   // per graph, head-averaged last KGS weights (n x n)
};

struct Aggregation {
  nn::Tensor weights;     // (1 x n) distribution over concept tokens
  nn::Tensor aggregated;  // (1 x d_raw)
};

// Softmax of the head-averaged scores, then the weighted sum of concept rows.
// Throws DimensionMismatch.
Aggregation aggregate_concepts(const nn::Tensor& per_head_scores, const nn::Tensor& concepts);

struct StepScores {
  nn::Tensor nav;       // (1 x m+1): candidates in order, STOP last
  nn::Tensor objects;   // (1 x n_o) over the here-view objects; undefined when there are none
  nn::Tensor baseline;  // (1 x m+1); undefined when the model has no baseline branch
  std::vector<Eigen::VectorXd> concept_weights;  // per candidate, then the here view
};

struct StepOutput {
  AckState next;
  StepScores scores;
  nn::Tensor fused;  // (1 x m+1) logits of the action distribution
  EncodeOutput encoding;
};

class AckModel {
 public:
  // `vocabulary[i]` is the word behind token id i; its stub embedding feeds
  // the instruction encoder. Throws InvalidConfig.
  AckModel(ModelConfig config, const std::vector<std::string>& vocabulary, const emb::TextEmbedder& text,
           std::uint64_t seed);

  const ModelConfig& config() const { return config_; }
  nn::ParameterSet& params() { return params_; }
  const nn::ParameterSet& params() const { return params_; }

  AckState init_history(std::span<const int> tokens) const;

  // Each graph must carry a history node at index 0. Throws EmptyCandidates.
  EncodeOutput encode_step(const AckState& state, const std::vector<graph::ConceptGraph>& graphs) const;

  // `aggregated` and `history` hold one entry per candidate followed by the
  // here view; `here_objects` are the here view's object embeddings with
  // their encoded tokens. Throws EmptyCandidates.
  StepScores decision_pipeline(const std::vector<nn::Tensor>& aggregated, const std::vector<nn::Tensor>& history,
                               const nn::Tensor& h_t, const Eigen::MatrixXd& here_objects,
                               const nn::Tensor& here_tokens) const;

  // (1 x m+1) baseline logits from the view images and h0.
  nn::Tensor baseline_scores(const Observation& obs, const AckState& state) const;

  StepOutput step(const AckState& state, const Observation& obs) const;

 private:
  ModelConfig config_;
  nn::ParameterSet params_;
  nn::TextEncoderParams text_;
  nn::Linear concept_proj_;
  nn::Tensor type_embedding_;  // (3 x d)
  nn::Linear direction_proj_;
  nn::Tensor mention_;  // (1 x d), scaled per concept by its best cosine to an instruction word
  Eigen::MatrixXd word_vectors_;  // (vocab x d_e), zero rows for special tokens
  struct Layer {
    nn::CrossAttentionParams cross;
    nn::LayerNorm norm1;
    nn::KgsParams kgs;
    nn::LayerNorm norm2;
    nn::FeedForward ffn;
    nn::LayerNorm norm3;
  };
  std::vector<Layer> layers_;
  nn::FeedForward nav_head_;
  nn::Tensor stop_bias_;  // (1 x 1), added to the here-view score
  nn::Linear object_proj_;
  nn::FeedForward object_head_;
  nn::Linear image_proj_;
  nn::FeedForward base_head_;
};

// Combined logits sigma * local + (1 - sigma) * base; `base` may be
// undefined. Throws LengthMismatch.
nn::Tensor fuse_logits(const nn::Tensor& local, const nn::Tensor& base, double sigma);

// Value-level distribution softmax(sigma * local + (1 - sigma) * base).
Eigen::VectorXd fuse_scores(const Eigen::VectorXd& local, const std::optional<Eigen::VectorXd>& base, double sigma);

struct StepRecord {
  nn::Tensor fused;
  nn::Tensor local;
  nn::Tensor objects;
  int demonstrator = -1;  // action index, STOP = last
};

struct LossBreakdown {
  nn::Tensor sap;
  nn::Tensor og;
  nn::Tensor cd;
  nn::Tensor total;
};

// L_SAP and L_CD average the per-step cross-entropies against the
// demonstrator action; L_OG is the final step's object cross-entropy when
// `target_object` indexes a here-view object (else 0). Throws
// MissingDemonstratorAction.
LossBreakdown losses(const std::vector<StepRecord>& trajectory, int target_object, const LossWeights& weights,
                     bool use_cd = true);

// {"step", "candidate", "concepts": [...], "weights": [...]}.
nlohmann::ordered_json attention_record(int step, const std::string& candidate,
                                        const std::vector<std::string>& concepts, const Eigen::VectorXd& weights);

}  // namespace ack::model
