#pragma once

#include <Eigen/Core>
#include <array>
#include <json.hpp>
#include <string>
#include <vector>

#include "ack/embedding.hpp"
#include "ack/knowledge_base.hpp"

namespace ack::graph {

enum class NodeType : int { History = 0, Object = 1, Knowledge = 2 };

using Directional = std::array<double, 4>;

struct ObjectObservation {
  std::string label;
  double d_theta = 0.0;  // horizontal offset of the object center from the view center
  double d_psi = 0.0;    // vertical offset
};

struct ViewPose {
  double theta = 0.0;  // heading, [-pi, pi]
  double psi = 0.0;    // elevation, [-pi/2, pi/2]
};

struct ConceptNode {
  std::string label;
  NodeType type = NodeType::Object;
  emb::EmbeddingVector base_embedding;  // empty for the history node
  Directional directional{0.0, 0.0, 0.0, 0.0};
  double score = 0.0;  // ranking score, knowledge nodes only
};

// Per-view graph: node order is [history; objects by (label, d_theta);
// knowledge by descending score]. The adjacency is symmetric 0/1 with a zero
// diagonal.
struct ConceptGraph {
  std::vector<ConceptNode> nodes;
  Eigen::MatrixXd adjacency;
  bool has_history = false;
  Eigen::VectorXd history_state;

  std::size_t size() const { return nodes.size(); }
  std::size_t num_objects() const;
  std::size_t num_knowledge() const;
  // Index of the first concept node (1 with a history node, else 0).
  std::size_t concept_offset() const { return has_history ? 1 : 0; }
  std::size_t num_concepts() const { return nodes.size() - concept_offset(); }

  // Base embeddings of the concept nodes, one row each.
  Eigen::MatrixXd concept_embeddings() const;
  Eigen::MatrixXd directional_matrix() const;
  std::vector<std::string> concept_labels() const;
};

// (sin(theta + d_theta), cos(theta + d_theta), sin(psi + d_psi), cos(psi + d_psi)).
// Throws NonFiniteAngle.
Directional directional_encoding(double theta, double psi, double d_theta, double d_psi);

// Fully connected object graph, no history node yet.
ConceptGraph build_scene_graph(const std::vector<ObjectObservation>& objects, const ViewPose& pose,
                               const emb::TextEmbedder& text);

// Adds one node per distinct knowledge label (first occurrence in ranked
// order wins; labels that already name an object are skipped). Concepts are
// linked iff some store triple connects their labels.
ConceptGraph expand_with_knowledge(ConceptGraph graph, const std::vector<emb::RankedFact>& ranked,
                                   const kb::KnowledgeStore& store, const emb::TextEmbedder& text);

// Inserts the history node at index 0, connected to every other node.
// Throws DimensionMismatch when h_prev has the wrong size, InvalidParams when
// the graph already has one.
ConceptGraph add_history_node(ConceptGraph graph, const Eigen::VectorXd& h_prev, int model_dim);

// {"nodes": [{"label", "type", "directional", "score"}], "edges": [[i, j], ...]} with i < j.
nlohmann::ordered_json to_json(const ConceptGraph& graph);

}  // namespace ack::graph
