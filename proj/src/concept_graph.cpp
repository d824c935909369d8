#include "ack/concept_graph.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "ack/error.hpp"

namespace ack::graph {

std::size_t ConceptGraph::num_objects() const {
  return static_cast<std::size_t>(
      std::count_if(nodes.begin(), nodes.end(), [](const auto& n) { return n.type == NodeType::Object; }));
}

std::size_t ConceptGraph::num_knowledge() const {
  return static_cast<std::size_t>(
      std::count_if(nodes.begin(), nodes.end(), [](const auto& n) { return n.type == NodeType::Knowledge; }));
}

Eigen::MatrixXd ConceptGraph::concept_embeddings() const {
  const std::size_t offset = concept_offset();
  const auto dim = nodes.size() > offset ? nodes[offset].base_embedding.size() : 0;
  Eigen::MatrixXd out(static_cast<Eigen::Index>(num_concepts()), dim);
  for (std::size_t i = offset; i < nodes.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i - offset)) = nodes[i].base_embedding.transpose();
  }
  return out;
}

Eigen::MatrixXd ConceptGraph::directional_matrix() const {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(nodes.size()), 4);
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    for (int c = 0; c < 4; ++c) out(static_cast<Eigen::Index>(i), c) = nodes[i].directional[c];
  }
  return out;
}

std::vector<std::string> ConceptGraph::concept_labels() const {
  std::vector<std::string> out;
  for (std::size_t i = concept_offset(); i < nodes.size(); ++i) out.push_back(nodes[i].label);
  return out;
}

Directional directional_encoding(double theta, double psi, double d_theta, double d_psi) {
  if (!std::isfinite(theta) || !std::isfinite(psi) || !std::isfinite(d_theta) || !std::isfinite(d_psi)) {
    throw Error(ErrorCode::NonFiniteAngle, "directional encoding needs finite angles");
  }
  const double heading = theta + d_theta;
  const double elevation = psi + d_psi;
  return {std::sin(heading), std::cos(heading), std::sin(elevation), std::cos(elevation)};
}

ConceptGraph build_scene_graph(const std::vector<ObjectObservation>& objects, const ViewPose& pose,
                               const emb::TextEmbedder& text) {
  std::vector<ObjectObservation> sorted = objects;
  std::stable_sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) {
    if (a.label != b.label) return a.label < b.label;
    return a.d_theta < b.d_theta;
  });
  ConceptGraph g;
  g.nodes.reserve(sorted.size());
  for (const auto& o : sorted) {
    ConceptNode node;
    node.label = o.label;
    node.type = NodeType::Object;
    node.base_embedding = text.embed(o.label);
    node.directional = directional_encoding(pose.theta, pose.psi, o.d_theta, o.d_psi);
    g.nodes.push_back(std::move(node));
  }
  const auto n = static_cast<Eigen::Index>(g.nodes.size());
  g.adjacency = Eigen::MatrixXd::Ones(n, n);
  g.adjacency.diagonal().setZero();
  return g;
}

ConceptGraph expand_with_knowledge(ConceptGraph graph, const std::vector<emb::RankedFact>& ranked,
                                   const kb::KnowledgeStore& store, const emb::TextEmbedder& text) {
  if (ranked.empty()) return graph;
  std::set<std::string> present;
  for (const auto& node : graph.nodes) present.insert(node.label);
  const std::size_t before = graph.nodes.size();
  for (const auto& fact : ranked) {
    if (!present.insert(fact.knowledge_label).second) continue;
    ConceptNode node;
    node.label = fact.knowledge_label;
    node.type = NodeType::Knowledge;
    node.base_embedding = text.embed(fact.knowledge_label);
    node.score = fact.score;
    graph.nodes.push_back(std::move(node));
  }
  const auto n = static_cast<Eigen::Index>(graph.nodes.size());
  Eigen::MatrixXd adj = Eigen::MatrixXd::Zero(n, n);
  const auto old = static_cast<Eigen::Index>(before);
  adj.topLeftCorner(old, old) = graph.adjacency;
  for (Eigen::Index j = old; j < n; ++j) {
    for (Eigen::Index i = 0; i < j; ++i) {
      const auto& a = graph.nodes[static_cast<std::size_t>(i)];
      if (a.type == NodeType::History) {
        adj(i, j) = adj(j, i) = 1.0;
        continue;
      }
      if (store.linked(a.label, graph.nodes[static_cast<std::size_t>(j)].label)) adj(i, j) = adj(j, i) = 1.0;
    }
  }
  graph.adjacency = std::move(adj);
  return graph;
}

ConceptGraph add_history_node(ConceptGraph graph, const Eigen::VectorXd& h_prev, int model_dim) {
  if (h_prev.size() != model_dim) {
    throw Error(ErrorCode::DimensionMismatch, "history state has size " + std::to_string(h_prev.size()) +
                                                  ", model dimension is " + std::to_string(model_dim));
  }
  if (graph.has_history) throw Error(ErrorCode::InvalidParams, "graph already has a history node");
  ConceptNode history;
  history.label = "[history]";
  history.type = NodeType::History;
  graph.nodes.insert(graph.nodes.begin(), std::move(history));
  const auto n = static_cast<Eigen::Index>(graph.nodes.size());
  Eigen::MatrixXd adj = Eigen::MatrixXd::Zero(n, n);
  if (n > 1) {
    adj.bottomRightCorner(n - 1, n - 1) = graph.adjacency;
    adj.row(0).tail(n - 1).setOnes();
    adj.col(0).tail(n - 1).setOnes();
  }
  graph.adjacency = std::move(adj);
  graph.has_history = true;
  graph.history_state = h_prev;
  return graph;
}

nlohmann::ordered_json to_json(const ConceptGraph& graph) {
  nlohmann::ordered_json j;
  auto& nodes = j["nodes"] = nlohmann::ordered_json::array();
  for (const auto& n : graph.nodes) {
    nlohmann::ordered_json node;
    node["label"] = n.label;
    node["type"] = static_cast<int>(n.type);
    node["directional"] = n.directional;
    if (n.type == NodeType::Knowledge) node["score"] = n.score;
    nodes.push_back(std::move(node));
  }
  auto& edges = j["edges"] = nlohmann::ordered_json::array();
  for (Eigen::Index i = 0; i < graph.adjacency.rows(); ++i) {
    for (Eigen::Index j2 = i + 1; j2 < graph.adjacency.cols(); ++j2) {
      if (graph.adjacency(i, j2) != 0.0) edges.push_back({i, j2});
    }
  }
  return j;
}

}  // namespace ack::graph
