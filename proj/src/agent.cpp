#include "ack/agent.hpp"

#include <limits>
#include <set>

#include "ack/error.hpp"

namespace ack {

Resources load_resources(const RunConfig& config) {
  Resources r;
  r.pools = nav::load_room_pools(config.paths.room_pools);
  r.templates = nav::load_templates(config.paths.templates);
  r.vocab = nav::Vocabulary::build(r.pools, r.templates);
  r.store = kb::ingest_snapshot(config.paths.snapshot, config.relations, {}, &r.ingest);
  r.text = std::make_shared<emb::CachedTextEmbedder>(std::make_shared<emb::WordSumTextEmbedder>());
  return r;
}

ViewCache::ViewCache(const nav::NavEnvironment& env, const Resources& resources, int top_k, double image_noise)
    : env_(env), resources_(resources), top_k_(top_k), image_(resources.text, env.seed, image_noise) {
  for (const auto& v : env.nodes) {
    for (const auto& c : v.candidates) {
      std::vector<std::string> labels;
      for (const auto& o : c.objects) labels.push_back(o.label);
      image_.add_view(c.view_id, std::move(labels));
    }
    const auto here = env.here_view(v.id);
    std::vector<std::string> labels;
    for (const auto& o : here.objects) labels.push_back(o.label);
    image_.add_view(here.view_id, std::move(labels));
  }
}

model::View ViewCache::make_view(const std::string& view_id, const graph::ViewPose& pose,
                                 const std::vector<graph::ObjectObservation>& objects) const {
  const auto& text = *resources_.text;
  auto g = graph::build_scene_graph(objects, pose, text);
  if (top_k_ > 0 && !objects.empty()) {
    std::set<std::string> labels;
    for (const auto& o : objects) labels.insert(o.label);
    auto facts = resources_.store.query_by_objects(labels);
    auto ranked = emb::rank_knowledge(text, image_, view_id, labels, facts, static_cast<std::size_t>(top_k_));
    g = graph::expand_with_knowledge(std::move(g), ranked, resources_.store, text);
  }
  return {view_id, std::move(g), image_.embed(view_id)};
}

const model::Observation& ViewCache::observation(int node) {
  auto it = observations_.find(node);
  if (it != observations_.end()) return it->second;
  const auto& v = env_.nodes.at(static_cast<std::size_t>(node));
  model::Observation obs;
  for (const auto& c : v.candidates) obs.candidates.push_back(make_view(c.view_id, c.pose, c.objects));
  const auto here = env_.here_view(node);
  obs.here = make_view(here.view_id, here.pose, here.objects);
  return observations_.emplace(node, std::move(obs)).first->second;
}

AckPolicy::AckPolicy(const model::AckModel& model, const Resources& resources, int top_k, double image_noise,
                     bool keep_outputs)
    : model_(model), resources_(resources), top_k_(top_k), image_noise_(image_noise), keep_outputs_(keep_outputs) {}

ViewCache& AckPolicy::cache_for(const nav::NavEnvironment& env) {
  auto& slot = caches_[&env];
  if (!slot || slot->env().seed != env.seed) slot = std::make_unique<ViewCache>(env, resources_, top_k_, image_noise_);
  return *slot;
}

void AckPolicy::begin(const nav::NavEnvironment& env, const nav::Episode& episode) {
  cache_for(env);
  state_ = model_.init_history(episode.tokens);
  records_.clear();
  inspections_.clear();
  target_index_ = -1;
}

nav::Decision AckPolicy::decide(const nav::NavEnvironment& env, const nav::Episode& episode, int node, int) {
  const auto& obs = cache_for(env).observation(node);
  auto out = model_.step(state_, obs);
  state_ = out.next;

  nav::Decision d;
  d.probs = nn::softmax(Eigen::VectorXd(out.fused.value().row(0).transpose()));
  // Object scores come in here-graph order; the rollout wants viewpoint order.
  const auto& graph_nodes = obs.here.graph.nodes;
  const auto n_o = obs.here.graph.num_objects();
  target_index_ = -1;
  for (std::size_t i = 0; i < n_o; ++i) {
    if (graph_nodes[i].label == episode.target) target_index_ = static_cast<int>(i);
  }
  for (const auto& o : env.nodes[static_cast<std::size_t>(node)].objects) {
    double score = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n_o; ++i) {
      if (graph_nodes[i].label == o.label) score = out.scores.objects.value()(0, static_cast<Eigen::Index>(i));
    }
    d.object_scores.push_back(score);
  }
  records_.push_back({out.fused, model_.config().use_cd ? out.scores.nav : nn::Tensor(), out.scores.objects, -1});
  if (keep_outputs_) inspections_.push_back({node, &obs, std::move(out)});
  return d;
}

}  // namespace ack
