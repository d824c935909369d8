#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "ack/ack_model.hpp"
#include "ack/embedding.hpp"
#include "ack/knowledge_base.hpp"
#include "ack/nav_env.hpp"
#include "ack/run_config.hpp"

namespace ack {

// Everything a run reads from disk, loaded once.
struct Resources {
  nav::RoomPools pools;
  std::vector<std::string> templates;
  nav::Vocabulary vocab;
  kb::KnowledgeStore store;
  kb::IngestReport ingest;
  std::shared_ptr<const emb::TextEmbedder> text;
};

// Throws FileMissing, ParseError.
Resources load_resources(const RunConfig& config);

// Observations of one environment: scene graph per view, expanded with the
// top-k ranked facts, plus the synthetic image embedding. Built on first use.
class ViewCache {
 public:
  ViewCache(const nav::NavEnvironment& env, const Resources& resources, int top_k, double image_noise);

  const model::Observation& observation(int node);
  const nav::NavEnvironment& env() const { return env_; }

 private:
  model::View make_view(const std::string& view_id, const graph::ViewPose& pose,
                        const std::vector<graph::ObjectObservation>& objects) const;

  const nav::NavEnvironment& env_;
  const Resources& resources_;
  int top_k_;
  emb::SyntheticImageEmbedder image_;
  std::map<int, model::Observation> observations_;
};

// Drives an AckModel through nav::rollout. Keeps what the trainer needs per
// decision and, on request, the full step outputs for inspection.
class AckPolicy final : public nav::Policy {
 public:
  AckPolicy(const model::AckModel& model, const Resources& resources, int top_k, double image_noise,
            bool keep_outputs = false);

  void begin(const nav::NavEnvironment& env, const nav::Episode& episode) override;
  nav::Decision decide(const nav::NavEnvironment& env, const nav::Episode& episode, int node, int step) override;

  const std::vector<model::StepRecord>& records() const { return records_; }
  // Index of the episode target among the last decision's here-view objects, or -1.
  int target_index() const { return target_index_; }

  struct Inspection {
    int node = 0;
    const model::Observation* observation = nullptr;
    model::StepOutput output;
  };
  const std::vector<Inspection>& inspections() const { return inspections_; }

 private:
  ViewCache& cache_for(const nav::NavEnvironment& env);

  const model::AckModel& model_;
  const Resources& resources_;
  int top_k_;
  double image_noise_;
  bool keep_outputs_;
  std::map<const nav::NavEnvironment*, std::unique_ptr<ViewCache>> caches_;
  model::AckState state_;
  std::vector<model::StepRecord> records_;
  std::vector<Inspection> inspections_;
  int target_index_ = -1;
};

}  // namespace ack
