#pragma once

#include <filesystem>
#include <iosfwd>
#include <json.hpp>
#include <memory>
#include <string>
#include <vector>

#include "ack/ack_model.hpp"
#include "ack/agent.hpp"
#include "ack/nav_env.hpp"
#include "ack/run_config.hpp"

namespace ack {

inline constexpr int kCheckpointSchema = 1;

// Training environments and the fixed validation split, both pure functions
// of `data.data_seed`. Environments without a valid goal are skipped.
std::vector<nav::NavEnvironment> make_train_environments(const RunConfig& config, const Resources& resources);
nav::Split make_val_split(const RunConfig& config, const Resources& resources);

std::unique_ptr<model::AckModel> make_model(const RunConfig& config, const Resources& resources);

// Learning rate of iteration `it` (1-based) under the warmup and cosine schedule.
double learning_rate(const TrainingConfig& t, int it);

struct IterationLog {
  int iteration = 0;
  std::string mode;  // "teacher" or "sample"
  int steps = 0;
  double lr = 0.0;
  double sap = 0.0;
  double og = 0.0;
  double cd = 0.0;
  double total = 0.0;
  double grad_norm = 0.0;
};
nlohmann::ordered_json to_json(const IterationLog& log);

struct TrainResult {
  int start_iteration = 0;  // > 0 after a resume
  int iterations = 0;
  std::filesystem::path checkpoint;
  std::filesystem::path loss_log;
};

// Imitation training against the shortest-path demonstrator. Writes
// `checkpoint.json` every `checkpoint_every` iterations and at the end, and
// one JSON line per iteration to `train_log.jsonl`. A checkpoint already in
// `out_dir` is resumed from. Throws CheckpointError when it belongs to a
// different configuration.
TrainResult train(const RunConfig& config, const Resources& resources, std::ostream* progress = nullptr);

struct Checkpoint {
  RunConfig config;
  int iteration = 0;
  nlohmann::json params;
  nlohmann::json optimizer;
};
// Throws FileMissing, CheckpointError.
Checkpoint read_checkpoint(const std::filesystem::path& path);
void write_checkpoint(const std::filesystem::path& path, const RunConfig& config, int iteration,
                      const nn::ParameterSet& params, const nlohmann::json& optimizer);

// Rebuilds the model in a checkpoint. `resources` must come from the same
// configuration.
std::unique_ptr<model::AckModel> load_model(const Checkpoint& checkpoint, const Resources& resources);

struct EvalRow {
  std::string policy;
  nav::MetricsReport metrics;
};

// Argmax rollouts of the model on every split episode.
nav::MetricsReport evaluate_model(const model::AckModel& model, const RunConfig& config, const Resources& resources,
                                  const nav::Split& split);
// Reference rows: uniform random policy (sampled, seeded by `seed`) and the demonstrator.
EvalRow evaluate_random(const RunConfig& config, const nav::Split& split, std::uint64_t seed);
EvalRow evaluate_demonstrator(const RunConfig& config, const nav::Split& split);

std::string eval_csv(const std::vector<EvalRow>& rows);  // policy,TL,OSR,SR,SPL,RGS,RGSPL

}  // namespace ack
