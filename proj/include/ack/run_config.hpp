#pragma once

#include <cstdint>
#include <filesystem>
#include <json.hpp>
#include <string>
#include <vector>

#include "ack/ack_model.hpp"
#include "ack/nav_env.hpp"

namespace ack {

struct TrainingConfig {
  int iterations = 2000;
  double lr = 1e-3;
  double weight_decay = 0.01;
  double grad_clip = 5.0;
  int checkpoint_every = 500;
  // Share of iterations rolled out along the demonstrator path; the rest
  // follow the agent's own samples and are labeled by the demonstrator.
  double teacher_ratio = 0.5;
  // Linear warmup over `warmup` iterations, then cosine decay to lr * min_lr_ratio.
  int warmup = 100;
  double min_lr_ratio = 0.1;
  bool operator==(const TrainingConfig&) const = default;
};

struct DataConfig {
  std::uint64_t data_seed = 2024;  // environments and validation episodes
  int train_envs = 50;
  int val_envs = 10;
  int val_episodes = 200;
  double image_noise = 0.1;
  int success_radius = 0;
  nav::EnvParams env;
  nav::EpisodeOptions episode;
  bool operator==(const DataConfig&) const = default;
};

struct PathConfig {
  std::filesystem::path snapshot;
  std::filesystem::path room_pools;
  std::filesystem::path templates;
  std::filesystem::path out_dir = "runs/default";
  bool operator==(const PathConfig&) const = default;
};

struct RunConfig {
  std::uint64_t seed = 7;
  int top_k = 10;
  std::vector<std::string> relations;
  model::ModelConfig model;
  TrainingConfig training;
  DataConfig data;
  PathConfig paths;

  RunConfig();
  bool operator==(const RunConfig& other) const;
};

// Field-level checks; every message starts with the dotted field name.
// Throws InvalidConfig, or FileMissing for a data path that does not exist.
void validate(const RunConfig& config);

nlohmann::ordered_json to_json(const RunConfig& config);
// Missing fields keep their defaults; unknown fields are rejected. Throws
// InvalidConfig.
RunConfig run_config_from_json(const nlohmann::json& j);

// Parses the file only. Throws FileMissing, InvalidConfig.
RunConfig read_run_config(const std::filesystem::path& path);
// read_run_config, then environment overrides, then validate.
RunConfig load_run_config(const std::filesystem::path& path);
void save_run_config(const RunConfig& config, const std::filesystem::path& path);

// ACK_SNAPSHOT, ACK_ROOM_POOLS, ACK_TEMPLATES and ACK_OUT_DIR replace the
// matching path when set and non-empty. Nothing else can be overridden.
void apply_env_overrides(RunConfig& config);

}  // namespace ack
