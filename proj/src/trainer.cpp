#include "ack/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <ostream>
#include <sstream>

#include "ack/error.hpp"
#include "ack/nn/optimizer.hpp"

namespace ack {

namespace {

constexpr std::uint64_t kTrainEnvStream = 1;
constexpr std::uint64_t kValEnvStream = 2;
constexpr std::uint64_t kValEpisodeStream = 3;

bool has_goal(const nav::NavEnvironment& env, const RunConfig& config, const Resources& r) {
  try {
    nav::generate_episode(env, 0, r.templates, r.vocab, config.data.episode);
    return true;
  } catch (const Error& e) {
    if (e.code() != ErrorCode::NoValidGoal) throw;
    return false;
  }
}

std::vector<nav::NavEnvironment> make_environments(const RunConfig& config, const Resources& r, std::uint64_t stream,
                                                   int count) {
  std::vector<nav::NavEnvironment> envs;
  const std::uint64_t base = mix_seed(config.data.data_seed, stream);
  for (std::uint64_t i = 0; static_cast<int>(envs.size()) < count; ++i) {
    if (i > static_cast<std::uint64_t>(count) * 10 + 100) {
      throw Error(ErrorCode::NoValidGoal, "environment parameters rarely produce a valid goal");
    }
    auto env = nav::generate_environment(mix_seed(base, i), config.data.env, r.pools);
    if (has_goal(env, config, r)) envs.push_back(std::move(env));
  }
  return envs;
}

// Fields that may change between a checkpoint and a resumed run.
nlohmann::ordered_json resume_key(const RunConfig& c) {
  auto j = to_json(c);
  j.erase("paths");
  j["training"].erase("iterations");
  j["training"].erase("checkpoint_every");
  return j;
}

void write_atomically(const std::filesystem::path& path, const std::string& body) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << body;
    if (!out) throw Error(ErrorCode::CheckpointError, "cannot write " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

nav::Trajectory run_episode(AckPolicy& policy, const nav::NavEnvironment& env, const nav::Episode& ep,
                            nav::RolloutMode mode, Rng* rng) {
  return nav::rollout(env, ep, policy, mode, rng);
}

}  // namespace

std::vector<nav::NavEnvironment> make_train_environments(const RunConfig& config, const Resources& resources) {
  return make_environments(config, resources, kTrainEnvStream, config.data.train_envs);
}

nav::Split make_val_split(const RunConfig& config, const Resources& resources) {
  nav::Split split;
  split.name = "val_unseen";
  split.environments = make_environments(config, resources, kValEnvStream, config.data.val_envs);
  const std::uint64_t base = mix_seed(config.data.data_seed, kValEpisodeStream);
  for (int j = 0; j < config.data.val_episodes; ++j) {
    const int e = j % static_cast<int>(split.environments.size());
    split.episodes.emplace_back(e, nav::generate_episode(split.environments[static_cast<std::size_t>(e)],
                                                         mix_seed(base, static_cast<std::uint64_t>(j)),
                                                         resources.templates, resources.vocab, config.data.episode));
  }
  return split;
}

std::unique_ptr<model::AckModel> make_model(const RunConfig& config, const Resources& resources) {
  return std::make_unique<model::AckModel>(config.model, resources.vocab.words(), *resources.text,
                                           mix_seed(config.seed, stable_hash("model")));
}

double learning_rate(const TrainingConfig& t, int it) {
  if (it <= t.warmup) return t.lr * static_cast<double>(it) / static_cast<double>(t.warmup);
  const int span = t.iterations - t.warmup;
  if (span <= 0) return t.lr;
  const double progress = std::min(1.0, static_cast<double>(it - t.warmup) / static_cast<double>(span));
  const double floor = t.lr * t.min_lr_ratio;
  return floor + (t.lr - floor) * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
}

nlohmann::ordered_json to_json(const IterationLog& l) {
  return {{"iteration", l.iteration}, {"mode", l.mode}, {"steps", l.steps}, {"lr", l.lr},
          {"L_SAP", l.sap},           {"L_OG", l.og},   {"L_CD", l.cd},     {"total", l.total},
          {"grad_norm", l.grad_norm}};
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!std::filesystem::is_regular_file(path) || !in) {
    throw Error(ErrorCode::FileMissing, "checkpoint not found: " + path.string());
  }
  auto j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw Error(ErrorCode::CheckpointError, path.string() + ": not valid JSON");
  if (j.value("schema_version", -1) != kCheckpointSchema) {
    throw Error(ErrorCode::CheckpointError, path.string() + ": unsupported schema_version");
  }
  Checkpoint c;
  try {
    c.config = run_config_from_json(j.at("config"));
    c.iteration = j.at("iteration");
    c.params = j.at("params");
    c.optimizer = j.at("optimizer");
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::CheckpointError, path.string() + ": " + e.what());
  } catch (const Error& e) {
    throw Error(ErrorCode::CheckpointError, path.string() + ": " + e.what());
  }
  return c;
}

void write_checkpoint(const std::filesystem::path& path, const RunConfig& config, int iteration,
                      const nn::ParameterSet& params, const nlohmann::json& optimizer) {
  nlohmann::ordered_json j;
  j["schema_version"] = kCheckpointSchema;
  j["iteration"] = iteration;
  // Where the run was written is not part of the run; leaving it out keeps
  // checkpoints of the same run byte-identical across directories.
  j["config"] = to_json(config);
  j["config"]["paths"].erase("out_dir");
  j["params"] = params.to_json();
  j["optimizer"] = optimizer;
  write_atomically(path, j.dump() + "\n");
}

std::unique_ptr<model::AckModel> load_model(const Checkpoint& checkpoint, const Resources& resources) {
  auto model = make_model(checkpoint.config, resources);
  model->params().load_json(checkpoint.params);
  return model;
}

TrainResult train(const RunConfig& config, const Resources& resources, std::ostream* progress) {
  const auto& out_dir = config.paths.out_dir;
  std::filesystem::create_directories(out_dir);
  TrainResult result;
  result.checkpoint = out_dir / "checkpoint.json";
  result.loss_log = out_dir / "train_log.jsonl";
  result.iterations = config.training.iterations;

  auto envs = make_train_environments(config, resources);
  auto model = make_model(config, resources);
  nn::AdamWOptions opt_options;
  opt_options.lr = config.training.lr;
  opt_options.weight_decay = config.training.weight_decay;
  opt_options.grad_clip = config.training.grad_clip;
  nn::AdamW optimizer(model->params(), opt_options);

  std::vector<std::string> kept_log;
  if (std::filesystem::exists(result.checkpoint)) {
    auto ckpt = read_checkpoint(result.checkpoint);
    if (resume_key(ckpt.config) != resume_key(config)) {
      throw Error(ErrorCode::CheckpointError,
                  result.checkpoint.string() + " was written by a different configuration; use a fresh out_dir");
    }
    model->params().load_json(ckpt.params);
    optimizer.load_state(ckpt.optimizer);
    result.start_iteration = ckpt.iteration;
    std::ifstream in(result.loss_log);
    for (std::string line; static_cast<int>(kept_log.size()) < ckpt.iteration && std::getline(in, line);) {
      kept_log.push_back(line);
    }
  }
  {
    std::ofstream log(result.loss_log, std::ios::trunc);
    for (const auto& line : kept_log) log << line << '\n';
  }
  std::ofstream log(result.loss_log, std::ios::app);
  save_run_config(config, out_dir / "config.json");

  AckPolicy policy(*model, resources, config.top_k, config.data.image_noise);
  const auto& params = model->params();
  for (int it = result.start_iteration + 1; it <= config.training.iterations; ++it) {
    Rng rng(mix_seed(config.seed, static_cast<std::uint64_t>(it)));
    const auto& env = envs[rng.index(envs.size())];
    const auto ep = nav::generate_episode(env, rng.next(), resources.templates, resources.vocab, config.data.episode);
    const bool teacher = rng.uniform() < config.training.teacher_ratio;
    Rng sample_rng(rng.next());
    auto traj = run_episode(policy, env, ep, teacher ? nav::RolloutMode::Teacher : nav::RolloutMode::Sample,
                            &sample_rng);

    auto records = policy.records();
    for (std::size_t t = 0; t < records.size(); ++t) records[t].demonstrator = traj.demonstrator[t];
    auto loss = model::losses(records, policy.target_index(), config.model.weights, config.model.use_cd);
    params.zero_grad();
    loss.total.backward();
    optimizer.set_lr(learning_rate(config.training, it));
    IterationLog entry;
    entry.iteration = it;
    entry.mode = teacher ? "teacher" : "sample";
    entry.steps = static_cast<int>(records.size());
    entry.lr = learning_rate(config.training, it);
    entry.sap = loss.sap.item();
    entry.og = loss.og.item();
    entry.cd = loss.cd.item();
    entry.total = loss.total.item();
    entry.grad_norm = optimizer.step();
    log << to_json(entry).dump() << '\n';

    if (it % config.training.checkpoint_every == 0 || it == config.training.iterations) {
      log.flush();
      write_checkpoint(result.checkpoint, config, it, params, optimizer.state_json());
    }
    if (progress && it % 100 == 0) {
      *progress << "iteration " << it << "/" << config.training.iterations << " loss " << entry.total << '\n';
    }
  }
  if (!std::filesystem::exists(result.checkpoint)) {
    write_checkpoint(result.checkpoint, config, result.start_iteration, params, optimizer.state_json());
  }
  return result;
}

nav::MetricsReport evaluate_model(const model::AckModel& model, const RunConfig& config, const Resources& resources,
                                  const nav::Split& split) {
  nn::NoGradGuard no_grad;
  AckPolicy policy(model, resources, config.top_k, config.data.image_noise);
  std::vector<nav::Trajectory> trajs;
  std::vector<nav::Episode> eps;
  for (const auto& [e, ep] : split.episodes) {
    trajs.push_back(run_episode(policy, split.environments[static_cast<std::size_t>(e)], ep,
                                nav::RolloutMode::Argmax, nullptr));
    eps.push_back(ep);
  }
  return nav::compute_metrics(trajs, eps, config.data.success_radius);
}

EvalRow evaluate_random(const RunConfig& config, const nav::Split& split, std::uint64_t seed) {
  std::vector<nav::Trajectory> trajs;
  std::vector<nav::Episode> eps;
  std::size_t j = 0;
  for (const auto& [e, ep] : split.episodes) {
    nav::RandomPolicy policy(mix_seed(seed, j));
    Rng rng(mix_seed(seed, j + 0x10000));
    trajs.push_back(nav::rollout(split.environments[static_cast<std::size_t>(e)], ep, policy,
                                 nav::RolloutMode::Sample, &rng));
    eps.push_back(ep);
    ++j;
  }
  return {"random", nav::compute_metrics(trajs, eps, config.data.success_radius)};
}

EvalRow evaluate_demonstrator(const RunConfig& config, const nav::Split& split) {
  std::vector<nav::Trajectory> trajs;
  std::vector<nav::Episode> eps;
  nav::DemonstratorPolicy policy;
  for (const auto& [e, ep] : split.episodes) {
    trajs.push_back(nav::rollout(split.environments[static_cast<std::size_t>(e)], ep, policy,
                                 nav::RolloutMode::Teacher));
    eps.push_back(ep);
  }
  return {"demonstrator", nav::compute_metrics(trajs, eps, config.data.success_radius)};
}

std::string eval_csv(const std::vector<EvalRow>& rows) {
  std::string out = "policy," + nav::csv_header() + "\n";
  for (const auto& r : rows) out += r.policy + "," + nav::csv_row(r.metrics) + "\n";
  return out;
}

}  // namespace ack
