#include "ack/run_config.hpp"

#include <cstdlib>
#include <algorithm>
#include <fstream>
#include <set>

#include "ack/error.hpp"
#include "ack/knowledge_base.hpp"

namespace ack {

namespace {

void fail(const std::string& message) { throw Error(ErrorCode::InvalidConfig, message); }

// Walks one JSON object, reading known keys and rejecting the rest.
class Reader {
 public:
  Reader(const nlohmann::json& j, std::string prefix) : j_(j), prefix_(std::move(prefix)) {
    if (!j_.is_object()) fail(where("") + "expected an object");
  }
  void done() const {
    for (const auto& [key, value] : j_.items()) {
      if (!seen_.contains(key)) fail(where(key) + "unknown field");
    }
  }

  template <class T>
  void operator()(const std::string& key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    const auto& v = j_.at(key);
    try {
      if constexpr (std::is_same_v<T, bool>) {
        if (!v.is_boolean()) fail(where(key) + "expected true or false");
      } else if constexpr (std::is_integral_v<T>) {
        if (!v.is_number_integer()) fail(where(key) + "expected an integer");
        if constexpr (std::is_unsigned_v<T>) {
          if (v.is_number_integer() && !v.is_number_unsigned() && v.get<long long>() < 0) {
            fail(where(key) + "expected a non-negative integer");
          }
        }
      } else if constexpr (std::is_floating_point_v<T>) {
        if (!v.is_number()) fail(where(key) + "expected a number");
      }
      out = v.get<T>();
    } catch (const nlohmann::json::exception&) {
      fail(where(key) + "has the wrong type");
    }
  }

  void path(const std::string& key, std::filesystem::path& out) {
    std::string s = out.string();
    (*this)(key, s);
    out = s;
  }

  const nlohmann::json* child(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key) ? &j_.at(key) : nullptr;
  }

  std::string where(const std::string& key) const {
    std::string name = key.empty() ? prefix_ : (prefix_.empty() ? key : prefix_ + "." + key);
    return (name.empty() ? std::string("config") : name) + ": ";
  }

 private:
  const nlohmann::json& j_;
  std::string prefix_;
  std::set<std::string> seen_;
};

void read_model(const nlohmann::json& j, model::ModelConfig& m) {
  Reader r(j, "model");
  r("dim", m.dim);
  r("heads", m.heads);
  r("layers", m.layers);
  r("text_layers", m.text_layers);
  r("max_len", m.max_len);
  r("sigma", m.sigma);
  r("kgs_bias", m.kgs_bias);
  r("share_kgs_bias", m.share_kgs_bias);
  r("use_history", m.use_history);
  r("use_cd", m.use_cd);
  if (const auto* w = r.child("loss_weights")) {
    Reader rw(*w, "model.loss_weights");
    rw("sap", m.weights.sap);
    rw("og", m.weights.og);
    rw("cd", m.weights.cd);
    rw.done();
  }
  r.done();
}

void read_data(const nlohmann::json& j, DataConfig& d) {
  Reader r(j, "data");
  r("data_seed", d.data_seed);
  r("train_envs", d.train_envs);
  r("val_envs", d.val_envs);
  r("val_episodes", d.val_episodes);
  r("image_noise", d.image_noise);
  r("success_radius", d.success_radius);
  if (const auto* e = r.child("env")) {
    Reader re(*e, "data.env");
    re("n_nodes", d.env.n_nodes);
    re("n_rooms", d.env.n_rooms);
    re("object_density", d.env.object_density);
    re("far_objects", d.env.far_objects);
    re("extra_door_prob", d.env.extra_door_prob);
    re.done();
  }
  if (const auto* e = r.child("episode")) {
    Reader re(*e, "data.episode");
    re("max_steps", d.episode.max_steps);
    re("max_start_distance", d.episode.max_start_distance);
    re.done();
  }
  r.done();
}

void check(bool ok, const std::string& field, const std::string& message) {
  if (!ok) fail(field + ": " + message);
}

void check_file(const std::filesystem::path& p, const std::string& field) {
  if (p.empty()) fail(field + ": path is empty");
  if (!std::filesystem::is_regular_file(p)) {
    throw Error(ErrorCode::FileMissing, field + ": no such file " + p.string());
  }
}

}  // namespace

RunConfig::RunConfig() : relations(kb::default_relation_set()) {
  const std::filesystem::path data = ACK_DATA_DIR;
  paths.snapshot = data / "conceptnet_snapshot.tsv";
  paths.room_pools = data / "room_pools.json";
  paths.templates = data / "instructions.json";
}

bool RunConfig::operator==(const RunConfig& o) const {
  // ModelConfig has no comparison of its own; the JSON form covers every field.
  return to_json(*this) == to_json(o);
}

void validate(const RunConfig& c) {
  try {
    model::validate(c.model);
  } catch (const Error& e) {
    std::string msg = e.what();
    const std::string code = std::string(to_string(ErrorCode::InvalidConfig)) + ": ";
    if (msg.rfind(code, 0) == 0) msg = msg.substr(code.size());
    fail("model." + msg);
  }
  check(c.top_k >= 0, "top_k", "must be non-negative");
  check(!c.relations.empty(), "relations", "need at least one relation");
  for (const auto& rel : c.relations) {
    const auto& all = kb::default_relation_set();
    check(std::find(all.begin(), all.end(), rel) != all.end(), "relations", "unknown relation '" + rel + "'");
  }
  const auto& t = c.training;
  check(t.iterations >= 0, "training.iterations", "must be non-negative");
  check(t.lr > 0.0, "training.lr", "must be positive");
  check(t.weight_decay >= 0.0, "training.weight_decay", "must be non-negative");
  check(t.checkpoint_every >= 1, "training.checkpoint_every", "must be at least 1");
  check(t.teacher_ratio >= 0.0 && t.teacher_ratio <= 1.0, "training.teacher_ratio", "must lie in [0, 1]");
  check(t.warmup >= 0, "training.warmup", "must be non-negative");
  check(t.min_lr_ratio >= 0.0 && t.min_lr_ratio <= 1.0, "training.min_lr_ratio", "must lie in [0, 1]");
  const auto& d = c.data;
  check(d.train_envs >= 1, "data.train_envs", "must be at least 1");
  check(d.val_envs >= 1, "data.val_envs", "must be at least 1");
  check(d.val_episodes >= 1, "data.val_episodes", "must be at least 1");
  check(d.image_noise >= 0.0, "data.image_noise", "must be non-negative");
  check(d.success_radius >= 0, "data.success_radius", "must be non-negative");
  check(d.env.n_nodes >= 2, "data.env.n_nodes", "must be at least 2");
  check(d.env.n_rooms >= 1, "data.env.n_rooms", "must be at least 1");
  check(d.env.object_density > 0.0, "data.env.object_density", "must be positive");
  check(d.env.far_objects >= 0, "data.env.far_objects", "must be non-negative");
  check(d.env.extra_door_prob >= 0.0 && d.env.extra_door_prob <= 1.0, "data.env.extra_door_prob",
        "must lie in [0, 1]");
  check(d.episode.max_steps >= 0, "data.episode.max_steps", "must be non-negative");
  check(d.episode.max_start_distance >= 1, "data.episode.max_start_distance", "must be at least 1");
  check(!c.paths.out_dir.empty(), "paths.out_dir", "path is empty");
  check_file(c.paths.snapshot, "paths.snapshot");
  check_file(c.paths.room_pools, "paths.room_pools");
  check_file(c.paths.templates, "paths.templates");
}

nlohmann::ordered_json to_json(const RunConfig& c) {
  const auto& m = c.model;
  const auto& t = c.training;
  const auto& d = c.data;
  nlohmann::ordered_json j;
  j["seed"] = c.seed;
  j["top_k"] = c.top_k;
  j["relations"] = c.relations;
  j["model"] = {{"dim", m.dim},
                {"heads", m.heads},
                {"layers", m.layers},
                {"text_layers", m.text_layers},
                {"max_len", m.max_len},
                {"sigma", m.sigma},
                {"kgs_bias", m.kgs_bias},
                {"share_kgs_bias", m.share_kgs_bias},
                {"use_history", m.use_history},
                {"use_cd", m.use_cd},
                {"loss_weights", {{"sap", m.weights.sap}, {"og", m.weights.og}, {"cd", m.weights.cd}}}};
  j["training"] = {{"iterations", t.iterations},
                   {"lr", t.lr},
                   {"weight_decay", t.weight_decay},
                   {"grad_clip", t.grad_clip},
                   {"checkpoint_every", t.checkpoint_every},
                   {"teacher_ratio", t.teacher_ratio},
                   {"warmup", t.warmup},
                   {"min_lr_ratio", t.min_lr_ratio}};
  j["data"] = {{"data_seed", d.data_seed},
               {"train_envs", d.train_envs},
               {"val_envs", d.val_envs},
               {"val_episodes", d.val_episodes},
               {"image_noise", d.image_noise},
               {"success_radius", d.success_radius},
               {"env",
                {{"n_nodes", d.env.n_nodes},
                 {"n_rooms", d.env.n_rooms},
                 {"object_density", d.env.object_density},
                 {"far_objects", d.env.far_objects},
                 {"extra_door_prob", d.env.extra_door_prob}}},
               {"episode", {{"max_steps", d.episode.max_steps}, {"max_start_distance", d.episode.max_start_distance}}}};
  j["paths"] = {{"snapshot", c.paths.snapshot.string()},
                {"room_pools", c.paths.room_pools.string()},
                {"templates", c.paths.templates.string()},
                {"out_dir", c.paths.out_dir.string()}};
  return j;
}

RunConfig run_config_from_json(const nlohmann::json& j) {
  RunConfig c;
  Reader r(j, "");
  r("seed", c.seed);
  r("top_k", c.top_k);
  r("relations", c.relations);
  if (const auto* m = r.child("model")) read_model(*m, c.model);
  if (const auto* t = r.child("training")) {
    Reader rt(*t, "training");
    rt("iterations", c.training.iterations);
    rt("lr", c.training.lr);
    rt("weight_decay", c.training.weight_decay);
    rt("grad_clip", c.training.grad_clip);
    rt("checkpoint_every", c.training.checkpoint_every);
    rt("teacher_ratio", c.training.teacher_ratio);
    rt("warmup", c.training.warmup);
    rt("min_lr_ratio", c.training.min_lr_ratio);
    rt.done();
  }
  if (const auto* d = r.child("data")) read_data(*d, c.data);
  if (const auto* p = r.child("paths")) {
    Reader rp(*p, "paths");
    rp.path("snapshot", c.paths.snapshot);
    rp.path("room_pools", c.paths.room_pools);
    rp.path("templates", c.paths.templates);
    rp.path("out_dir", c.paths.out_dir);
    rp.done();
  }
  r.done();
  return c;
}

void apply_env_overrides(RunConfig& c) {
  auto take = [](const char* name, std::filesystem::path& out) {
    const char* v = std::getenv(name);
    if (v != nullptr && *v != '\0') out = v;
  };
  take("ACK_SNAPSHOT", c.paths.snapshot);
  take("ACK_ROOM_POOLS", c.paths.room_pools);
  take("ACK_TEMPLATES", c.paths.templates);
  take("ACK_OUT_DIR", c.paths.out_dir);
}

RunConfig read_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!std::filesystem::is_regular_file(path) || !in) {
    throw Error(ErrorCode::FileMissing, "config not found: " + path.string());
  }
  auto j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded()) fail(path.string() + ": not valid JSON");
  return run_config_from_json(j);
}

RunConfig load_run_config(const std::filesystem::path& path) {
  RunConfig c = read_run_config(path);
  apply_env_overrides(c);
  validate(c);
  return c;
}

void save_run_config(const RunConfig& config, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream(path) << to_json(config).dump(2) << '\n';
}

}  // namespace ack
