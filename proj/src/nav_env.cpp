#include "ack/nav_env.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <queue>
#include <set>
#include <sstream>

#include "ack/error.hpp"
#include "ack/knowledge_base.hpp"

namespace ack::nav {

namespace {

nlohmann::json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!std::filesystem::is_regular_file(path) || !in) {
    throw Error(ErrorCode::FileMissing, "file not found: " + path.string());
  }
  auto j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded()) throw Error(ErrorCode::ParseError, path.string() + ": not valid JSON");
  return j;
}

void check_schema(const nlohmann::json& j, const std::string& what) {
  if (!j.is_object() || j.value("schema_version", -1) != kSchemaVersion) {
    throw Error(ErrorCode::ParseError, what + ": unsupported or missing schema_version");
  }
}

double gaussian(Rng& rng) {
  double u1 = rng.uniform();
  while (u1 <= 0.0) u1 = rng.uniform();
  const double u2 = rng.uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double wrap_angle(double a) {
  while (a > std::numbers::pi) a -= 2.0 * std::numbers::pi;
  while (a < -std::numbers::pi) a += 2.0 * std::numbers::pi;
  return a;
}

std::vector<std::string> split_words(const std::string& text) {
  std::istringstream in(kb::normalize_label(text));
  std::vector<std::string> out;
  for (std::string w; in >> w;) out.push_back(w);
  return out;
}

std::string render(std::string tmpl, const std::string& key, const std::string& value) {
  const std::string needle = "{" + key + "}";
  for (auto pos = tmpl.find(needle); pos != std::string::npos; pos = tmpl.find(needle)) {
    tmpl.replace(pos, needle.size(), value);
  }
  return tmpl;
}

nlohmann::ordered_json objects_json(const std::vector<graph::ObjectObservation>& objects) {
  auto arr = nlohmann::ordered_json::array();
  for (const auto& o : objects) arr.push_back({{"label", o.label}, {"d_theta", o.d_theta}, {"d_psi", o.d_psi}});
  return arr;
}

std::vector<graph::ObjectObservation> objects_from(const nlohmann::json& arr) {
  std::vector<graph::ObjectObservation> out;
  for (const auto& o : arr) out.push_back({o.at("label"), o.at("d_theta"), o.at("d_psi")});
  return out;
}

bool same_objects(const std::vector<graph::ObjectObservation>& a, const std::vector<graph::ObjectObservation>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].label != b[i].label || a[i].d_theta != b[i].d_theta || a[i].d_psi != b[i].d_psi) return false;
  }
  return true;
}

std::string view_id(int from, int to) { return "v" + std::to_string(from) + "_" + std::to_string(to); }

}  // namespace

const RoomPool& RoomPools::room(const std::string& label) const {
  for (const auto& r : rooms)
    if (r.label == label) return r;
  throw Error(ErrorCode::InvalidParams, "unknown room '" + label + "'");
}

RoomPools load_room_pools(const std::filesystem::path& path) {
  auto j = read_json(path);
  check_schema(j, path.string());
  RoomPools pools;
  try {
    pools.hub = j.at("hub_room");
    for (const auto& r : j.at("rooms")) {
      RoomPool pool{kb::normalize_label(r.at("label").get<std::string>()), {}};
      for (const auto& o : r.at("objects")) pool.objects.push_back(kb::normalize_label(o.get<std::string>()));
      pools.rooms.push_back(std::move(pool));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, path.string() + ": " + e.what());
  }
  pools.room(pools.hub);
  return pools;
}

std::vector<std::string> load_templates(const std::filesystem::path& path) {
  auto j = read_json(path);
  check_schema(j, path.string());
  try {
    return j.at("templates").get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, path.string() + ": " + e.what());
  }
}

Vocabulary::Vocabulary(const std::vector<std::string>& words) {
  words_ = {"[PAD]", "[UNK]", "[CLS]", "[SEP]"};
  std::set<std::string> sorted(words.begin(), words.end());
  for (const auto& w : {"[PAD]", "[UNK]", "[CLS]", "[SEP]"}) sorted.erase(w);
  words_.insert(words_.end(), sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < words_.size(); ++i) ids_[words_[i]] = static_cast<int>(i);
}

Vocabulary Vocabulary::build(const RoomPools& pools, const std::vector<std::string>& templates) {
  std::vector<std::string> words;
  for (const auto& t : templates) {
    for (const auto& w : split_words(t))
      if (w.front() != '{') words.push_back(w);
  }
  for (const auto& r : pools.rooms) {
    for (const auto& w : split_words(r.label)) words.push_back(w);
    for (const auto& o : r.objects)
      for (const auto& w : split_words(o)) words.push_back(w);
  }
  return Vocabulary(words);
}

int Vocabulary::id(const std::string& word) const {
  auto it = ids_.find(word);
  return it == ids_.end() ? kUnk : it->second;
}

std::vector<int> Vocabulary::encode(const std::string& text) const {
  std::vector<int> out{kCls};
  for (const auto& w : split_words(text)) out.push_back(id(w));
  out.push_back(kSep);
  return out;
}

bool CandidateDirection::operator==(const CandidateDirection& o) const {
  return to == o.to && view_id == o.view_id && pose.theta == o.pose.theta && pose.psi == o.pose.psi &&
         same_objects(objects, o.objects);
}

int NavEnvironment::distance(int a, int b) const {
  const int n = static_cast<int>(nodes.size());
  if (a < 0 || b < 0 || a >= n || b >= n) throw Error(ErrorCode::InvalidParams, "node id out of range");
  return distances[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)];
}

CandidateDirection NavEnvironment::here_view(int node) const {
  const auto& v = nodes.at(static_cast<std::size_t>(node));
  return {node, view_id(node, node), {0.0, 0.0}, v.objects};
}

int NavEnvironment::diameter() const {
  int best = 0;
  for (const auto& row : distances)
    for (int d : row) best = std::max(best, d);
  return best;
}

void rebuild_distances(NavEnvironment& env) {
  const std::size_t n = env.nodes.size();
  std::vector<std::vector<int>> adj(n);
  for (auto [a, b] : env.edges) {
    adj[static_cast<std::size_t>(a)].push_back(b);
    adj[static_cast<std::size_t>(b)].push_back(a);
  }
  env.distances.assign(n, std::vector<int>(n, -1));
  for (std::size_t s = 0; s < n; ++s) {
    auto& dist = env.distances[s];
    std::queue<int> q;
    dist[s] = 0;
    q.push(static_cast<int>(s));
    while (!q.empty()) {
      int u = q.front();
      q.pop();
      for (int w : adj[static_cast<std::size_t>(u)]) {
        if (dist[static_cast<std::size_t>(w)] < 0) {
          dist[static_cast<std::size_t>(w)] = dist[static_cast<std::size_t>(u)] + 1;
          q.push(w);
        }
      }
    }
  }
}

NavEnvironment generate_environment(std::uint64_t seed, const EnvParams& params, const RoomPools& pools) {
  if (params.n_nodes < 2) throw Error(ErrorCode::InvalidParams, "n_nodes must be at least 2");
  if (params.n_rooms < 1) throw Error(ErrorCode::InvalidParams, "n_rooms must be at least 1");
  if (!(params.object_density > 0.0)) throw Error(ErrorCode::InvalidParams, "object_density must be positive");
  if (params.far_objects < 0) throw Error(ErrorCode::InvalidParams, "far_objects must be non-negative");
  if (pools.rooms.empty()) throw Error(ErrorCode::InvalidParams, "no room pools");
  Rng rng(mix_seed(seed, 0x656e76));

  std::vector<std::string> others;
  for (const auto& r : pools.rooms)
    if (r.label != pools.hub) others.push_back(r.label);
  rng.shuffle(others);
  const int n_rooms = std::min({params.n_rooms, params.n_nodes, static_cast<int>(others.size()) + 1});
  std::vector<std::string> rooms{pools.hub};
  rooms.insert(rooms.end(), others.begin(), others.begin() + (n_rooms - 1));

  std::vector<int> counts(static_cast<std::size_t>(n_rooms), 1);
  for (int i = n_rooms; i < params.n_nodes; ++i) ++counts[rng.index(counts.size())];

  NavEnvironment env;
  env.seed = seed;
  env.params = params;
  std::vector<std::vector<int>> members(static_cast<std::size_t>(n_rooms));
  for (int r = 0; r < n_rooms; ++r) {
    double cx = 0.0, cy = 0.0;
    if (r > 0) {
      const double angle = 2.0 * std::numbers::pi * (r - 1) / std::max(1, n_rooms - 1) + rng.uniform(-0.2, 0.2);
      cx = 3.5 * std::cos(angle);
      cy = 3.5 * std::sin(angle);
    }
    for (int k = 0; k < counts[static_cast<std::size_t>(r)]; ++k) {
      Viewpoint v;
      v.id = static_cast<int>(env.nodes.size());
      v.room = rooms[static_cast<std::size_t>(r)];
      v.x = cx + 0.7 * gaussian(rng);
      v.y = cy + 0.7 * gaussian(rng);
      members[static_cast<std::size_t>(r)].push_back(v.id);
      env.nodes.push_back(std::move(v));
    }
  }
  auto dist2 = [&](int a, int b) {
    const auto& p = env.nodes[static_cast<std::size_t>(a)];
    const auto& q = env.nodes[static_cast<std::size_t>(b)];
    return (p.x - q.x) * (p.x - q.x) + (p.y - q.y) * (p.y - q.y);
  };
  std::set<std::pair<int, int>> edges;
  auto connect = [&](int a, int b) { edges.insert({std::min(a, b), std::max(a, b)}); };

  // Inside a room: minimum spanning tree plus a few short chords.
  for (const auto& m : members) {
    std::vector<bool> in_tree(m.size(), false);
    in_tree[0] = true;
    for (std::size_t added = 1; added < m.size(); ++added) {
      double best = std::numeric_limits<double>::infinity();
      std::size_t bi = 0, bj = 0;
      for (std::size_t i = 0; i < m.size(); ++i) {
        if (!in_tree[i]) continue;
        for (std::size_t j = 0; j < m.size(); ++j) {
          if (in_tree[j]) continue;
          const double d = dist2(m[i], m[j]);
          if (d < best) best = d, bi = i, bj = j;
        }
      }
      in_tree[bj] = true;
      connect(m[bi], m[bj]);
    }
    for (std::size_t i = 0; i < m.size(); ++i)
      for (std::size_t j = i + 1; j < m.size(); ++j)
        if (dist2(m[i], m[j]) < 0.64 && rng.bernoulli(0.5)) connect(m[i], m[j]);
  }
  auto closest_pair = [&](const std::vector<int>& a, const std::vector<int>& b) {
    std::pair<int, int> best{a[0], b[0]};
    double bd = std::numeric_limits<double>::infinity();
    for (int i : a)
      for (int j : b)
        if (dist2(i, j) < bd) bd = dist2(i, j), best = {i, j};
    return best;
  };
  for (int r = 1; r < n_rooms; ++r) {
    auto [a, b] = closest_pair(members[0], members[static_cast<std::size_t>(r)]);
    connect(a, b);
  }
  for (int r = 1; r + 1 < n_rooms; ++r) {
    if (rng.bernoulli(params.extra_door_prob)) {
      auto [a, b] = closest_pair(members[static_cast<std::size_t>(r)], members[static_cast<std::size_t>(r) + 1]);
      connect(a, b);
    }
  }
  env.edges.assign(edges.begin(), edges.end());

  // Objects: 1 + Binomial(2(density - 1), 1/2) distinct labels from the room pool.
  for (auto& v : env.nodes) {
    const auto& pool = pools.room(v.room).objects;
    const int trials = std::max(0, static_cast<int>(std::lround(2.0 * (params.object_density - 1.0))));
    int count = 1;
    for (int t = 0; t < trials; ++t) count += rng.bernoulli(0.5) ? 1 : 0;
    count = std::min<int>(count, static_cast<int>(pool.size()));
    std::vector<std::string> labels = pool;
    rng.shuffle(labels);
    for (int k = 0; k < count; ++k) {
      v.objects.push_back({labels[static_cast<std::size_t>(k)], rng.uniform(-0.5, 0.5), rng.uniform(-0.3, 0.3)});
    }
  }

  std::vector<std::vector<int>> adj(env.nodes.size());
  for (auto [a, b] : env.edges) {
    adj[static_cast<std::size_t>(a)].push_back(b);
    adj[static_cast<std::size_t>(b)].push_back(a);
  }
  for (auto& list : adj) std::sort(list.begin(), list.end());
  for (auto& v : env.nodes) {
    for (int u : adj[static_cast<std::size_t>(v.id)]) {
      const auto& target = env.nodes[static_cast<std::size_t>(u)];
      CandidateDirection c;
      c.to = u;
      c.view_id = view_id(v.id, u);
      c.pose = {std::atan2(target.y - v.y, target.x - v.x), 0.0};
      c.objects = target.objects;
      std::vector<std::pair<int, std::size_t>> far;
      for (int w : adj[static_cast<std::size_t>(u)]) {
        if (w == v.id) continue;
        for (std::size_t k = 0; k < env.nodes[static_cast<std::size_t>(w)].objects.size(); ++k) far.push_back({w, k});
      }
      rng.shuffle(far);
      if (far.size() > static_cast<std::size_t>(params.far_objects)) far.resize(static_cast<std::size_t>(params.far_objects));
      std::sort(far.begin(), far.end());
      for (auto [w, k] : far) {
        const auto& wn = env.nodes[static_cast<std::size_t>(w)];
        const double bearing = wrap_angle(std::atan2(wn.y - v.y, wn.x - v.x) - c.pose.theta);
        c.objects.push_back({wn.objects[k].label, std::clamp(bearing, -0.6, 0.6), -0.1});
      }
      v.candidates.push_back(std::move(c));
    }
  }
  rebuild_distances(env);
  for (const auto& row : env.distances)
    for (int d : row)
      if (d < 0) throw Error(ErrorCode::InvalidParams, "generated graph is disconnected");
  return env;
}

Episode generate_episode(const NavEnvironment& env, std::uint64_t seed, const std::vector<std::string>& templates,
                         const Vocabulary& vocab, const EpisodeOptions& options) {
  if (templates.empty()) throw Error(ErrorCode::InvalidParams, "no instruction templates");
  Rng rng(mix_seed(seed, 0x657069));
  std::map<std::string, int> label_count;
  for (const auto& v : env.nodes) {
    std::set<std::string> seen;
    for (const auto& o : v.objects)
      if (seen.insert(o.label).second) ++label_count[o.label];
  }
  struct Goal {
    int node;
    std::string target;
  };
  std::vector<Goal> goals;
  const std::string hub = env.nodes.empty() ? "" : env.nodes[0].room;
  for (const auto& v : env.nodes) {
    if (v.room == hub) continue;
    std::set<std::string> seen;
    for (const auto& o : v.objects) {
      if (label_count[o.label] != 1 || !seen.insert(o.label).second) continue;
      bool has_start = false;
      for (const auto& u : env.nodes) {
        const int d = env.distance(u.id, v.id);
        if (d >= 1 && d <= options.max_start_distance) has_start = true;
      }
      if (has_start) goals.push_back({v.id, o.label});
    }
  }
  if (goals.empty()) throw Error(ErrorCode::NoValidGoal, "no viewpoint holds an object unique to the environment");
  const Goal goal = goals[rng.index(goals.size())];
  std::vector<int> starts;
  for (const auto& u : env.nodes) {
    const int d = env.distance(u.id, goal.node);
    if (d >= 1 && d <= options.max_start_distance) starts.push_back(u.id);
  }
  Episode ep;
  ep.goal = goal.node;
  ep.start = starts[rng.index(starts.size())];
  ep.target = goal.target;
  ep.room = env.nodes[static_cast<std::size_t>(goal.node)].room;
  ep.shortest = env.distance(ep.start, ep.goal);
  ep.max_steps = options.max_steps;

  std::vector<std::string> landmarks;
  for (const auto& o : env.nodes[static_cast<std::size_t>(goal.node)].objects)
    if (o.label != goal.target) landmarks.push_back(o.label);
  std::vector<std::string> usable;
  for (const auto& t : templates)
    if (!landmarks.empty() || t.find("{landmark}") == std::string::npos) usable.push_back(t);
  if (usable.empty()) throw Error(ErrorCode::NoValidGoal, "every template needs a landmark");
  std::string text = usable[rng.index(usable.size())];
  text = render(text, "room", ep.room);
  text = render(text, "target", ep.target);
  if (!landmarks.empty()) text = render(text, "landmark", landmarks[rng.index(landmarks.size())]);
  ep.instruction = text;
  ep.tokens = vocab.encode(text);
  ep.id = static_cast<int>(seed & 0x7fffffff);
  return ep;
}

int demonstrator_action(const NavEnvironment& env, int current, int goal) {
  const int here = env.distance(current, goal);
  if (here < 0) throw Error(ErrorCode::UnreachableGoal, "goal unreachable from node " + std::to_string(current));
  if (here == 0) return kStop;
  int best = -1, best_d = 0;
  for (const auto& c : env.nodes[static_cast<std::size_t>(current)].candidates) {
    const int d = env.distance(c.to, goal);
    if (d < 0) continue;
    if (best < 0 || d < best_d || (d == best_d && c.to < best)) best = c.to, best_d = d;
  }
  if (best < 0) throw Error(ErrorCode::UnreachableGoal, "no neighbor leads to the goal");
  return best;
}

namespace {

int action_index(const Viewpoint& v, int action) {
  if (action == kStop) return static_cast<int>(v.candidates.size());
  for (std::size_t i = 0; i < v.candidates.size(); ++i)
    if (v.candidates[i].to == action) return static_cast<int>(i);
  throw Error(ErrorCode::InvalidParams, "action is not a neighbor");
}

std::optional<std::string> best_object(const Viewpoint& v, const std::vector<double>& scores) {
  if (scores.empty() || scores.size() != v.objects.size()) return std::nullopt;
  auto it = std::max_element(scores.begin(), scores.end());
  return v.objects[static_cast<std::size_t>(it - scores.begin())].label;
}

}  // namespace

Trajectory rollout(const NavEnvironment& env, const Episode& episode, Policy& policy, RolloutMode mode, Rng* rng) {
  if (mode == RolloutMode::Sample && rng == nullptr) throw Error(ErrorCode::InvalidParams, "sample mode needs an rng");
  policy.begin(env, episode);
  Trajectory t;
  int node = episode.start;
  t.nodes.push_back(node);
  t.goal_distance.push_back(env.distance(node, episode.goal));
  Decision last;
  for (int step = 0;; ++step) {
    const auto& v = env.nodes[static_cast<std::size_t>(node)];
    last = policy.decide(env, episode, node, step);
    const int m = static_cast<int>(v.candidates.size());
    if (last.probs.size() != m + 1) throw Error(ErrorCode::LengthMismatch, "policy returned the wrong action count");
    const int demo = action_index(v, demonstrator_action(env, node, episode.goal));
    t.demonstrator.push_back(demo);
    if (step >= episode.max_steps) {
      t.actions.push_back(m);
      break;
    }
    int chosen = 0;
    switch (mode) {
      case RolloutMode::Teacher:
        chosen = demo;
        break;
      case RolloutMode::Argmax:
        last.probs.maxCoeff(&chosen);
        break;
      case RolloutMode::Sample:
        chosen = static_cast<int>(rng->categorical(std::vector<double>(last.probs.data(), last.probs.data() + m + 1)));
        break;
    }
    t.actions.push_back(chosen);
    if (chosen == m) {
      t.stopped = true;
      break;
    }
    node = v.candidates[static_cast<std::size_t>(chosen)].to;
    t.nodes.push_back(node);
    t.goal_distance.push_back(env.distance(node, episode.goal));
  }
  t.predicted_object = best_object(env.nodes[static_cast<std::size_t>(node)], last.object_scores);
  return t;
}

Decision RandomPolicy::decide(const NavEnvironment& env, const Episode&, int node, int) {
  const auto m = static_cast<Eigen::Index>(env.nodes[static_cast<std::size_t>(node)].candidates.size());
  Decision d;
  d.probs = Eigen::VectorXd::Constant(m + 1, 1.0 / static_cast<double>(m + 1));
  for (std::size_t i = 0; i < env.nodes[static_cast<std::size_t>(node)].objects.size(); ++i) {
    d.object_scores.push_back(rng_.uniform());
  }
  return d;
}

Decision DemonstratorPolicy::decide(const NavEnvironment& env, const Episode& episode, int node, int) {
  const auto& v = env.nodes[static_cast<std::size_t>(node)];
  Decision d;
  d.probs = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(v.candidates.size()) + 1);
  d.probs(action_index(v, demonstrator_action(env, node, episode.goal))) = 1.0;
  for (const auto& o : v.objects) d.object_scores.push_back(o.label == episode.target ? 1.0 : 0.0);
  return d;
}

MetricsReport compute_metrics(const std::vector<Trajectory>& trajectories, const std::vector<Episode>& episodes,
                              int success_radius) {
  if (trajectories.size() != episodes.size()) {
    throw Error(ErrorCode::CountMismatch, std::to_string(trajectories.size()) + " trajectories for " +
                                              std::to_string(episodes.size()) + " episodes");
  }
  MetricsReport r;
  r.episodes = episodes.size();
  if (episodes.empty()) return r;
  for (std::size_t i = 0; i < episodes.size(); ++i) {
    const auto& t = trajectories[i];
    const auto& e = episodes[i];
    if (t.goal_distance.empty()) throw Error(ErrorCode::CountMismatch, "trajectory without nodes");
    const double length = t.length();
    const bool success = t.goal_distance.back() <= success_radius;
    const bool oracle = std::any_of(t.goal_distance.begin(), t.goal_distance.end(),
                                    [&](int d) { return d <= success_radius; });
    const bool grounded = success && t.predicted_object && *t.predicted_object == e.target;
    const double denom = std::max<double>(e.shortest, length);
    const double weight = denom > 0.0 ? e.shortest / denom : 1.0;
    r.tl += length;
    r.sr += success;
    r.osr += oracle;
    r.spl += success * weight;
    r.rgs += grounded;
    r.rgspl += grounded * weight;
  }
  const double n = static_cast<double>(episodes.size());
  r.tl /= n;
  r.sr /= n;
  r.osr /= n;
  r.spl /= n;
  r.rgs /= n;
  r.rgspl /= n;
  return r;
}

nlohmann::ordered_json to_json(const MetricsReport& r) {
  return {{"episodes", r.episodes}, {"TL", r.tl},   {"OSR", r.osr},    {"SR", r.sr},
          {"SPL", r.spl},           {"RGS", r.rgs}, {"RGSPL", r.rgspl}};
}

std::string csv_header() { return "TL,OSR,SR,SPL,RGS,RGSPL"; }

std::string csv_row(const MetricsReport& r) {
  std::ostringstream out;
  out.precision(6);
  out << std::fixed << r.tl << ',' << r.osr << ',' << r.sr << ',' << r.spl << ',' << r.rgs << ',' << r.rgspl;
  return out.str();
}

nlohmann::ordered_json to_json(const NavEnvironment& env) {
  nlohmann::ordered_json j;
  j["schema_version"] = kSchemaVersion;
  j["seed"] = env.seed;
  j["params"] = {{"n_nodes", env.params.n_nodes},
                 {"n_rooms", env.params.n_rooms},
                 {"object_density", env.params.object_density},
                 {"far_objects", env.params.far_objects},
                 {"extra_door_prob", env.params.extra_door_prob}};
  auto& nodes = j["nodes"] = nlohmann::ordered_json::array();
  for (const auto& v : env.nodes) {
    nlohmann::ordered_json n;
    n["id"] = v.id;
    n["room"] = v.room;
    n["x"] = v.x;
    n["y"] = v.y;
    n["objects"] = objects_json(v.objects);
    auto& cands = n["candidates"] = nlohmann::ordered_json::array();
    for (const auto& c : v.candidates) {
      cands.push_back({{"to", c.to},
                       {"view_id", c.view_id},
                       {"theta", c.pose.theta},
                       {"psi", c.pose.psi},
                       {"objects", objects_json(c.objects)}});
    }
    nodes.push_back(std::move(n));
  }
  auto& edges = j["edges"] = nlohmann::ordered_json::array();
  for (auto [a, b] : env.edges) edges.push_back({a, b});
  return j;
}

NavEnvironment environment_from_json(const nlohmann::json& j) {
  check_schema(j, "environment");
  try {
    NavEnvironment env;
    env.seed = j.at("seed");
    const auto& p = j.at("params");
    env.params = {p.at("n_nodes"), p.at("n_rooms"), p.at("object_density"), p.at("far_objects"),
                  p.at("extra_door_prob")};
    for (const auto& n : j.at("nodes")) {
      Viewpoint v;
      v.id = n.at("id");
      v.room = n.at("room");
      v.x = n.at("x");
      v.y = n.at("y");
      v.objects = objects_from(n.at("objects"));
      for (const auto& c : n.at("candidates")) {
        v.candidates.push_back({c.at("to"), c.at("view_id"), {c.at("theta"), c.at("psi")}, objects_from(c.at("objects"))});
      }
      env.nodes.push_back(std::move(v));
    }
    for (const auto& e : j.at("edges")) env.edges.emplace_back(e.at(0), e.at(1));
    rebuild_distances(env);
    return env;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("environment: ") + e.what());
  }
}

nlohmann::ordered_json to_json(const Episode& e) {
  return {{"id", e.id},
          {"instruction", e.instruction},
          {"tokens", e.tokens},
          {"start", e.start},
          {"goal", e.goal},
          {"target", e.target},
          {"room", e.room},
          {"shortest", e.shortest},
          {"max_steps", e.max_steps}};
}

Episode episode_from_json(const nlohmann::json& j) {
  try {
    Episode e;
    e.id = j.at("id");
    e.instruction = j.at("instruction");
    e.tokens = j.at("tokens").get<std::vector<int>>();
    e.start = j.at("start");
    e.goal = j.at("goal");
    e.target = j.at("target");
    e.room = j.at("room");
    e.shortest = j.at("shortest");
    e.max_steps = j.at("max_steps");
    return e;
  } catch (const nlohmann::json::exception& ex) {
    throw Error(ErrorCode::ParseError, std::string("episode: ") + ex.what());
  }
}

void save_split(const Split& split, const std::filesystem::path& path) {
  nlohmann::ordered_json j;
  j["schema_version"] = kSchemaVersion;
  j["split"] = split.name;
  auto& envs = j["environments"] = nlohmann::ordered_json::array();
  for (const auto& e : split.environments) envs.push_back(to_json(e));
  auto& eps = j["episodes"] = nlohmann::ordered_json::array();
  for (const auto& [idx, e] : split.episodes) {
    auto ej = to_json(e);
    ej["environment"] = idx;
    eps.push_back(std::move(ej));
  }
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream(path) << j.dump(1) << '\n';
}

Split load_split(const std::filesystem::path& path) {
  auto j = read_json(path);
  check_schema(j, path.string());
  Split s;
  try {
    s.name = j.at("split");
    for (const auto& e : j.at("environments")) s.environments.push_back(environment_from_json(e));
    for (const auto& e : j.at("episodes")) {
      const int idx = e.at("environment");
      if (idx < 0 || idx >= static_cast<int>(s.environments.size())) {
        throw Error(ErrorCode::ParseError, path.string() + ": episode refers to a missing environment");
      }
      s.episodes.emplace_back(idx, episode_from_json(e));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, path.string() + ": " + e.what());
  }
  return s;
}

}  // namespace ack::nav
