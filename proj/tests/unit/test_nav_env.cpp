#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <functional>
#include <set>

#include "ack/error.hpp"
#include "ack/nav_env.hpp"

using namespace ack;
using namespace ack::nav;

namespace {

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an ack::Error";
  return ErrorCode::InvalidParams;
}

const std::filesystem::path kData = ACK_DATA_DIR;

struct World {
  RoomPools pools = load_room_pools(kData / "room_pools.json");
  std::vector<std::string> templates = load_templates(kData / "instructions.json");
  Vocabulary vocab = Vocabulary::build(pools, templates);
};

const World& world() {
  static const World w;
  return w;
}

// Floyd-Warshall over the edge list, independent of the BFS in the library.
std::vector<std::vector<int>> all_pairs(const NavEnvironment& env) {
  const std::size_t n = env.nodes.size();
  const int inf = 1 << 20;
  std::vector<std::vector<int>> d(n, std::vector<int>(n, inf));
  for (std::size_t i = 0; i < n; ++i) d[i][i] = 0;
  for (auto [a, b] : env.edges) d[a][b] = d[b][a] = 1;
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) d[i][j] = std::min(d[i][j], d[i][k] + d[k][j]);
  for (auto& row : d)
    for (int& x : row)
      if (x >= inf) x = -1;
  return d;
}

Trajectory make_traj(std::vector<int> dist, std::optional<std::string> object) {
  Trajectory t;
  for (std::size_t i = 0; i < dist.size(); ++i) t.nodes.push_back(static_cast<int>(i));
  t.goal_distance = std::move(dist);
  t.predicted_object = std::move(object);
  t.stopped = true;
  return t;
}

Episode make_episode(int shortest, std::string target) {
  Episode e;
  e.shortest = shortest;
  e.target = std::move(target);
  return e;
}

std::filesystem::path temp_file(const std::string& name, const std::string& body) {
  auto p = std::filesystem::temp_directory_path() / ("ack_nav_" + name);
  std::ofstream(p) << body;
  return p;
}

}  // namespace

TEST(DataFiles, LoadShipped) {
  const auto& w = world();
  EXPECT_EQ(w.pools.hub, "hallway");
  EXPECT_GE(w.pools.rooms.size(), 6u);
  EXPECT_EQ(w.templates.size(), 6u);
  EXPECT_EQ(code_of([] { load_room_pools("/nonexistent/pools.json"); }), ErrorCode::FileMissing);
  EXPECT_EQ(code_of([] { load_templates(temp_file("bad.json", "{not json")); }), ErrorCode::ParseError);
  EXPECT_EQ(code_of([] { load_templates(temp_file("v2.json", R"({"schema_version": 2, "templates": []})")); }),
            ErrorCode::ParseError);
  EXPECT_EQ(code_of([] { world().pools.room("attic"); }), ErrorCode::InvalidParams);
}

TEST(VocabularyTest, SpecialsAndEncoding) {
  Vocabulary v({"zebra", "apple", "apple", "[CLS]"});
  ASSERT_EQ(v.size(), 6u);
  EXPECT_EQ(v.words()[0], "[PAD]");
  EXPECT_EQ(v.words()[3], "[SEP]");
  EXPECT_EQ(v.id("apple"), 4);
  EXPECT_EQ(v.id("zebra"), 5);
  EXPECT_EQ(v.encode("Apple  mango ZEBRA"), (std::vector<int>{2, 4, 1, 5, 3}));
  EXPECT_EQ(v.encode(""), (std::vector<int>{2, 3}));
}

TEST(VocabularyTest, BuildCoversRoomsObjectsAndTemplates) {
  const auto& w = world();
  for (const auto& r : w.pools.rooms) {
    for (const auto& o : r.objects) {
      for (int id : w.vocab.encode(o)) EXPECT_NE(id, Vocabulary::kUnk) << o;
    }
    for (int id : w.vocab.encode(r.label)) EXPECT_NE(id, Vocabulary::kUnk) << r.label;
  }
  EXPECT_NE(w.vocab.id("find"), Vocabulary::kUnk);
  EXPECT_EQ(w.vocab.id("{room}"), Vocabulary::kUnk);
}

TEST(Environment, DeterministicPerSeed) {
  const auto& w = world();
  auto a = generate_environment(5, {}, w.pools);
  auto b = generate_environment(5, {}, w.pools);
  auto c = generate_environment(6, {}, w.pools);
  EXPECT_EQ(to_json(a).dump(), to_json(b).dump());
  EXPECT_NE(to_json(a).dump(), to_json(c).dump());
  EXPECT_EQ(a.size(), 16u);
}

TEST(Environment, InvalidParams) {
  const auto& w = world();
  EnvParams p;
  p.n_nodes = 1;
  EXPECT_EQ(code_of([&] { generate_environment(1, p, w.pools); }), ErrorCode::InvalidParams);
  p = {};
  p.object_density = 0.0;
  EXPECT_EQ(code_of([&] { generate_environment(1, p, w.pools); }), ErrorCode::InvalidParams);
  p = {};
  p.far_objects = -1;
  EXPECT_EQ(code_of([&] { generate_environment(1, p, w.pools); }), ErrorCode::InvalidParams);
}

TEST(Environment, TwoNodes) {
  EnvParams p;
  p.n_nodes = 2;
  auto env = generate_environment(3, p, world().pools);
  ASSERT_EQ(env.size(), 2u);
  EXPECT_EQ(env.edges, (std::vector<std::pair<int, int>>{{0, 1}}));
  EXPECT_EQ(env.distance(0, 1), 1);
  EXPECT_EQ(env.diameter(), 1);
  EXPECT_EQ(env.nodes[0].candidates.size(), 1u);
  EXPECT_EQ(env.nodes[0].candidates[0].view_id, "v0_1");
  EXPECT_EQ(env.here_view(1).view_id, "v1_1");
}

TEST(Environment, StructuralInvariantsOver100Seeds) {
  const auto& w = world();
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    EnvParams p;
    p.n_nodes = 10 + static_cast<int>(seed % 25);
    auto env = generate_environment(seed, p, w.pools);
    ASSERT_EQ(env.size(), static_cast<std::size_t>(p.n_nodes));
    EXPECT_TRUE(std::is_sorted(env.edges.begin(), env.edges.end()));
    EXPECT_EQ(std::set(env.edges.begin(), env.edges.end()).size(), env.edges.size());
    EXPECT_EQ(env.distances, all_pairs(env)) << "seed " << seed;
    std::set<std::pair<int, int>> edge_set(env.edges.begin(), env.edges.end());
    for (const auto& v : env.nodes) {
      ASSERT_FALSE(v.objects.empty());
      std::set<std::string> labels;
      for (const auto& o : v.objects) labels.insert(o.label);
      EXPECT_EQ(labels.size(), v.objects.size());
      int prev = -1;
      for (const auto& c : v.candidates) {
        EXPECT_GT(c.to, prev);
        prev = c.to;
        EXPECT_TRUE(edge_set.count({std::min(v.id, c.to), std::max(v.id, c.to)}));
        EXPECT_EQ(c.view_id, "v" + std::to_string(v.id) + "_" + std::to_string(c.to));
        const auto& target = env.nodes[c.to].objects;
        ASSERT_GE(c.objects.size(), target.size());
        EXPECT_LE(c.objects.size(), target.size() + 3);
        for (std::size_t k = 0; k < target.size(); ++k) EXPECT_EQ(c.objects[k].label, target[k].label);
        EXPECT_GE(c.pose.theta, -3.1416);
        EXPECT_LE(c.pose.theta, 3.1416);
      }
    }
    std::size_t degree_sum = 0;
    for (const auto& v : env.nodes) degree_sum += v.candidates.size();
    EXPECT_EQ(degree_sum, 2 * env.edges.size());
  }
}

TEST(Environment, JsonRoundTrip) {
  auto env = generate_environment(11, {}, world().pools);
  auto back = environment_from_json(nlohmann::json::parse(to_json(env).dump()));
  EXPECT_EQ(to_json(back).dump(), to_json(env).dump());
  EXPECT_EQ(back.distances, env.distances);
  EXPECT_EQ(code_of([] { environment_from_json(nlohmann::json::object()); }), ErrorCode::ParseError);
}

TEST(Episodes, ThousandAreValid) {
  const auto& w = world();
  std::vector<NavEnvironment> envs;
  for (std::uint64_t s = 0; s < 20; ++s) envs.push_back(generate_environment(100 + s, {}, w.pools));
  for (int i = 0; i < 1000; ++i) {
    const auto& env = envs[i % envs.size()];
    auto ep = generate_episode(env, 7000 + i, w.templates, w.vocab);
    ASSERT_GE(ep.goal, 0);
    ASSERT_LT(ep.goal, static_cast<int>(env.size()));
    EXPECT_EQ(ep.shortest, all_pairs(env)[ep.start][ep.goal]);
    EXPECT_GE(ep.shortest, 1);
    EXPECT_LE(ep.shortest, 10);
    int holders = 0;
    for (const auto& v : env.nodes)
      for (const auto& o : v.objects) holders += o.label == ep.target;
    EXPECT_EQ(holders, 1) << ep.target;
    const auto& goal_objects = env.nodes[ep.goal].objects;
    EXPECT_TRUE(std::any_of(goal_objects.begin(), goal_objects.end(),
                            [&](const auto& o) { return o.label == ep.target; }));
    EXPECT_EQ(ep.room, env.nodes[ep.goal].room);
    EXPECT_NE(ep.instruction.find(ep.target), std::string::npos);
    EXPECT_NE(ep.instruction.find(ep.room), std::string::npos);
    EXPECT_EQ(ep.instruction.find('{'), std::string::npos);
    EXPECT_EQ(ep.tokens, w.vocab.encode(ep.instruction));
    EXPECT_EQ(std::count(ep.tokens.begin(), ep.tokens.end(), Vocabulary::kUnk), 0);
  }
}

TEST(Episodes, DeterministicAndRoundTrip) {
  const auto& w = world();
  auto env = generate_environment(1, {}, w.pools);
  auto a = generate_episode(env, 42, w.templates, w.vocab);
  EXPECT_EQ(a, generate_episode(env, 42, w.templates, w.vocab));
  EXPECT_EQ(episode_from_json(nlohmann::json::parse(to_json(a).dump())), a);
}

TEST(Episodes, NoUniqueObjectMeansNoGoal) {
  const auto& w = world();
  auto env = generate_environment(2, {}, w.pools);
  for (auto& v : env.nodes) v.objects = {{"chair", 0.0, 0.0}};
  EXPECT_EQ(code_of([&] { generate_episode(env, 1, w.templates, w.vocab); }), ErrorCode::NoValidGoal);
}

TEST(Demonstrator, FollowsShortestPath) {
  const auto& w = world();
  auto env = generate_environment(8, {}, w.pools);
  for (int goal = 0; goal < static_cast<int>(env.size()); ++goal) {
    EXPECT_EQ(demonstrator_action(env, goal, goal), kStop);
    for (int start = 0; start < static_cast<int>(env.size()); ++start) {
      if (start == goal) continue;
      int a = demonstrator_action(env, start, goal);
      EXPECT_EQ(env.distance(a, goal), env.distance(start, goal) - 1);
    }
  }
  auto broken = env;
  broken.edges.clear();
  rebuild_distances(broken);
  EXPECT_EQ(code_of([&] { demonstrator_action(broken, 0, 1); }), ErrorCode::UnreachableGoal);
}

TEST(Rollout, TeacherReachesGoalOnShortestPath) {
  const auto& w = world();
  auto env = generate_environment(9, {}, w.pools);
  std::vector<Trajectory> trajs;
  std::vector<Episode> eps;
  for (int i = 0; i < 30; ++i) {
    auto ep = generate_episode(env, i, w.templates, w.vocab);
    DemonstratorPolicy demo;
    auto t = rollout(env, ep, demo, RolloutMode::Teacher);
    EXPECT_TRUE(t.stopped);
    EXPECT_EQ(t.length(), ep.shortest);
    EXPECT_EQ(t.actions, t.demonstrator);
    EXPECT_EQ(t.nodes.back(), ep.goal);
    ASSERT_TRUE(t.predicted_object);
    EXPECT_EQ(*t.predicted_object, ep.target);
    trajs.push_back(t);
    eps.push_back(ep);
  }
  auto m = compute_metrics(trajs, eps);
  EXPECT_DOUBLE_EQ(m.sr, 1.0);
  EXPECT_DOUBLE_EQ(m.spl, 1.0);
  EXPECT_DOUBLE_EQ(m.rgs, 1.0);
  EXPECT_DOUBLE_EQ(m.rgspl, 1.0);
}

TEST(Rollout, ZeroStepBudget) {
  const auto& w = world();
  auto env = generate_environment(9, {}, w.pools);
  auto ep = generate_episode(env, 3, w.templates, w.vocab);
  ep.max_steps = 0;
  RandomPolicy random(1);
  auto t = rollout(env, ep, random, RolloutMode::Argmax);
  EXPECT_EQ(t.length(), 0);
  EXPECT_EQ(t.actions.size(), 1u);
  EXPECT_FALSE(t.stopped);
  EXPECT_TRUE(t.predicted_object.has_value());
}

TEST(Rollout, StepLimitAndModes) {
  const auto& w = world();
  auto env = generate_environment(12, {}, w.pools);
  auto ep = generate_episode(env, 5, w.templates, w.vocab);
  RandomPolicy random(2);
  EXPECT_EQ(code_of([&] { rollout(env, ep, random, RolloutMode::Sample); }), ErrorCode::InvalidParams);
  for (int i = 0; i < 50; ++i) {
    Rng rng(i);
    RandomPolicy p(i);
    auto t = rollout(env, ep, p, RolloutMode::Sample, &rng);
    EXPECT_LE(t.length(), ep.max_steps);
    EXPECT_EQ(t.actions.size(), t.demonstrator.size());
    EXPECT_EQ(t.goal_distance.size(), t.nodes.size());
    for (std::size_t k = 0; k + 1 < t.nodes.size(); ++k) {
      EXPECT_EQ(env.distance(t.nodes[k], t.nodes[k + 1]), 1);
    }
  }
}

TEST(Metrics, HandcraftedCases) {
  std::vector<Trajectory> t{make_traj({2, 1, 0}, "bed"), make_traj({2, 1, 2, 1, 0}, "lamp"),
                            make_traj({1, 0, 1}, "bed"), make_traj({3, 2}, std::nullopt)};
  std::vector<Episode> e{make_episode(2, "bed"), make_episode(2, "bed"), make_episode(2, "bed"),
                         make_episode(3, "bed")};
  auto m = compute_metrics(t, e);
  EXPECT_EQ(m.episodes, 4u);
  EXPECT_DOUBLE_EQ(m.tl, 2.25);
  EXPECT_DOUBLE_EQ(m.osr, 0.75);
  EXPECT_DOUBLE_EQ(m.sr, 0.5);
  EXPECT_DOUBLE_EQ(m.spl, 0.375);
  EXPECT_DOUBLE_EQ(m.rgs, 0.25);
  EXPECT_DOUBLE_EQ(m.rgspl, 0.25);
  // Radius 1 turns the third case into a success.
  EXPECT_DOUBLE_EQ(compute_metrics(t, e, 1).sr, 0.75);
  EXPECT_EQ(csv_header(), "TL,OSR,SR,SPL,RGS,RGSPL");
  EXPECT_EQ(csv_row(m), "2.250000,0.750000,0.500000,0.375000,0.250000,0.250000");
  EXPECT_DOUBLE_EQ(to_json(m)["SPL"].get<double>(), 0.375);
}

TEST(Metrics, EmptyAndMismatch) {
  auto m = compute_metrics({}, {});
  EXPECT_EQ(m.episodes, 0u);
  EXPECT_EQ(m.sr, 0.0);
  EXPECT_EQ(code_of([] { compute_metrics({make_traj({0}, "x")}, {}); }), ErrorCode::CountMismatch);
}

TEST(Metrics, OrderingInvariantsUnderRandomPolicies) {
  const auto& w = world();
  Rng rng(77);
  for (int trial = 0; trial < 20; ++trial) {
    auto env = generate_environment(500 + trial, {}, w.pools);
    std::vector<Trajectory> trajs;
    std::vector<Episode> eps;
    for (int i = 0; i < 20; ++i) {
      auto ep = generate_episode(env, trial * 100 + i, w.templates, w.vocab);
      ep.max_steps = 1 + static_cast<int>(rng.index(8));
      RandomPolicy p(rng.next());
      Rng sample(rng.next());
      trajs.push_back(rollout(env, ep, p, RolloutMode::Sample, &sample));
      eps.push_back(ep);
    }
    auto m = compute_metrics(trajs, eps);
    EXPECT_LE(m.rgs, m.sr);
    EXPECT_LE(m.sr, m.osr);
    EXPECT_LE(m.spl, m.sr + 1e-12);
    EXPECT_LE(m.rgspl, m.spl + 1e-12);
    EXPECT_LE(m.rgspl, m.rgs + 1e-12);
    EXPECT_GE(m.tl, 0.0);
  }
}

TEST(Metrics, RandomBaselineRarelySucceeds) {
  const auto& w = world();
  std::vector<Trajectory> trajs;
  std::vector<Episode> eps;
  Rng rng(1234);
  for (int i = 0; i < 250; ++i) {
    auto env = generate_environment(900 + i % 25, {}, w.pools);
    auto ep = generate_episode(env, i, w.templates, w.vocab);
    RandomPolicy p(i);
    trajs.push_back(rollout(env, ep, p, RolloutMode::Sample, &rng));
    eps.push_back(ep);
  }
  EXPECT_LT(compute_metrics(trajs, eps).sr, 0.5);
}

TEST(Splits, SaveLoadRoundTrip) {
  const auto& w = world();
  Split s;
  s.name = "val_unseen";
  s.environments.push_back(generate_environment(1, {}, w.pools));
  s.environments.push_back(generate_environment(2, {}, w.pools));
  s.episodes.emplace_back(1, generate_episode(s.environments[1], 9, w.templates, w.vocab));
  auto path = std::filesystem::temp_directory_path() / "ack_nav_split" / "split.json";
  save_split(s, path);
  auto back = load_split(path);
  EXPECT_EQ(back.name, s.name);
  ASSERT_EQ(back.environments.size(), 2u);
  EXPECT_EQ(to_json(back.environments[1]).dump(), to_json(s.environments[1]).dump());
  ASSERT_EQ(back.episodes.size(), 1u);
  EXPECT_EQ(back.episodes[0].first, 1);
  EXPECT_EQ(back.episodes[0].second, s.episodes[0].second);
  EXPECT_EQ(code_of([] { load_split("/nonexistent/split.json"); }), ErrorCode::FileMissing);
}
