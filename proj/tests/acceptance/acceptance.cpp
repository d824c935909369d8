// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <json.hpp>
#include <limits>
#include <numbers>
#include <optional>
#include <queue>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "ack/ack_model.hpp"
#include "ack/agent.hpp"
#include "ack/commands.hpp"
#include "ack/concept_graph.hpp"
#include "ack/embedding.hpp"
#include "ack/error.hpp"
#include "ack/nav_env.hpp"
#include "ack/nn/gradcheck.hpp"
#include "ack/nn/layers.hpp"
#include "ack/nn/ops.hpp"
#include "ack/run_config.hpp"
#include "ack/trainer.hpp"
#include "oracles.hpp"

using namespace ack;
namespace fs = std::filesystem;
using nn::Matrix;
using nn::Tensor;

namespace {

// Tolerances and time budgets.
constexpr double kReductionTol = 1e-9;
constexpr double kGradTol = 1e-4;
constexpr double kEndToEndGradTol = 1e-3;
constexpr double kSrMargin = 0.30;     // trained SR over the random policy
constexpr double kLossRatio = 0.50;    // final loss window over the iteration-10 window
constexpr int kEarlyFrom = 6, kEarlyTo = 15;
constexpr int kFinalWindow = 100;

constexpr double kReductionSeconds = 5;
constexpr double kGradSeconds = 60;
constexpr double kRankingSeconds = 10;
constexpr double kGraphSeconds = 10;
constexpr double kDemoSeconds = 30;
constexpr double kMetricsSeconds = 10;
constexpr double kLearningSeconds = 600;
constexpr double kAblationSeconds = 1800;
constexpr double kDeterminismSeconds = 600;

const fs::path kData = ACK_DATA_DIR;

struct Outcome {
  bool pass = true;
  std::string detail;
};

int failures = 0;

void run(const std::string& name, double budget, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("threw: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (secs > budget) {
    o.pass = false;
    o.detail += " over time budget";
  }
  if (!o.pass) ++failures;
  std::ostringstream line;
  line.precision(3);
  line << (o.pass ? "PASS " : "FAIL ") << name << ": " << o.detail << " (" << std::fixed << secs << " s, budget "
       << budget << " s)";
  std::cout << line.str() << std::endl;
}

Matrix random_matrix(std::mt19937_64& gen, Eigen::Index rows, Eigen::Index cols, double scale = 1.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = u(gen);
  return m;
}

Matrix random_adjacency(std::mt19937_64& gen, Eigen::Index n, double p) {
  std::bernoulli_distribution edge(p);
  Matrix a = Matrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j)
      if (edge(gen)) a(i, j) = a(j, i) = 1.0;
  return a;
}

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(4);
  s << v;
  return s.str();
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("ack_acceptance_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

// 1. KGS with wa = ba = 0 against plain per-head self-attention loops.
Outcome reduction_identity() {
  std::mt19937_64 gen(101);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const int heads = 1 << (trial % 3);
    const Eigen::Index n = 1 + static_cast<Eigen::Index>(gen() % 16);
    const Eigen::Index d = heads * (1 + static_cast<Eigen::Index>(gen() % (32 / heads)));
    nn::ParameterSet params(1000 + trial);
    auto p = nn::make_kgs(params, "kgs", d, heads);
    p.wa.mutable_value().setZero();
    p.ba.mutable_value().setZero();
    Tensor x = Tensor::constant(random_matrix(gen, n, d));
    auto out = nn::kgs_attention(x, random_adjacency(gen, n, 0.4), p);
    const Matrix& xv = x.value();
    auto ref = oracle::multihead(oracle::matmul(xv, p.wq.value()), oracle::matmul(xv, p.wk.value()),
                                 oracle::matmul(xv, p.wv.value()), heads);
    worst = std::max(worst, (out.values.value() - ref.out).cwiseAbs().maxCoeff());
  }
  return {worst <= kReductionTol, "100 instances, max |diff| " + fmt(worst) + " <= " + fmt(kReductionTol)};
}

// Two-step episode for the end-to-end check.
const std::vector<std::string> kVocab{"[PAD]", "[UNK]", "[CLS]", "[SEP]", "go", "to", "the", "bed", "lamp", "kitchen"};

graph::ConceptGraph scene(const emb::TextEmbedder& text, const std::vector<std::string>& labels, double theta) {
  std::vector<graph::ObjectObservation> objects;
  for (std::size_t i = 0; i < labels.size(); ++i) objects.push_back({labels[i], 0.1 * static_cast<double>(i), 0.05});
  return graph::build_scene_graph(objects, {theta, 0.0}, text);
}

graph::ConceptGraph with_knowledge(const emb::TextEmbedder& text, graph::ConceptGraph g, const std::string& label,
                                   Eigen::Index link) {
  graph::ConceptNode node;
  node.label = label;
  node.type = graph::NodeType::Knowledge;
  node.base_embedding = text.embed(label);
  node.score = 0.5;
  g.nodes.push_back(node);
  const auto n = static_cast<Eigen::Index>(g.nodes.size());
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  a.topLeftCorner(n - 1, n - 1) = g.adjacency;
  a(link, n - 1) = a(n - 1, link) = 1.0;
  g.adjacency = a;
  return g;
}

Outcome gradients() {
  std::mt19937_64 gen(202);
  std::vector<std::string> parts;
  bool pass = true;
  auto record = [&](const std::string& name, const nn::GradCheckReport& r, double tol) {
    const bool ok = r.max_rel_error < tol && r.entries > 0;
    pass = pass && ok;
    parts.push_back(name + " " + fmt(r.max_rel_error) + (ok ? "" : " (worst " + r.worst + ")"));
  };
  auto leaves_of = [](const nn::ParameterSet& ps, std::vector<std::pair<std::string, Tensor>> extra) {
    for (const auto& [name, t] : ps.all()) extra.emplace_back(name, t);
    return extra;
  };

  Tensor logits = Tensor::parameter(random_matrix(gen, 4, 7, 3.0));
  record("softmax", nn::check_gradients([&] { return nn::softmax_rows(logits); }, {{"x", logits}}), kGradTol);

  {
    nn::ParameterSet ps(15);
    auto p = nn::make_cross_attention(ps, "ca", 8, 2);
    for (auto* l : {&p.q, &p.k, &p.v, &p.o}) l->bias.mutable_value() = random_matrix(gen, 1, 8, 0.5);
    Tensor q = Tensor::parameter(random_matrix(gen, 3, 8));
    Tensor kv = Tensor::parameter(random_matrix(gen, 5, 8));
    record("cross_attention",
           nn::check_gradients([&] { return nn::cross_attention(q, kv, p).values; },
                               leaves_of(ps, {{"queries", q}, {"keys_values", kv}})),
           kGradTol);
  }
  {
    nn::ParameterSet ps(7);
    auto p = nn::make_kgs(ps, "kgs", 8, 2);
    p.wa.mutable_value() = random_matrix(gen, p.wa.rows(), p.wa.cols());
    Tensor x = Tensor::parameter(random_matrix(gen, 5, 8));
    Matrix a = random_adjacency(gen, 5, 0.5);
    // ba's true gradient is exactly zero; the absolute floor keeps its rounding noise from counting.
    record("kgs_attention",
           nn::check_gradients([&] { return nn::kgs_attention(x, a, p).values; }, leaves_of(ps, {{"x", x}}), 1e-5,
                               1e-6),
           kGradTol);
  }
  {
    nn::ParameterSet ps(32);
    auto e = nn::make_text_encoder(ps, "text", 8, 8, 2, 1, 6, 2, 3);
    for (const auto& [name, t] : ps.all())
      if (name.find("bias") != std::string::npos || name.find("beta") != std::string::npos)
        Tensor(t).mutable_value() = random_matrix(gen, t.rows(), t.cols(), 0.3);
    std::vector<int> tokens{2, 4, 6, 4, 3};
    record("text_encode",
           nn::check_gradients([&] { return nn::text_encode(tokens, e).instruction; }, leaves_of(ps, {})), kGradTol);
  }
  {
    emb::HashTextEmbedder text(16);
    model::ModelConfig c;
    c.dim = 8;
    c.heads = 2;
    c.layers = 2;
    c.text_layers = 1;
    c.max_len = 12;
    model::AckModel m(c, kVocab, text, 21);
    model::Observation obs;
    obs.candidates.push_back(
        {"v0_1", with_knowledge(text, scene(text, {"bed", "lamp"}, 0.3), "pillow", 1), text.embed("bed")});
    obs.candidates.push_back({"v0_2", scene(text, {"stove"}, -1.2), text.embed("stove")});
    obs.candidates.push_back({"v0_3", scene(text, {"sofa", "rug", "lamp"}, 2.0), text.embed("sofa")});
    obs.here = {"v0_0", scene(text, {"mirror", "sink"}, 0.0), text.embed("mirror")};
    const std::vector<int> tokens{2, 4, 5, 6, 7, 3};
    auto loss = [&] {
      auto s = m.init_history(tokens);
      std::vector<model::StepRecord> steps;
      for (int t = 0; t < 2; ++t) {
        auto out = m.step(s, obs);
        steps.push_back({out.fused, out.scores.nav, out.scores.objects, t == 0 ? 2 : 3});
        s = out.next;
      }
      return model::losses(steps, 1, {}).total;
    };
    record("end_to_end", nn::check_gradients(loss, leaves_of(m.params(), {}), 1e-5, 1e-6), kEndToEndGradTol);
  }
  std::string detail;
  for (const auto& p : parts) detail += (detail.empty() ? "" : ", ") + p;
  return {pass, "max rel error " + detail};
}

// 3. Ranking against a loop-based scorer with a full sort.
double loop_cosine(const emb::EmbeddingVector& a, const emb::EmbeddingVector& b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  return dot / std::sqrt(na * nb);
}

struct Scored {
  kb::KnowledgeTriple triple;
  std::string label;
  double score;
};

std::vector<Scored> brute_force(const emb::TextEmbedder& text, const emb::EmbeddingVector& view,
                                const std::set<std::string>& objects, const std::vector<kb::KnowledgeTriple>& facts,
                                std::size_t k) {
  std::vector<Scored> all;
  for (const auto& f : facts) {
    const bool start_obj = objects.count(f.start) > 0;
    const bool end_obj = objects.count(f.end) > 0;
    std::string label = (end_obj && !start_obj) ? f.start : f.end;
    auto kv = text.embed(label);
    double obj = 0.0;
    for (const auto& o : objects) obj += loop_cosine(kv, text.embed(o));
    all.push_back({f, label, 0.5 * loop_cosine(kv, view) + 0.5 * obj / static_cast<double>(objects.size())});
  }
  std::sort(all.begin(), all.end(), [](const Scored& a, const Scored& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.label != b.label) return a.label < b.label;
    return a.triple < b.triple;
  });
  if (all.size() > k) all.resize(k);
  return all;
}

Outcome ranking_oracle() {
  std::vector<std::string> vocab;
  std::ifstream in(kData / "detector_vocabulary.txt");
  for (std::string line; std::getline(in, line);)
    if (!line.empty()) vocab.push_back(line);
  auto text = std::make_shared<emb::HashTextEmbedder>();
  const auto& relations = kb::default_relation_set();
  std::mt19937_64 gen(303);
  int mismatched = 0;
  std::size_t largest = 0;
  for (int trial = 0; trial < 100; ++trial) {
    std::set<std::string> objects;
    const int n_obj = 1 + static_cast<int>(gen() % 5);
    while (static_cast<int>(objects.size()) < n_obj) objects.insert(vocab[gen() % vocab.size()]);
    std::vector<std::string> obj_list(objects.begin(), objects.end());
    std::vector<std::string> pool;
    for (int i = 0; i < 30; ++i) pool.push_back(vocab[gen() % vocab.size()]);
    const std::size_t n_facts = 1 + gen() % 200;
    std::set<kb::KnowledgeTriple> fact_set;
    while (fact_set.size() < n_facts) {
      std::string o = obj_list[gen() % obj_list.size()];
      std::string other = gen() % 8 == 0 ? obj_list[gen() % obj_list.size()] : pool[gen() % pool.size()];
      if (o == other) continue;
      kb::KnowledgeTriple t{o, relations[gen() % relations.size()], other};
      if (gen() % 2) std::swap(t.start, t.end);
      fact_set.insert(t);
    }
    std::vector<kb::KnowledgeTriple> facts(fact_set.begin(), fact_set.end());
    std::shuffle(facts.begin(), facts.end(), gen);
    largest = std::max(largest, facts.size());
    emb::SyntheticImageEmbedder image(text, trial, 0.5);
    image.add_view("view", obj_list);
    const std::size_t k = gen() % (n_facts + 5);
    auto got = emb::rank_knowledge(*text, image, "view", objects, facts, k);
    auto want = brute_force(*text, image.embed("view"), objects, facts, k);
    bool same = got.size() == want.size();
    for (std::size_t i = 0; same && i < got.size(); ++i)
      same = got[i].triple == want[i].triple && got[i].knowledge_label == want[i].label;
    if (!same) ++mismatched;
  }
  return {mismatched == 0, std::to_string(100 - mismatched) + "/100 instances with identical set and order, up to " +
                               std::to_string(largest) + " facts"};
}

// 4. Adjacency invariants on random expanded graphs.
Outcome graph_invariants() {
  emb::HashTextEmbedder text;
  std::mt19937_64 gen(404);
  const std::vector<std::string> labels{"bed",     "lamp",    "sofa",   "rug",   "sink",  "oven",
                                        "desk",    "chair",   "tv",     "plant", "bedroom", "kitchen",
                                        "office",  "light",   "sleep",  "cook",  "wood",  "house"};
  const auto& relations = kb::default_relation_set();
  std::uniform_real_distribution<double> angle(-std::numbers::pi, std::numbers::pi);
  int bad = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    kb::KnowledgeStore store;
    for (int i = 0; i < 40; ++i) {
      auto a = labels[gen() % labels.size()], b = labels[gen() % labels.size()];
      if (a != b) store.add({a, relations[gen() % relations.size()], b});
    }
    std::vector<graph::ObjectObservation> objs;
    std::set<std::string> obj_labels;
    const int n_obj = static_cast<int>(gen() % 7);
    for (int i = 0; i < n_obj; ++i) {
      objs.push_back({labels[gen() % 10], angle(gen) / 4, angle(gen) / 8});
      obj_labels.insert(objs.back().label);
    }
    auto s = graph::build_scene_graph(objs, {angle(gen), angle(gen) / 2}, text);
    auto ranked = emb::rank_knowledge(text, text.embed("house"), obj_labels, store.query_by_objects(obj_labels),
                                      gen() % 12);
    auto g = graph::add_history_node(graph::expand_with_knowledge(s, ranked, store, text), Eigen::VectorXd::Zero(4), 4);
    const auto& a = g.adjacency;
    const auto n = a.rows();
    bool ok = static_cast<std::size_t>(n) == g.size() && a == a.transpose() && (a.diagonal().array() == 0.0).all();
    for (Eigen::Index j = 1; ok && j < n; ++j) ok = a(0, j) == 1.0;
    for (Eigen::Index i = 1; ok && i < n; ++i) {
      const auto& ni = g.nodes[static_cast<std::size_t>(i)];
      if (ni.type == graph::NodeType::Knowledge) ok = ni.directional == graph::Directional{0, 0, 0, 0};
      for (Eigen::Index j = 1; ok && j < n; ++j)
        if (i != j && ni.type == graph::NodeType::Object &&
            g.nodes[static_cast<std::size_t>(j)].type == graph::NodeType::Object)
          ok = a(i, j) == 1.0;
    }
    if (!ok) ++bad;
  }
  return {bad == 0, std::to_string(1000 - bad) + "/1000 graphs symmetric, zero diagonal, history row all ones, "
                                                 "object block complete, knowledge directions zero"};
}

// 5. Demonstrator against Dijkstra from the goal, greedy on distance, smallest id on ties.
Outcome demonstrator() {
  auto pools = nav::load_room_pools(kData / "room_pools.json");
  auto templates = nav::load_templates(kData / "instructions.json");
  auto vocab = nav::Vocabulary::build(pools, templates);
  std::size_t checked = 0, mismatched = 0;
  std::vector<nav::Trajectory> trajs;
  std::vector<nav::Episode> eps;
  for (int e = 0; e < 50; ++e) {
    auto env = nav::generate_environment(5000 + e, {}, pools);
    const int n = static_cast<int>(env.size());
    std::vector<std::vector<int>> adj(n);
    for (auto [a, b] : env.edges) {
      adj[a].push_back(b);
      adj[b].push_back(a);
    }
    for (auto& row : adj) std::sort(row.begin(), row.end());
    for (int goal = 0; goal < n; ++goal) {
      const double inf = std::numeric_limits<double>::infinity();
      std::vector<double> dist(n, inf);
      using Item = std::pair<double, int>;
      std::priority_queue<Item, std::vector<Item>, std::greater<>> queue;
      dist[goal] = 0.0;
      queue.push({0.0, goal});
      while (!queue.empty()) {
        auto [d, u] = queue.top();
        queue.pop();
        if (d > dist[u]) continue;
        for (int v : adj[u])
          if (d + 1.0 < dist[v]) queue.push({dist[v] = d + 1.0, v});
      }
      for (int node = 0; node < n; ++node) {
        int want = nav::kStop;
        if (node != goal) {
          want = adj[node].front();
          for (int v : adj[node])
            if (dist[v] < dist[want]) want = v;
        }
        ++checked;
        if (nav::demonstrator_action(env, node, goal) != want) ++mismatched;
      }
    }
    for (int i = 0; i < 10; ++i) {
      try {
        auto ep = nav::generate_episode(env, e * 100 + i, templates, vocab);
        nav::DemonstratorPolicy demo;
        trajs.push_back(nav::rollout(env, ep, demo, nav::RolloutMode::Argmax));
        eps.push_back(ep);
      } catch (const Error& err) {
        if (err.code() != ErrorCode::NoValidGoal) throw;
      }
    }
  }
  const double sr = nav::compute_metrics(trajs, eps).sr;
  return {mismatched == 0 && sr == 1.0 && !eps.empty(),
          std::to_string(checked - mismatched) + "/" + std::to_string(checked) +
              " (node, goal) pairs match the Dijkstra policy; demonstrator SR " + fmt(sr) + " over " +
              std::to_string(eps.size()) + " episodes"};
}

// 6. Metrics on hand-worked cases, then ordering invariants on random rollouts.
nav::Trajectory traj(std::vector<int> dist, std::optional<std::string> object) {
  nav::Trajectory t;
  for (std::size_t i = 0; i < dist.size(); ++i) t.nodes.push_back(static_cast<int>(i));
  t.goal_distance = std::move(dist);
  t.predicted_object = std::move(object);
  t.stopped = true;
  return t;
}

nav::Episode episode(int shortest, std::string target) {
  nav::Episode e;
  e.shortest = shortest;
  e.target = std::move(target);
  return e;
}

Outcome metrics() {
  struct Case {
    nav::Trajectory t;
    nav::Episode e;
    double tl, osr, sr, spl, rgs, rgspl;
  };
  // Shortest-path success, detour success with the wrong object, overshoot, and a run that never arrives.
  const std::vector<Case> cases{
      {traj({2, 1, 0}, "bed"), episode(2, "bed"), 2, 1, 1, 1, 1, 1},
      {traj({2, 1, 2, 1, 0}, "lamp"), episode(2, "bed"), 4, 1, 1, 0.5, 0, 0},
      {traj({1, 0, 1}, "bed"), episode(1, "bed"), 2, 1, 0, 0, 0, 0},
      {traj({3, 2}, std::nullopt), episode(3, "bed"), 1, 0, 0, 0, 0, 0},
  };
  int exact = 0;
  for (const auto& c : cases) {
    auto m = nav::compute_metrics({c.t}, {c.e});
    exact += m.tl == c.tl && m.osr == c.osr && m.sr == c.sr && m.spl == c.spl && m.rgs == c.rgs && m.rgspl == c.rgspl;
  }
  auto pools = nav::load_room_pools(kData / "room_pools.json");
  auto templates = nav::load_templates(kData / "instructions.json");
  auto vocab = nav::Vocabulary::build(pools, templates);
  Rng rng(606);
  int violations = 0, sets = 0;
  for (int trial = 0; trial < 40; ++trial) {
    auto env = nav::generate_environment(6000 + trial, {}, pools);
    std::vector<nav::Trajectory> trajs;
    std::vector<nav::Episode> eps;
    for (int i = 0; i < 25; ++i) {
      auto ep = nav::generate_episode(env, trial * 100 + i, templates, vocab);
      ep.max_steps = static_cast<int>(rng.index(10));
      nav::RandomPolicy p(rng.next());
      Rng sample(rng.next());
      trajs.push_back(nav::rollout(env, ep, p, nav::RolloutMode::Sample, &sample));
      eps.push_back(ep);
    }
    for (int radius : {0, 1}) {
      auto m = nav::compute_metrics(trajs, eps, radius);
      ++sets;
      if (!(0.0 <= m.spl && m.spl <= m.sr + 1e-12 && m.sr <= m.osr && m.osr <= 1.0)) ++violations;
    }
  }
  return {exact == 4 && violations == 0, std::to_string(exact) + "/4 handcrafted cases exact; " +
                                             std::to_string(sets - violations) + "/" + std::to_string(sets) +
                                             " fuzzed sets satisfy 0 <= SPL <= SR <= OSR <= 1"};
}

// 7. Default configuration, seed 7: trained SR against random and the loss drop.
Outcome learning_signal() {
  RunConfig c;
  c.paths.out_dir = scratch("learning");
  validate(c);
  auto r = load_resources(c);
  std::ostringstream progress;
  auto result = train(c, r, &progress);
  std::vector<double> totals;
  std::ifstream log(result.loss_log);
  for (std::string line; std::getline(log, line);) totals.push_back(nlohmann::json::parse(line).at("total"));
  if (static_cast<int>(totals.size()) < kFinalWindow + kEarlyTo) return {false, "loss log too short"};
  auto mean = [&](std::size_t from, std::size_t to) {
    double s = 0.0;
    for (std::size_t i = from; i < to; ++i) s += totals[i];
    return s / static_cast<double>(to - from);
  };
  const double early = mean(kEarlyFrom - 1, kEarlyTo);
  const double late = mean(totals.size() - kFinalWindow, totals.size());
  auto model = load_model(read_checkpoint(result.checkpoint), r);
  auto split = make_val_split(c, r);
  const double sr = evaluate_model(*model, c, r, split).sr;
  const double random_sr = evaluate_random(c, split, c.seed).metrics.sr;
  const bool pass = sr >= random_sr + kSrMargin && late < kLossRatio * early;
  return {pass, "val SR " + fmt(sr) + " vs random " + fmt(random_sr) + " (need +" + fmt(kSrMargin) +
                    "); loss " + fmt(late) + " (last " + std::to_string(kFinalWindow) + ") vs " + fmt(early) +
                    " (iterations 6-15), ratio " + fmt(late / early) + " < " + fmt(kLossRatio)};
}

// 8. Three-seed ablation ordering, reported through the ablate command.
Outcome ablation() {
  cli::Options o;
  o.out_dir = scratch("ablation");
  o.variants = {"full", "topk=0", "no-kgs-bias"};
  std::ostringstream out, err;
  const int code = cli::cmd_ablate(o, out, err);
  if (code != cli::kOk) return {false, "ablate exited " + std::to_string(code) + ": " + err.str()};
  auto j = nlohmann::json::parse(read_file(*o.out_dir / "ablation_checks.json"));
  std::string detail;
  for (const auto& check : j.at("checks")) {
    if (check.at("status") == "skipped") continue;
    detail += (detail.empty() ? "" : "; ") + check.at("check").get<std::string>() + " " +
              fmt(check.at("lhs_sr").get<double>()) + " vs " + fmt(check.at("rhs_sr").get<double>()) + " " +
              check.at("status").get<std::string>();
  }
  const bool flagged = j.at("flagged").get<bool>();
  return {!flagged, "mean SR over seeds 7-9: " + detail + (flagged ? " [flagged]" : "")};
}

// 9. Same seed twice: byte-identical checkpoints and evaluation tables.
Outcome determinism() {
  const auto root = scratch("determinism");
  RunConfig c;
  c.training.iterations = 150;
  c.training.warmup = 20;
  save_run_config(c, root / "config.json");
  std::string ckpt[2], csv[2];
  for (int i = 0; i < 2; ++i) {
    cli::Options o;
    o.config = root / "config.json";
    o.out_dir = root / ("run" + std::to_string(i));
    std::ostringstream out, err;
    if (cli::cmd_train(o, out, err) != cli::kOk) return {false, "train failed: " + err.str()};
    if (cli::cmd_eval(o, out, err) != cli::kOk) return {false, "eval failed: " + err.str()};
    ckpt[i] = read_file(*o.out_dir / "checkpoint.json");
    csv[i] = read_file(*o.out_dir / "eval.csv");
  }
  const bool same_ckpt = !ckpt[0].empty() && ckpt[0] == ckpt[1];
  const bool same_csv = !csv[0].empty() && csv[0] == csv[1];
  return {same_ckpt && same_csv, std::string("checkpoints ") + (same_ckpt ? "identical" : "differ") + " (" +
                                     std::to_string(ckpt[0].size()) + " bytes), eval CSVs " +
                                     (same_csv ? "identical" : "differ")};
}

}  // namespace

int main() {
  run("reduction_identity", kReductionSeconds, reduction_identity);
  run("gradients", kGradSeconds, gradients);
  run("ranking_oracle", kRankingSeconds, ranking_oracle);
  run("graph_invariants", kGraphSeconds, graph_invariants);
  run("demonstrator", kDemoSeconds, demonstrator);
  run("metrics", kMetricsSeconds, metrics);
  run("learning_signal", kLearningSeconds, learning_signal);
  run("ablation", kAblationSeconds, ablation);
  run("determinism", kDeterminismSeconds, determinism);
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
  return failures == 0 ? 0 : 1;
}
