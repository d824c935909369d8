#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <json.hpp>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ack/concept_graph.hpp"
#include "ack/random.hpp"

namespace ack::nav {

inline constexpr int kSchemaVersion = 1;

struct RoomPool {
  std::string label;
  std::vector<std::string> objects;
};

struct RoomPools {
  std::string hub;  // the connecting room every other room opens onto
  std::vector<RoomPool> rooms;

  const RoomPool& room(const std::string& label) const;
};

// Throws FileMissing or ParseError.
RoomPools load_room_pools(const std::filesystem::path& path);
std::vector<std::string> load_templates(const std::filesystem::path& path);

// Whitespace tokenizer over a fixed word list. Ids 0-3 are [PAD], [UNK],
// [CLS], [SEP]; the rest are sorted words.
class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;
  static constexpr int kCls = 2;
  static constexpr int kSep = 3;

  Vocabulary() = default;
  explicit Vocabulary(const std::vector<std::string>& words);
  // Words of every template (placeholders removed), room label and object label.
  static Vocabulary build(const RoomPools& pools, const std::vector<std::string>& templates);

  int id(const std::string& word) const;
  const std::vector<std::string>& words() const { return words_; }
  std::size_t size() const { return words_.size(); }
  // [CLS] w1 ... wn [SEP], lowercased; unknown words map to [UNK].
  std::vector<int> encode(const std::string& text) const;

 private:
  std::vector<std::string> words_;
  std::map<std::string, int> ids_;
};

struct EnvParams {
  int n_nodes = 16;
  int n_rooms = 5;
  double object_density = 3.0;  // mean objects per viewpoint
  int far_objects = 3;          // objects glimpsed beyond a candidate direction
  double extra_door_prob = 0.3;
  bool operator==(const EnvParams&) const = default;
};

struct CandidateDirection {
  int to = -1;
  std::string view_id;  // "v<from>_<to>"
  graph::ViewPose pose;
  std::vector<graph::ObjectObservation> objects;
  bool operator==(const CandidateDirection& o) const;
};

struct Viewpoint {
  int id = 0;
  std::string room;
  double x = 0.0;
  double y = 0.0;
  std::vector<graph::ObjectObservation> objects;
  std::vector<CandidateDirection> candidates;  // ordered by target id
};

struct NavEnvironment {
  std::uint64_t seed = 0;
  EnvParams params;
  std::vector<Viewpoint> nodes;
  std::vector<std::pair<int, int>> edges;  // a < b, sorted
  std::vector<std::vector<int>> distances;  // hop counts; -1 when unreachable

  std::size_t size() const { return nodes.size(); }
  int distance(int a, int b) const;
  // The view of a viewpoint's own surroundings ("v<n>_<n>").
  CandidateDirection here_view(int node) const;
  int diameter() const;
};

// Throws InvalidParams.
NavEnvironment generate_environment(std::uint64_t seed, const EnvParams& params, const RoomPools& pools);

// Recomputes hop distances from the edge list.
void rebuild_distances(NavEnvironment& env);

struct Episode {
  int id = 0;
  std::string instruction;
  std::vector<int> tokens;
  int start = 0;
  int goal = 0;
  std::string target;  // object label present only at the goal
  std::string room;
  int shortest = 0;    // hop distance start -> goal
  int max_steps = 15;
  bool operator==(const Episode&) const = default;
};

struct EpisodeOptions {
  int max_steps = 15;
  int max_start_distance = 6;
};

// Throws NoValidGoal.
Episode generate_episode(const NavEnvironment& env, std::uint64_t seed, const std::vector<std::string>& templates,
                         const Vocabulary& vocab, const EpisodeOptions& options = {});

inline constexpr int kStop = -1;

// Neighbor with the smallest hop distance to `goal` (smallest id on ties),
// or kStop at the goal. Throws UnreachableGoal, InvalidParams.
int demonstrator_action(const NavEnvironment& env, int current, int goal);

// Action distribution over the current candidates in order, STOP last.
struct Decision {
  Eigen::VectorXd probs;
  std::vector<double> object_scores;  // over the current viewpoint's objects
};

class Policy {
 public:
  virtual ~Policy() = default;
  virtual void begin(const NavEnvironment& /*env*/, const Episode& /*episode*/) {}
  virtual Decision decide(const NavEnvironment& env, const Episode& episode, int node, int step) = 0;
};

enum class RolloutMode { Teacher, Argmax, Sample };

struct Trajectory {
  std::vector<int> nodes;
  std::vector<int> goal_distance;  // per visited node
  std::vector<int> actions;        // index taken at each decision, STOP = candidate count
  std::vector<int> demonstrator;   // demonstrator index at each decision
  std::optional<std::string> predicted_object;
  bool stopped = false;

  int length() const { return nodes.empty() ? 0 : static_cast<int>(nodes.size()) - 1; }
};

// Runs until STOP or `episode.max_steps` moves. Teacher mode follows the
// demonstrator, argmax the most likely action, sample draws from `rng`
// (required then). The object with the highest score at the final viewpoint
// is the prediction; a run cut off by the step limit asks the policy once
// more at its final viewpoint for that.
Trajectory rollout(const NavEnvironment& env, const Episode& episode, Policy& policy, RolloutMode mode,
                   Rng* rng = nullptr);

class RandomPolicy final : public Policy {
 public:
  explicit RandomPolicy(std::uint64_t seed) : rng_(seed) {}
  Decision decide(const NavEnvironment& env, const Episode& episode, int node, int step) override;

 private:
  Rng rng_;
};

class DemonstratorPolicy final : public Policy {
 public:
  Decision decide(const NavEnvironment& env, const Episode& episode, int node, int step) override;
};

struct MetricsReport {
  std::size_t episodes = 0;
  double tl = 0.0;
  double osr = 0.0;
  double sr = 0.0;
  double spl = 0.0;
  double rgs = 0.0;
  double rgspl = 0.0;
};

// Success means ending within `success_radius` hops of the goal. Throws
// CountMismatch.
MetricsReport compute_metrics(const std::vector<Trajectory>& trajectories, const std::vector<Episode>& episodes,
                              int success_radius = 0);

nlohmann::ordered_json to_json(const MetricsReport& report);
std::string csv_header();  // TL,OSR,SR,SPL,RGS,RGSPL
std::string csv_row(const MetricsReport& report);

nlohmann::ordered_json to_json(const NavEnvironment& env);
NavEnvironment environment_from_json(const nlohmann::json& j);
nlohmann::ordered_json to_json(const Episode& episode);
Episode episode_from_json(const nlohmann::json& j);

// A named set of environments with episodes bound to them by index.
struct Split {
  std::string name;
  std::vector<NavEnvironment> environments;
  std::vector<std::pair<int, Episode>> episodes;
};

void save_split(const Split& split, const std::filesystem::path& path);
// Throws FileMissing or ParseError.
Split load_split(const std::filesystem::path& path);

}  // namespace ack::nav
