#include "ack/commands.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include "ack/agent.hpp"
#include "ack/error.hpp"
#include "ack/trainer.hpp"

namespace ack::cli {

namespace {

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::FileMissing:
    case ErrorCode::CheckpointError:
    case ErrorCode::ParseError:
      return kLoadError;
    default:
      return kUsageError;
  }
}

int guarded(std::ostream& err, const std::function<int()>& body) {
  try {
    return body();
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kUsageError;
  }
}

void write_text(const std::filesystem::path& path, const std::string& body) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << body;
  if (!out) throw Error(ErrorCode::InvalidParams, "cannot write " + path.string());
}

std::filesystem::path checkpoint_path(const Options& o) {
  if (o.checkpoint) return *o.checkpoint;
  if (o.out_dir) return *o.out_dir / "checkpoint.json";
  RunConfig defaults;
  apply_env_overrides(defaults);
  return defaults.paths.out_dir / "checkpoint.json";
}

// The run configuration stored in a checkpoint, with path overrides only.
RunConfig checkpoint_config(const Checkpoint& ckpt, const Options& o) {
  RunConfig c = ckpt.config;
  apply_env_overrides(c);
  if (o.snapshot) c.paths.snapshot = *o.snapshot;
  validate(c);
  return c;
}

nav::Split split_for(const Options& o, const RunConfig& c, const Resources& r) {
  if (o.split) return nav::load_split(*o.split);
  return make_val_split(c, r);
}

std::filesystem::path report_dir(const Options& o, const std::filesystem::path& checkpoint) {
  if (o.out_dir) return *o.out_dir;
  return checkpoint.has_parent_path() ? checkpoint.parent_path() : std::filesystem::path(".");
}

// Everything that decides a run's result; two variants with equal keys share one run.
std::string run_key(const RunConfig& c) {
  auto j = to_json(c);
  j.erase("paths");
  return j.dump();
}

std::vector<std::string> split_commas(const std::vector<std::string>& items) {
  std::vector<std::string> out;
  for (const auto& item : items) {
    std::stringstream ss(item);
    for (std::string part; std::getline(ss, part, ',');) {
      if (!part.empty()) out.push_back(part);
    }
  }
  return out;
}

nav::MetricsReport mean_of(const std::vector<nav::MetricsReport>& reports) {
  nav::MetricsReport m;
  for (const auto& r : reports) {
    m.episodes += r.episodes;
    m.tl += r.tl;
    m.osr += r.osr;
    m.sr += r.sr;
    m.spl += r.spl;
    m.rgs += r.rgs;
    m.rgspl += r.rgspl;
  }
  const double n = static_cast<double>(reports.size());
  m.tl /= n;
  m.osr /= n;
  m.sr /= n;
  m.spl /= n;
  m.rgs /= n;
  m.rgspl /= n;
  return m;
}

}  // namespace

const std::vector<std::string>& default_variants() {
  static const std::vector<std::string> v{"full", "no-kgs-bias", "no-history", "no-cd", "topk=0", "topk=10", "topk=20"};
  return v;
}

RunConfig apply_variant(RunConfig c, const std::string& variant) {
  if (variant == "full") return c;
  if (variant == "no-kgs-bias") {
    c.model.kgs_bias = false;
  } else if (variant == "no-history") {
    c.model.use_history = false;
  } else if (variant == "no-cd") {
    c.model.use_cd = false;
  } else if (variant == "topk=0" || variant == "topk=10" || variant == "topk=20") {
    c.top_k = std::stoi(variant.substr(5));
  } else {
    throw Error(ErrorCode::InvalidConfig, "unknown variant '" + variant +
                                              "'; expected full, no-kgs-bias, no-history, no-cd, topk=0, topk=10 or "
                                              "topk=20");
  }
  return c;
}

RunConfig resolve_config(const Options& o) {
  RunConfig c = o.config ? read_run_config(*o.config) : RunConfig();
  apply_env_overrides(c);
  if (o.seed) c.seed = *o.seed;
  if (o.out_dir) c.paths.out_dir = *o.out_dir;
  if (o.snapshot) c.paths.snapshot = *o.snapshot;
  if (o.top_k) c.top_k = *o.top_k;
  validate(c);
  return c;
}

int cmd_build_kb(const Options& o, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    // Only the snapshot and the relation set matter here, so the rest of the
    // configuration is not validated.
    RunConfig c = o.config ? read_run_config(*o.config) : RunConfig();
    apply_env_overrides(c);
    if (o.snapshot) c.paths.snapshot = *o.snapshot;
    kb::IngestReport report;
    kb::IngestOptions options;
    options.strict = o.strict;
    auto store = kb::ingest_snapshot(c.paths.snapshot, c.relations, options, &report);
    const auto counts = store.relation_counts();
    nlohmann::ordered_json relations = nlohmann::ordered_json::object();
    for (const auto& rel : store.relation_set()) {
      auto it = counts.find(rel);
      relations[rel] = it == counts.end() ? 0 : it->second;
    }
    nlohmann::ordered_json j;
    j["snapshot"] = c.paths.snapshot.string();
    j["lines"] = report.lines;
    j["triples"] = store.size();
    j["duplicates"] = report.duplicates;
    j["filtered"] = report.filtered;
    j["skipped"] = report.skipped;
    j["malformed_lines"] = report.malformed_lines;
    j["relations"] = relations;
    out << j.dump(2) << '\n';
    return kOk;
  });
}

int cmd_rank(const Options& o, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const auto labels_in = split_commas(o.objects);
    if (labels_in.empty()) throw Error(ErrorCode::InvalidConfig, "rank: --objects needs at least one label");
    RunConfig c = resolve_config(o);
    auto r = load_resources(c);
    std::set<std::string> labels;
    for (const auto& l : labels_in) labels.insert(kb::normalize_label(l));
    emb::SyntheticImageEmbedder image(r.text, c.data.data_seed, c.data.image_noise);
    image.add_view("query", {labels.begin(), labels.end()});
    auto ranked = emb::rank_knowledge(*r.text, image, "query", labels, r.store.query_by_objects(labels),
                                      static_cast<std::size_t>(c.top_k));
    emb::write_ranked_jsonl(out, "query", ranked);
    return kOk;
  });
}

int cmd_gen_env(const Options& o, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    RunConfig c = resolve_config(o);
    auto r = load_resources(c);
    auto split = make_val_split(c, r);
    const auto path = o.split ? *o.split : c.paths.out_dir / (split.name + ".json");
    nav::save_split(split, path);
    double diameter = 0.0, shortest = 0.0;
    for (const auto& e : split.environments) diameter += e.diameter();
    for (const auto& [e, ep] : split.episodes) shortest += ep.shortest;
    nlohmann::ordered_json j;
    j["split"] = path.string();
    j["name"] = split.name;
    j["environments"] = split.environments.size();
    j["episodes"] = split.episodes.size();
    j["mean_diameter"] = diameter / static_cast<double>(split.environments.size());
    j["mean_shortest"] = shortest / static_cast<double>(split.episodes.size());
    out << j.dump(2) << '\n';
    return kOk;
  });
}

int cmd_train(const Options& o, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    RunConfig c = resolve_config(o);
    auto r = load_resources(c);
    auto result = train(c, r, &err);
    std::vector<double> totals;
    std::ifstream log(result.loss_log);
    for (std::string line; std::getline(log, line);) totals.push_back(nlohmann::json::parse(line).at("total"));
    nlohmann::ordered_json j;
    j["checkpoint"] = result.checkpoint.string();
    j["loss_log"] = result.loss_log.string();
    j["start_iteration"] = result.start_iteration;
    j["iterations"] = result.iterations;
    j["log_lines"] = totals.size();
    if (!totals.empty()) {
      j["first_loss"] = totals.front();
      j["final_loss"] = totals.back();
    }
    out << j.dump(2) << '\n';
    return kOk;
  });
}

int cmd_eval(const Options& o, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const auto ckpt_path = checkpoint_path(o);
    auto ckpt = read_checkpoint(ckpt_path);
    RunConfig c = checkpoint_config(ckpt, o);
    auto r = load_resources(c);
    auto model = load_model(ckpt, r);
    auto split = split_for(o, c, r);
    std::vector<EvalRow> rows{{"agent", evaluate_model(*model, c, r, split)}, evaluate_random(c, split, c.seed),
                              evaluate_demonstrator(c, split)};
    const auto csv = report_dir(o, ckpt_path) / "eval.csv";
    write_text(csv, eval_csv(rows));
    nlohmann::ordered_json j;
    j["checkpoint"] = ckpt_path.string();
    j["iteration"] = ckpt.iteration;
    j["split"] = split.name;
    j["metrics"] = nav::to_json(rows[0].metrics);
    j["reference"] = {{"random", nav::to_json(rows[1].metrics)}, {"demonstrator", nav::to_json(rows[2].metrics)}};
    j["csv"] = csv.string();
    out << j.dump(2) << '\n';
    return kOk;
  });
}

int cmd_ablate(const Options& o, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    auto variants = split_commas(o.variants);
    if (variants.empty()) variants = default_variants();
    RunConfig base = resolve_config(o);
    for (const auto& v : variants) apply_variant(base, v);  // reject unknown names before any training

    auto r = load_resources(base);
    auto split = make_val_split(base, r);
    const auto root = base.paths.out_dir;
    const std::vector<std::uint64_t> seeds{base.seed, base.seed + 1, base.seed + 2};

    std::map<std::string, nav::MetricsReport> by_key;  // run_key + seed -> metrics
    std::map<std::string, std::vector<nav::MetricsReport>> by_variant;
    std::string runs_csv = "variant,seed," + nav::csv_header() + "\n";
    for (const auto seed : seeds) {
      for (const auto& v : variants) {
        RunConfig c = apply_variant(base, v);
        c.seed = seed;
        c.paths.out_dir = root / v / ("seed" + std::to_string(seed));
        const auto key = run_key(c);
        auto it = by_key.find(key);
        if (it == by_key.end()) {
          err << "ablate: " << v << " seed " << seed << '\n';
          train(c, r, nullptr);
          auto model = load_model(read_checkpoint(c.paths.out_dir / "checkpoint.json"), r);
          it = by_key.emplace(key, evaluate_model(*model, c, r, split)).first;
        }
        by_variant[v].push_back(it->second);
        runs_csv += v + "," + std::to_string(seed) + "," + nav::csv_row(it->second) + "\n";
      }
    }

    std::string table = "variant,seeds," + nav::csv_header() + "\n";
    std::map<std::string, double> mean_sr;  // variant run key without seed -> mean SR
    for (const auto& v : variants) {
      const auto m = mean_of(by_variant[v]);
      table += v + "," + std::to_string(seeds.size()) + "," + nav::csv_row(m) + "\n";
      RunConfig c = apply_variant(base, v);
      mean_sr[run_key(c)] = m.sr;
    }

    // Orderings where the left variant is expected to match or beat the right.
    const std::vector<std::pair<std::string, std::string>> expected{{"topk=10", "topk=0"}, {"full", "no-kgs-bias"}};
    nlohmann::ordered_json checks = nlohmann::ordered_json::array();
    bool flagged = false;
    for (const auto& [lhs, rhs] : expected) {
      nlohmann::ordered_json check;
      check["check"] = lhs + " >= " + rhs;
      auto a = mean_sr.find(run_key(apply_variant(base, lhs)));
      auto b = mean_sr.find(run_key(apply_variant(base, rhs)));
      if (a == mean_sr.end() || b == mean_sr.end()) {
        check["status"] = "skipped";
      } else {
        check["lhs_sr"] = a->second;
        check["rhs_sr"] = b->second;
        const bool pass = a->second >= b->second;
        check["status"] = pass ? "pass" : "fail";
        flagged = flagged || !pass;
      }
      checks.push_back(check);
    }

    write_text(root / "ablation.csv", table);
    write_text(root / "ablation_runs.csv", runs_csv);
    nlohmann::ordered_json j;
    j["seeds"] = seeds;
    j["variants"] = variants;
    j["table"] = (root / "ablation.csv").string();
    j["runs"] = (root / "ablation_runs.csv").string();
    j["checks"] = checks;
    j["flagged"] = flagged;
    write_text(root / "ablation_checks.json", j.dump(2) + "\n");
    out << j.dump(2) << '\n';
    if (flagged) err << "ablate: expected ordering did not hold; see ablation_checks.json\n";
    return kOk;
  });
}

int cmd_inspect(const Options& o, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const auto ckpt_path = checkpoint_path(o);
    auto ckpt = read_checkpoint(ckpt_path);
    RunConfig c = checkpoint_config(ckpt, o);
    auto r = load_resources(c);
    auto model = load_model(ckpt, r);
    auto split = split_for(o, c, r);
    if (o.episode < 0 || o.episode >= static_cast<int>(split.episodes.size())) {
      throw Error(ErrorCode::FileMissing, "episode " + std::to_string(o.episode) + " is not in split '" + split.name +
                                              "' (" + std::to_string(split.episodes.size()) + " episodes)");
    }
    const auto& [env_index, ep] = split.episodes[static_cast<std::size_t>(o.episode)];
    const auto& env = split.environments[static_cast<std::size_t>(env_index)];

    nn::NoGradGuard no_grad;
    AckPolicy policy(*model, r, c.top_k, c.data.image_noise, true);
    auto traj = nav::rollout(env, ep, policy, nav::RolloutMode::Argmax);

    std::string jsonl;
    std::string links_csv = "step,view,from,to,weight\n";
    const auto& inspections = policy.inspections();
    for (std::size_t t = 0; t < inspections.size(); ++t) {
      const auto& in = inspections[t];
      const auto& obs = *in.observation;
      std::vector<const model::View*> views;
      for (const auto& v : obs.candidates) views.push_back(&v);
      views.push_back(&obs.here);
      nlohmann::ordered_json record;
      record["step"] = t;
      record["node"] = in.node;
      if (t < traj.actions.size()) record["action"] = traj.actions[t];
      record["views"] = nlohmann::ordered_json::array();
      for (std::size_t g = 0; g < views.size(); ++g) {
        const auto& graph = views[g]->graph;
        std::vector<std::string> labels;
        for (const auto& n : graph.nodes) labels.push_back(n.label);
        const auto nc = static_cast<Eigen::Index>(labels.size());
        // Concept-to-concept block of the head-averaged last KGS layer; the history node is left out.
        const Eigen::MatrixXd links = in.output.encoding.concept_links[g].bottomRightCorner(nc, nc);
        auto entry = model::attention_record(static_cast<int>(t), views[g]->view_id, labels,
                                             in.output.scores.concept_weights[g]);
        nlohmann::ordered_json rows = nlohmann::ordered_json::array();
        for (Eigen::Index i = 0; i < nc; ++i) {
          std::vector<double> row(static_cast<std::size_t>(nc));
          for (Eigen::Index k = 0; k < nc; ++k) {
            row[static_cast<std::size_t>(k)] = links(i, k);
            std::ostringstream line;
            line.precision(17);
            line << t << ',' << views[g]->view_id << ',' << labels[static_cast<std::size_t>(i)] << ','
                 << labels[static_cast<std::size_t>(k)] << ',' << links(i, k) << '\n';
            links_csv += line.str();
          }
          rows.push_back(row);
        }
        entry["objects"] = graph.num_objects();
        entry["links"] = rows;
        record["views"].push_back(entry);
      }
      jsonl += record.dump() + "\n";
    }

    const auto dir = report_dir(o, ckpt_path);
    const auto attention_path = dir / "inspect_attention.jsonl";
    const auto links_path = dir / "inspect_links.csv";
    write_text(attention_path, jsonl);
    write_text(links_path, links_csv);
    nlohmann::ordered_json j;
    j["episode"] = o.episode;
    j["id"] = ep.id;
    j["instruction"] = ep.instruction;
    j["target"] = ep.target;
    j["steps"] = inspections.size();
    j["path"] = traj.nodes;
    j["success"] = !traj.nodes.empty() && traj.nodes.back() == ep.goal;
    j["attention"] = attention_path.string();
    j["links"] = links_path.string();
    out << j.dump(2) << '\n';
    return kOk;
  });
}

}  // namespace ack::cli
