#include <CLI11.hpp>

#include <iostream>
#include <string>

#include "ack/commands.hpp"

namespace {

void add_common(CLI::App* cmd, ack::cli::Options& o) {
  cmd->add_option("--config", o.config, "run configuration (JSON)");
  cmd->add_option("--seed", o.seed, "training seed");
  cmd->add_option("--out-dir", o.out_dir, "directory for checkpoints, logs and reports");
  cmd->add_option("--snapshot", o.snapshot, "knowledge snapshot (TSV)");
}

}  // namespace

int main(int argc, char** argv) {
  namespace cli = ack::cli;
  CLI::App app{"Knowledge-enhanced navigation agent: build, train, evaluate and inspect"};
  app.require_subcommand(1);
  cli::Options o;

  auto* build_kb = app.add_subcommand("build-kb", "ingest a snapshot and summarize it per relation");
  add_common(build_kb, o);
  build_kb->add_flag("--strict", o.strict, "fail on the first malformed line");

  auto* rank = app.add_subcommand("rank", "rank the facts about a set of object labels");
  add_common(rank, o);
  rank->add_option("--top-k", o.top_k, "facts to keep");
  rank->add_option("--objects", o.objects, "object labels, comma separated")->required();

  auto* gen_env = app.add_subcommand("gen-env", "write the validation split");
  add_common(gen_env, o);
  gen_env->add_option("--split", o.split, "output path (default <out-dir>/val_unseen.json)");

  auto* train = app.add_subcommand("train", "imitation training against the demonstrator");
  add_common(train, o);
  train->add_option("--top-k", o.top_k, "facts kept per view");

  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint with random and demonstrator reference rows");
  add_common(eval, o);
  eval->add_option("--checkpoint", o.checkpoint, "checkpoint (default <out-dir>/checkpoint.json)");
  eval->add_option("--split", o.split, "split file (default: the configured validation split)");

  auto* ablate = app.add_subcommand("ablate", "train and evaluate variants over three seeds");
  add_common(ablate, o);
  ablate->add_option("--top-k", o.top_k, "facts kept per view for the full model");
  ablate->add_option("--variant", o.variants, "full, no-kgs-bias, no-history, no-cd, topk=0, topk=10, topk=20");

  auto* inspect = app.add_subcommand("inspect", "dump per-step concept weights and KGS link matrices");
  add_common(inspect, o);
  inspect->add_option("--checkpoint", o.checkpoint, "checkpoint (default <out-dir>/checkpoint.json)");
  inspect->add_option("--split", o.split, "split file (default: the configured validation split)");
  inspect->add_option("--episode", o.episode, "episode index in the split");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : cli::kUsageError;
  }

  if (build_kb->parsed()) return cli::cmd_build_kb(o, std::cout, std::cerr);
  if (rank->parsed()) return cli::cmd_rank(o, std::cout, std::cerr);
  if (gen_env->parsed()) return cli::cmd_gen_env(o, std::cout, std::cerr);
  if (train->parsed()) return cli::cmd_train(o, std::cout, std::cerr);
  if (eval->parsed()) return cli::cmd_eval(o, std::cout, std::cerr);
  if (ablate->parsed()) return cli::cmd_ablate(o, std::cout, std::cerr);
  return cli::cmd_inspect(o, std::cout, std::cerr);
}
