#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "modmine/commands.hpp"

int main(int argc, char** argv) {
  using namespace modmine::cli;

  CLI::App app{"modmine: moderate-positive-mining metric learning experiments"};
  app.require_subcommand(1);
  Options options;
  std::string config, checkpoint, out;
  std::uint64_t seed = 0;

  auto add_common = [&](CLI::App* cmd, bool needs_config, bool needs_checkpoint) {
    auto* c = cmd->add_option("--config", config, "experiment config file");
    if (needs_config) c->required();
    auto* k = cmd->add_option("--checkpoint", checkpoint, "checkpoint file");
    if (needs_checkpoint) k->required();
    cmd->add_option("--out", out, "output directory");
    cmd->add_option("--seed", seed, "override the config's master seed");
  };

  auto* train = app.add_subcommand("train", "train a model and write checkpoint, loss history and manifest");
  add_common(train, true, false);
  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint on the test split (CMC)");
  add_common(eval, true, true);
  auto* spectrum = app.add_subcommand("spectrum", "eigenvalues of the learned metric matrix");
  add_common(spectrum, false, true);
  auto* ablation = app.add_subcommand("ablation", "compare mining arms and lambda values");
  add_common(ablation, true, false);
  auto* mine = app.add_subcommand("mine-debug", "write a per-batch mining trace");
  add_common(mine, true, false);
  mine->add_option("--batches", options.trace_batches, "number of batches to trace");
  auto* gen = app.add_subcommand("gen-data", "write the configured synthetic dataset");
  add_common(gen, true, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsageError;
  }

  if (!config.empty()) options.config = config;
  if (!checkpoint.empty()) options.checkpoint = checkpoint;
  if (!out.empty()) options.out = out;
  for (auto* cmd : {train, eval, spectrum, ablation, mine, gen})
    if (cmd->parsed() && cmd->count("--seed") > 0) options.seed = seed;

  if (train->parsed()) return cmd_train(options, std::cout, std::cerr);
  if (eval->parsed()) return cmd_eval(options, std::cout, std::cerr);
  if (spectrum->parsed()) return cmd_spectrum(options, std::cout, std::cerr);
  if (ablation->parsed()) return cmd_ablation(options, std::cout, std::cerr);
  if (mine->parsed()) return cmd_mine_debug(options, std::cout, std::cerr);
  return cmd_gen_data(options, std::cout, std::cerr);
}
