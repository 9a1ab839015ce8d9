// SPDX-License-Identifier: Apache-2.0
//
// objnerf <gen-data|train|render|eval> [--config FILE] [--set key=value ...]
//
// Single-image object radiance fields: synthesize training data, train the
// encoder/field/discriminator stack, render novel views from a checkpoint
// and evaluate pose-aligned novel-view quality.

#include <CLI11.hpp>
#include <iostream>

#include "objnerf/pipeline.hpp"

namespace {

struct CommandArgs {
  std::string config_path;
  std::vector<std::string> overrides;
  bool dry_run = false;
};

objnerf::ConfigMap build_config(const CommandArgs& args) {
  objnerf::ConfigMap cfg;
  if (!args.config_path.empty()) {
    cfg = objnerf::ConfigMap::from_file(args.config_path);
  }
  for (const auto& kv : args.overrides) {
    cfg.apply_override(kv);
  }
  return cfg;
}

void add_common_options(CLI::App* cmd, CommandArgs& args) {
  cmd->add_option("-c,--config", args.config_path, "Flat dotted-key config file");
  cmd->add_option("--set", args.overrides, "Override a config key (key=value), repeatable");
  cmd->add_flag("--dry-run", args.dry_run,
                "Validate the config and print the resolved parameter tree");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"single-image object radiance fields"};
  app.require_subcommand(1);

  CommandArgs gen_args, train_args, render_args, eval_args;
  auto* gen = app.add_subcommand("gen-data", "Generate a synthetic primitive dataset");
  add_common_options(gen, gen_args);
  auto* train = app.add_subcommand("train", "Train on a dataset manifest");
  add_common_options(train, train_args);
  auto* render = app.add_subcommand("render", "Render reconstruction, novel views and depth");
  add_common_options(render, render_args);
  auto* eval = app.add_subcommand("eval", "Evaluate pose-aligned novel-view quality");
  add_common_options(eval, eval_args);

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) {
      auto cfg = build_config(gen_args);
      objnerf::command_gen_data(cfg, gen_args.dry_run);
    } else if (train->parsed()) {
      auto cfg = build_config(train_args);
      objnerf::command_train(cfg, train_args.dry_run);
    } else if (render->parsed()) {
      auto cfg = build_config(render_args);
      objnerf::command_render(cfg, render_args.dry_run);
    } else if (eval->parsed()) {
      auto cfg = build_config(eval_args);
      objnerf::command_eval(cfg, eval_args.dry_run);
    }
  } catch (const objnerf::ConfigError& e) {
    std::cerr << "error: config: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: runtime: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
