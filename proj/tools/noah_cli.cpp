// noah: command-line front end. Every command writes into --out and exits
// nonzero with a one-line JSON error on failure.

#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "noah/commands.hpp"

namespace {

void print_error(const std::string& code, const std::string& message) {
  nlohmann::ordered_json j;
  j["error"] = code;
  j["message"] = message;
  std::cerr << j.dump() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Marketing decision toolkit: LP solving, rounding, selection, bandits, control, audience expansion"};
  app.require_subcommand(1);

  std::string config_path, out_dir = "out", seed_text, experiment;
  unsigned workers = 1;
  app.add_option("--config", config_path, "key = value settings file")->check(CLI::ExistingFile);
  app.add_option("--seed", seed_text, "random seed (overrides the config)");
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--workers", workers, "worker threads")->check(CLI::Range(1u, 1024u));
  app.fallthrough();

  for (const auto& name : noah::command_names()) {
    auto* sub = app.add_subcommand(name);
    if (name == "experiment") {
      std::string help = "one of:";
      for (const auto& e : noah::experiment_names()) help += " " + e;
      sub->add_option("name", experiment, help)->required()->check(CLI::IsMember(noah::experiment_names()));
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    print_error("usage_error", e.what());
    return 2;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    noah::CommandContext ctx;
    if (!config_path.empty()) ctx.config = noah::RunConfig::load(config_path);
    if (!seed_text.empty()) ctx.config.set("seed", seed_text);
    ctx.out_dir = out_dir;
    ctx.workers = workers;
    noah::run_command(command, experiment, ctx);
  } catch (const noah::Error& e) {
    print_error(e.code(), e.what());
    return 1;
  } catch (const std::exception& e) {
    print_error("internal_error", e.what());
    return 3;
  }
  return 0;
}
