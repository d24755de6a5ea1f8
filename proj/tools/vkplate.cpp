#include "vkplate/vkplate.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
  CLI::App app{"von Karman plate solver for incompressible materials"};
  app.require_subcommand(1, 1);

  std::string config_path;
  std::string out_dir = "vkplate-out";
  std::optional<std::uint64_t> seed;

  const std::pair<vkplate::Command, const char*> commands[] = {
      {vkplate::Command::solve, "minimize the plate energy directly"},
      {vkplate::Command::airy, "solve the Airy-potential system by damped fixed point"},
      {vkplate::Command::limit_study, "compare compressible solutions with the incompressible limit"},
      {vkplate::Command::verify, "run the constitutive verification suites"},
      {vkplate::Command::q2in, "print the reduced in-plane quadratic form"},
  };
  for (const auto& [command, help] : commands) {
    auto* sub = app.add_subcommand(vkplate::to_string(command), help);
    sub->add_option("--config", config_path, "configuration file")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--seed", seed, "random seed (overrides the config)");
  }
  CLI11_PARSE(app, argc, argv);

  const auto chosen = vkplate::command_from_string(app.get_subcommands().front()->get_name());
  try {
    auto cfg = vkplate::load_config(config_path, chosen);
    if (seed) cfg.seed = *seed;
    return vkplate::run(cfg, out_dir, std::cout);
  } catch (const vkplate::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
