#include <cstdint>
#include <iostream>

#include "CLI11.hpp"
#include "apx/experiment.hpp"

int main(int argc, char** argv) {
  CLI::App app{"apxlab: adaptive approximation experiments"};
  app.set_version_flag("--version", apx::apxlab_version);
  app.require_subcommand(1);

  std::string config, out;
  std::uint64_t seed = 0;
  std::size_t max_cells = 0;
  for (const char* name : {"mesh", "rates", "afem", "check"}) {
    auto* sub = app.add_subcommand(name);
    auto* opt = sub->add_option("--config", config, "line-based key = value file");
    if (std::string_view(name) != "check") opt->required();
    sub->add_option("--out", out, "output directory (overrides the config)");
    sub->add_option("--seed", seed, "random seed (overrides the config)");
    sub->add_option("--max-cells", max_cells, "cell budget (overrides the config)");
  }
  auto* list = app.add_subcommand("list", "print the field and problem catalog");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return static_cast<int>(apx::ExitCode::invalid_config);
  }

  if (list->parsed()) {
    for (const auto& f : apx::catalog_list()) std::cout << "field   " << f.name << " [" << f.domain << "]  " << f.regularity << "\n";
    for (const auto& p : apx::problem_list()) std::cout << "problem " << p.name << " [" << p.domain << "]  " << p.notes << "\n";
    return 0;
  }
  const std::string command = app.get_subcommands().front()->get_name();

  try {
    apx::ExperimentConfig c = config.empty() ? apx::ExperimentConfig{} : apx::load_config(config);
    if (c.given.contains("command") && c.command != command)
      throw apx::ConfigError("config command '" + c.command + "' does not match '" + command + "'", "command", 0);
    c.command = command;
    if (!out.empty()) c.out = out;
    if (app.get_subcommands().front()->count("--seed")) c.seed = seed;
    if (app.get_subcommands().front()->count("--max-cells")) c.max_cells = max_cells;

    auto r = apx::run(c);
    std::cerr << "apxlab " << command << ": wrote";
    for (const auto& a : r.artifacts) std::cerr << ' ' << a;
    std::cerr << " to " << c.out << "\n";
    if (!r.message.empty()) std::cerr << "apxlab: " << r.message << "\n";
    return static_cast<int>(r.code);
  } catch (const apx::ConfigError& e) {
    std::cerr << "apxlab: " << (config.empty() ? "" : config + ": ") << e.what() << "\n";
    return static_cast<int>(apx::ExitCode::invalid_config);
  } catch (const std::exception& e) {
    std::cerr << "apxlab: " << e.what() << "\n";
    return static_cast<int>(apx::ExitCode::numerical);
  }
}
