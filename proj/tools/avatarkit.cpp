// Experiment driver: one experiment per invocation, all randomness funneled
// through --seed, artifacts plus a reproducibility manifest under --out.

#include <cstdio>
#include <exception>
#include <string>

#include <CLI11.hpp>

#include "avatar/harness/experiment.hpp"

int main(int argc, char** argv) {
  CLI::App app{"avatarkit: toy dual-system avatar experiments"};
  app.require_subcommand(1);

  avatar::harness::ExperimentOptions opts;
  std::string config_path;
  std::string reflect = "off";

  for (const auto& name : avatar::harness::experiment_names()) {
    CLI::App* sub = app.add_subcommand(name, "run the '" + name + "' experiment");
    sub->add_option("--config", config_path, "experiment config file (JSON)");
    sub->add_option("--seed", opts.seed, "master seed")->capture_default_str();
    sub->add_option("--backend", opts.backend, "agent backend")
        ->check(CLI::IsMember({"mock", "http"}))
        ->capture_default_str();
    sub->add_option("--out", opts.out_dir, "output directory")->capture_default_str();
    sub->add_option("--reflect", reflect, "reflective re-planning between segments")
        ->check(CLI::IsMember({"on", "off"}))
        ->capture_default_str();
    sub->callback([&opts, name]() { opts.name = name; });
  }

  CLI11_PARSE(app, argc, argv);

  if (!config_path.empty()) opts.config_path = config_path;
  opts.reflect = reflect == "on";

  try {
    avatar::harness::run_experiment(opts);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  std::printf("wrote %s\n", opts.out_dir.string().c_str());
  return 0;
}
