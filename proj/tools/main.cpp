#include <iostream>
#include <string>

#include "epiflow/config.hpp"
#include "epiflow/errors.hpp"
#include "epiflow/runner.hpp"

#include "CLI11.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitConfig = 2;

int do_validate(const std::string& config_path) {
  try {
    const epiflow::RunConfig cfg = epiflow::parse_config_file(config_path);
    std::cout << epiflow::resolved_config_json(cfg);
    return kExitOk;
  } catch (const epiflow::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  }
}

int do_run(const std::string& config_path, const std::string& output_dir, int threads) {
  epiflow::RunConfig cfg;
  try {
    cfg = epiflow::parse_config_file(config_path);
    if (!output_dir.empty()) cfg.output.dir = output_dir;
    if (threads > 0) cfg.plan.threads = threads;
  } catch (const epiflow::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  }
  try {
    cfg.plan.log_progress = true;
    epiflow::run_experiment(cfg);
    return kExitOk;
  } catch (const std::exception& e) {
    std::cerr << "run failed: " << e.what() << "\n";
    return kExitRuntime;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Epidemic reaction-diffusion control by flow redirection"};
  app.require_subcommand(1);

  std::string config_path;
  std::string output_dir;
  int threads = 0;

  CLI::App* run = app.add_subcommand("run", "Run the experiment described by a config file");
  run->add_option("config", config_path, "JSON config file")->required();
  run->add_option("--output-dir", output_dir, "Override output.dir from the config");
  run->add_option("--threads", threads, "Override the parallelism degree");

  CLI::App* validate =
      app.add_subcommand("validate", "Check a config file and print the resolved defaults");
  validate->add_option("config", config_path, "JSON config file")->required();

  CLI11_PARSE(app, argc, argv);

  if (app.got_subcommand(run)) return do_run(config_path, output_dir, threads);
  return do_validate(config_path);
}
