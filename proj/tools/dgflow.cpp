#include "dgflow/simulation.hpp"

#include <CLI11.hpp>

#include <malloc.h>

#include <iostream>

int main(int argc, char** argv) {
  // sparse factorizations allocate and free large blocks every step; keep them on the heap
  mallopt(M_MMAP_THRESHOLD, 1 << 30);
  mallopt(M_TRIM_THRESHOLD, 1 << 30);
  CLI::App app{"hp-adaptive DG solver for immiscible two-phase flow"};
  std::string config_path;
  std::vector<std::string> overrides;
  std::string output;
  int threads = 1;
  bool quiet = false;
  app.add_option("-c,--config", config_path, "INI configuration file")->check(CLI::ExistingFile);
  app.add_option("-o,--override", overrides, "KEY=VALUE override, e.g. scheme.kind=impes")->take_all();
  app.add_option("--output", output, "output directory (overrides output.directory)");
  app.add_option("-j,--threads", threads, "assembly threads")->check(CLI::PositiveNumber);
  app.add_flag("-q,--quiet", quiet, "suppress per-step log");
  CLI11_PARSE(app, argc, argv);

  try {
    dgflow::Settings settings;
    if (!config_path.empty()) settings = dgflow::read_settings_file(config_path);
    for (const auto& item : overrides) dgflow::apply_override(settings, item);
    if (!output.empty()) settings["output.directory"] = output;
    dgflow::RunConfig config = dgflow::RunConfig::from_settings(settings);
    config.forms.threads = threads;
    config.quiet = config.quiet || quiet;
    if (config.output.directory.empty()) config.output.directory = "output";
    const dgflow::RunResult result = dgflow::run(config, &std::cout);
    if (!result.ok) {
      std::cerr << "run failed at " << result.reason << '\n';
      return 2;
    }
    std::cout << "finished t=" << result.final_time << " steps=" << result.records.size()
              << " wall=" << result.wall_seconds << "s\n";
    return 0;
  } catch (const dgflow::ConfigurationError& err) {
    std::cerr << "configuration error: " << err.what() << '\n';
    return 1;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << '\n';
    return 1;
  }
}
