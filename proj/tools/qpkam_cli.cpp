#include <CLI11.hpp>

#include <fstream>
#include <iostream>

#include "qpkam/run.hpp"

using namespace qpkam;

int main(int argc, char** argv) {
  CLI::App app{"Quasi-periodic cocycle reducibility and IDS diagnostics"};
  std::string config_path, mode, out, command;
  int stages = 0, jobs = -1;
  long long seed = -1;
  app.add_option("--config", config_path, "JSON run configuration")->check(CLI::ExistingFile);
  app.add_option("--mode", mode, "KAM schedule")->check(CLI::IsMember({"paper", "practical"}));
  app.add_option("--stages", stages, "KAM stages")->check(CLI::PositiveNumber);
  app.add_option("--out", out, "output directory");
  app.add_option("--seed", seed, "rng seed")->check(CLI::NonNegativeNumber);
  app.add_option("--jobs", jobs, "OpenMP threads, 0 for the default")->check(CLI::NonNegativeNumber);
  app.add_option("command", command,
                 "reduce | ids | lyapunov | thouless | transversality | resonances | full-pipeline; overrides the "
                 "config");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  json j = json::object();
  if (!config_path.empty()) {
    std::ifstream f(config_path);
    try {
      j = json::parse(f);
    } catch (const json::exception& e) {
      std::cerr << "schema: config is not valid JSON: " << e.what() << "\n";
      return 2;
    }
  }
  if (!command.empty()) j["command"] = command;
  if (!mode.empty()) j["schedule"]["mode"] = mode;
  if (stages > 0) j["schedule"]["stages"] = stages;
  if (!out.empty()) j["out"] = out;
  if (seed >= 0) j["seed"] = seed;
  if (jobs >= 0) j["jobs"] = jobs;

  RunConfig cfg;
  try {
    cfg = parse_config(j);
  } catch (const Error& e) {
    std::cerr << e.what() << "\n";
    return 2;
  }
  const RunResult r = run(cfg);
  for (const auto& a : r.assertions)
    std::cout << (a.pass ? "PASS " : "FAIL ") << a.name << "  value=" << a.value << " bound=" << a.bound << "\n";
  if (r.manifest.contains("error")) std::cerr << r.manifest["error"]["message"].get<std::string>() << "\n";
  std::cout << "status " << r.manifest["status"].get<std::string>() << ", manifest in " << cfg.out << "\n";
  return r.exit_code;
}
