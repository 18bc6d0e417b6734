#include <cstdlib>
#include <exception>
#include <functional>
#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "mzbw/commands.hpp"

namespace {

using Command = std::function<int(const mzbw::RunConfig&, const mzbw::CommandOptions&)>;

int run(const Command& command, const std::string& config_path, mzbw::CommandOptions options) {
  try {
    if (const char* env = std::getenv("MZBW_OUT"); env != nullptr && *env != '\0') options.out = env;
    if (options.out.empty()) throw mzbw::InvalidInput("no output directory: pass --out or set MZBW_OUT");
    const mzbw::RunConfig config = mzbw::load_config(config_path);
    return command(config, options);
  } catch (const mzbw::NumericalError& e) {
    std::cerr << "mzbw: numerical failure: " << e.what() << '\n';
    return mzbw::kExitNumerical;
  } catch (const mzbw::InvalidInput& e) {
    std::cerr << "mzbw: " << e.what() << '\n';
    return mzbw::kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "mzbw: " << e.what() << '\n';
    return mzbw::kExitUsage;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Madelung and spin hydrodynamics toolkit"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::string out_dir;
  std::string backend_name;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
  app.add_option("--config", config_path, "Run configuration (JSON)")->required()->check(CLI::ExistingFile);
  app.add_option("--out", out_dir, "Output directory (MZBW_OUT overrides)");
  auto* backend_opt =
      app.add_option("--backend", backend_name, "Derivative backend")->check(CLI::IsMember({"spectral", "fd2"}));
  auto* seed_opt = app.add_option("--seed", seed, "Trajectory seed (overrides the config)");
  app.add_option("--threads", threads, "Worker threads (speed only)")->check(CLI::Range(std::size_t{1}, std::size_t{256}));

  const std::map<std::string, std::pair<std::string, Command>> commands = {
      {"decompose", {"Density, phase, momentum and quantum potential fields", mzbw::cmd_decompose}},
      {"spin", {"Spin density, Pauli current and velocity split", mzbw::cmd_spin}},
      {"evolve", {"Split-step evolution with snapshots", mzbw::cmd_evolve}},
      {"trajectories", {"Bohmian drift and total-mode trajectories", mzbw::cmd_trajectories}},
      {"verify", {"Identity battery with a tolerance report", mzbw::cmd_verify}},
  };
  for (const auto& [name, entry] : commands) app.add_subcommand(name, entry.first);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return mzbw::kExitUsage;
  }

  mzbw::CommandOptions options;
  options.out = out_dir;
  if (*backend_opt) options.backend = mzbw::parse_backend(backend_name);
  if (*seed_opt) options.seed = seed;
  options.threads = threads;
  const std::string name = app.get_subcommands().front()->get_name();
  return run(commands.at(name).second, config_path, options);
}
