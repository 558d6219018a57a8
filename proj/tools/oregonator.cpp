#include <iostream>
#include <map>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "oregonator/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Spectral-Galerkin simulator and certificate engine for the diffusive Oregonator"};
  app.set_version_flag("--version", std::string(OREGONATOR_VERSION));

  std::string command, config, out;
  std::optional<std::uint64_t> seed;
  std::optional<double> dt, horizon;
  std::optional<int> modes, m_max;
  std::string corrected_gamma;
  int jobs = 1;

  app.add_option("command", command, "constants | simulate | verify | dimension | sweep")
      ->required()
      ->check(CLI::IsMember({"constants", "simulate", "verify", "dimension", "sweep"}));
  app.add_option("--config", config, "configuration file")->required()->check(CLI::ExistingFile);
  app.add_option("--out", out, "run directory (default ./oregonator-<command>)");
  app.add_option("--seed", seed, "seed for random initial data");
  app.add_option("--jobs", jobs, "concurrent sweep points")->check(CLI::PositiveNumber);
  app.add_option("--dt", dt, "time step")->check(CLI::PositiveNumber);
  app.add_option("--horizon", horizon, "simulation horizon (Lyapunov horizon for dimension)")
      ->check(CLI::NonNegativeNumber);
  app.add_option("--modes", modes, "sine modes per axis")->check(CLI::PositiveNumber);
  app.add_option("--m-max", m_max, "largest frame dimension for dimension")
      ->check(CLI::PositiveNumber);
  app.add_option("--corrected-gamma", corrected_gamma, "use 1/gamma in N(R): on | off")
      ->check(CLI::IsMember({"on", "off"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : oregonator::kConfigError;
  }

  oregonator::Overrides o;
  o.seed = seed;
  o.dt = dt;
  o.horizon = horizon;
  o.modes = modes;
  o.m_max = m_max;
  if (!corrected_gamma.empty()) o.corrected_gamma = corrected_gamma == "on";

  std::optional<std::filesystem::path> dir;
  if (!out.empty()) dir = out;
  return oregonator::run_command(command, config, o, dir, jobs, std::cout, std::cerr);
}
