// ghzqkd command-line entry point.
//
// Resolution order for every setting: built-in default, then the seed
// environment variable (seed only), then flags, then --config file keys.

#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "ghzqkd/cli.hpp"

namespace {

using ghzqkd::cli::RunConfig;

void add_session_flags(CLI::App* cmd, RunConfig& c) {
  cmd->add_option("--parties,-n", c.parties, "number of parties (3..10)")->capture_default_str();
  cmd->add_option("--rounds,-r", c.rounds, "protocol rounds")->capture_default_str();
  cmd->add_option("--visibility,-v", c.visibility, "Werner visibility in [0, 1]")->capture_default_str();
  cmd->add_option("--seed,-s", c.seed, "master seed (default from GHZQKD_SEED, else 1)")->capture_default_str();
  cmd->add_option("--abort-sigma", c.abort_sigma, "stderr multiples required above the bound")
      ->capture_default_str();
  cmd->add_option("--convention", c.convention, "measurement angles: auto, three-party or n-party")
      ->capture_default_str();
  cmd->add_flag("--threads", c.threads, "run each party on its own thread");
  cmd->add_option("--transcript", c.transcript, "write the public-view transcript (JSON lines)");
  cmd->add_option("--summary", c.summary, "write the run summary (JSON)");
  cmd->add_option("--format", c.format, "stdout format: table or json")->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"GHZ-state conference key distribution with a Svetlichny eavesdropping test"};
  app.require_subcommand(1);

  RunConfig config;
  std::string config_file;
  try {
    config.seed = ghzqkd::cli::default_seed();
  } catch (const ghzqkd::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return ghzqkd::cli::kExitUsage;
  }
  app.add_option("--config", config_file, "JSON config file; its keys override flags");

  auto* simulate = app.add_subcommand("simulate", "honest session against a Werner source");
  add_session_flags(simulate, config);

  auto* attack = app.add_subcommand("attack", "session against an eavesdropper model");
  add_session_flags(attack, config);
  attack->add_option("--attack,-a", config.attack, "product, outcome-control or cc")->capture_default_str();
  attack->add_option("--restarts", config.restarts, "product-attack optimizer restarts")->capture_default_str();
  attack->add_option("--free-party", config.free_party, "outcome control free party: best or uniform")
      ->capture_default_str();

  auto* keyrate = app.add_subcommand("keyrate", "Devetak-Winter key rate table");
  keyrate->add_option("--grid,-g", config.grid, "start:stop:step or comma list of visibilities");
  keyrate->add_option("--visibility,-v", config.visibility, "single visibility when no grid is given")
      ->capture_default_str();
  keyrate->add_option("--output,-o", config.output, "write the table as CSV");
  keyrate->add_option("--format", config.format, "stdout format: table or json")->capture_default_str();

  auto* verify = app.add_subcommand("verify", "check the classical and quantum bounds by enumeration");
  verify->add_option("--parties,-n", config.parties, "number of parties")->capture_default_str();
  verify->add_option("--convention", config.convention, "auto, three-party or n-party")->capture_default_str();
  verify->add_option("--summary", config.summary, "write the oracle report (JSON)");
  verify->add_option("--format", config.format, "stdout format: table or json")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : ghzqkd::cli::kExitUsage;
  }

  return ghzqkd::cli::guarded(std::cerr, [&] {
    if (!config_file.empty()) ghzqkd::cli::apply_config_file(config, config_file);
    if (*simulate) return ghzqkd::cli::cmd_simulate(config, std::cout);
    if (*attack) return ghzqkd::cli::cmd_attack(config, std::cout);
    if (*keyrate) return ghzqkd::cli::cmd_keyrate(config, std::cout);
    return ghzqkd::cli::cmd_verify(config, std::cout);
  });
}
