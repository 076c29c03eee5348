#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "delaysync/cli.hpp"

int main(int argc, char** argv) {
  namespace cli = delaysync::cli;
  CLI::App app{"Scale-free delay-tolerant synchronization: synthesis, simulation, verification"};
  app.set_version_flag("--version", cli::kVersion);
  app.require_subcommand(1);

  cli::SynthesizeOptions syn;
  auto* c_syn = app.add_subcommand("synthesize", "Build the protocol from an agent model");
  c_syn->add_option("model", syn.model_path, "Agent model JSON")->required()->check(CLI::ExistingFile);
  c_syn->add_option("--yr", syn.yr, "Constant reference, e.g. 5 or 1,1")->required();
  c_syn->add_option("--out", syn.out_dir, "Output directory");

  cli::SimulateOptions sim;
  auto* c_sim = app.add_subcommand("simulate", "Run the closed loop on a delayed network");
  c_sim->add_option("protocol", sim.protocol_path, "protocol.json")->required()->check(CLI::ExistingFile);
  c_sim->add_option("graph", sim.graph_path, "Graph JSON")->required()->check(CLI::ExistingFile);
  c_sim->add_option("--steps", sim.steps, "Maximum ticks");
  c_sim->add_option("--seed", sim.seed, "Initial-state seed");
  c_sim->add_option("--out", sim.out_dir, "Output directory");
  c_sim->add_flag("--plot", sim.plot, "Also write plot.svg");
  c_sim->add_option("--prefill", sim.prefill, "Channel history before tick 0: hold|zero");
  c_sim->add_option("--stride", sim.stride, "Record every n-th tick");
  c_sim->add_option("--eps-sync", sim.eps_sync, "Synchronization threshold");
  c_sim->add_option("--eps-reg", sim.eps_reg, "Regulation threshold");

  cli::VerifyOptions ver;
  auto* c_ver = app.add_subcommand("verify", "Frequency-domain stability scans");
  c_ver->add_option("protocol", ver.protocol_path, "protocol.json")->required()->check(CLI::ExistingFile);
  c_ver->add_option("graph", ver.graph_path, "Graph JSON")->required()->check(CLI::ExistingFile);
  c_ver->add_option("--grid", ver.grid, "Number of frequencies on [-pi, pi]");
  c_ver->add_option("--delays", ver.delays, "Per-channel delay values to sample, comma separated");
  c_ver->add_option("--delay-budget", ver.budget, "Maximum number of sampled delay assignments");
  c_ver->add_option("--out", ver.out_dir, "Output directory");

  cli::SweepOptions swp;
  auto* c_swp = app.add_subcommand("sweep", "Simulate many random delay assignments");
  c_swp->add_option("protocol", swp.protocol_path, "protocol.json")->required()->check(CLI::ExistingFile);
  c_swp->add_option("graph", swp.graph_path, "Graph JSON")->required()->check(CLI::ExistingFile);
  c_swp->add_option("--delay-max", swp.delay_max, "Delays drawn from {0..M}");
  c_swp->add_option("--trials", swp.trials, "Number of trials");
  c_swp->add_option("--seed", swp.seed, "Base seed");
  c_swp->add_option("--steps", swp.steps, "Maximum ticks per trial");
  c_swp->add_option("--threads", swp.threads, "Worker threads (0 = hardware)");
  c_swp->add_option("--out", swp.out_dir, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : cli::kUsage;
  }

  if (c_syn->parsed()) return cli::cmd_synthesize(syn, std::cout, std::cerr);
  if (c_sim->parsed()) return cli::cmd_simulate(sim, std::cout, std::cerr);
  if (c_ver->parsed()) return cli::cmd_verify(ver, std::cout, std::cerr);
  if (c_swp->parsed()) return cli::cmd_sweep(swp, std::cout, std::cerr);
  return cli::kUsage;
}
