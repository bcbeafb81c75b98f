// frictobs: simulate, design, observe, identify, compare.

#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "frictobs/cli.hpp"

int main(int argc, char** argv) {
  using namespace frictobs::cli;

  CLI::App app{"Velocity and friction observer for motion with presliding friction"};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Simulate the plant and write sim-out and measured CSVs");
  simulate->add_option("-c,--config", sim.config_path, "Configuration file")->required();
  simulate->add_option("-o,--out", sim.out_path, "Ground-truth CSV (t,x,v,f,u)")->required();
  simulate->add_option("--measured", sim.measured_path, "Measured CSV (t,x,u); default <out>_measured.csv");
  simulate->add_option("--runs", sim.runs, "Independent runs with consecutive seeds")->check(CLI::PositiveNumber);
  simulate->add_flag("--plot-script", sim.plot_script, "Also write a matplotlib script");

  DesignArgs design;
  auto* design_cmd = app.add_subcommand("design", "Place observer poles and check robustness");
  design_cmd->add_option("--m", design.m, "Mass [kg]")->required();
  design_cmd->add_option("--sob", design.sob, "sigma/beta [N/m]");
  design_cmd->add_option("--kappa", design.kappa, "Presliding stiffness bound [N/m]");
  design_cmd->add_option("--poles", design.poles, "Two real negative poles, e.g. -350,-10")->delimiter(',');
  design_cmd->add_option("--gains", design.gains, "Check gains L1,L2 instead of placing poles")->delimiter(',');
  design_cmd->require_option(2, 5);

  ObserveArgs obs;
  auto* observe = app.add_subcommand("observe", "Run the observer on a measured CSV");
  observe->add_option("-c,--config", obs.config_path, "Configuration file")->required();
  observe->add_option("-m,--measured", obs.measured_path, "Measured CSV (t,x,u)")->required();
  observe->add_option("-o,--out", obs.out_path, "Estimates CSV")->required();
  observe->add_option("--truth", obs.truth_path, "Ground-truth CSV for velocity error");

  IdentifyArgs ident;
  auto* identify = app.add_subcommand("identify", "Fit sigma, beta, s and the pulse to a measured CSV");
  identify->add_option("-c,--config", ident.config_path, "Configuration file")->required();
  identify->add_option("-m,--measured", ident.measured_path, "Measured CSV (t,x,u)")->required();
  identify->add_option("-o,--out", ident.out_path, "Report file (key=value)")->required();

  CompareArgs cmp;
  auto* compare = app.add_subcommand("compare", "Merge ground truth and estimates into one CSV");
  compare->add_option("--sim", cmp.sim_path, "Ground-truth CSV")->required();
  compare->add_option("--estimates", cmp.estimates_path, "Estimates CSV")->required();
  compare->add_option("-o,--out", cmp.out_path, "Merged CSV")->required();
  compare->add_flag("--plot-script", cmp.plot_script, "Also write a matplotlib script");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kConfigError;
  }

  if (simulate->parsed()) return cmd_simulate(sim, std::cout, std::cerr);
  if (design_cmd->parsed()) return cmd_design(design, std::cout, std::cerr);
  if (observe->parsed()) return cmd_observe(obs, std::cout, std::cerr);
  if (identify->parsed()) return cmd_identify(ident, std::cout, std::cerr);
  if (compare->parsed()) return cmd_compare(cmp, std::cout, std::cerr);
  return kConfigError;
}
