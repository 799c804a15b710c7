// opinet: validate, decompose, simulate and sweep opinion-dynamics scenarios.

#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "opinet/opinet.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Opinion dynamics over directory/user logic graphs with Bayesian anomaly scoring"};
  app.require_subcommand(1);

  std::string scenario;
  std::uint64_t seed = 0;
  std::size_t max_steps = 0;
  std::string mode = "both";
  opinet::CommandOptions opt;

  std::vector<CLI::Option*> seed_opts;
  std::vector<CLI::Option*> step_opts;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--scenario", scenario, "Scenario JSON file")->required();
    seed_opts.push_back(sub->add_option("--seed", seed, "Seed for generated initial opinions"));
  };

  auto* validate = app.add_subcommand("validate", "Check every matrix and the scenario schema");
  add_common(validate);

  auto* decompose = app.add_subcommand("decompose", "Print SCC block reports");
  add_common(decompose);

  auto* simulate = app.add_subcommand("simulate", "Run the scenario timeline");
  add_common(simulate);
  simulate->add_option("--out-dir", opt.out_dir, "Directory for CSV outputs");
  step_opts.push_back(simulate->add_option("--max-steps", max_steps, "Cap on steps per epoch"));

  auto* sweep = app.add_subcommand("sweep", "Score the injection weight sweep");
  add_common(sweep);
  sweep->add_option("--out-dir", opt.out_dir, "Directory for CSV outputs");
  step_opts.push_back(sweep->add_option("--max-steps", max_steps, "Cap on steps per epoch"));
  sweep->add_option("--mode", mode, "Prior mode")
      ->check(CLI::IsMember({"static", "online", "both"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : opinet::kExitValidation;
  }

  for (auto* o : seed_opts) {
    if (o->count()) opt.seed = seed;
  }
  for (auto* o : step_opts) {
    if (o->count()) opt.max_steps = max_steps;
  }
  static const std::map<std::string, opinet::ModeSelection> modes{
      {"static", opinet::ModeSelection::Static},
      {"online", opinet::ModeSelection::Online},
      {"both", opinet::ModeSelection::Both}};
  opt.mode = modes.at(mode);

  if (*validate) return opinet::cmd_validate(scenario, std::cout);
  if (*decompose) return opinet::cmd_decompose(scenario, opt, std::cout, std::cerr);
  if (*simulate) return opinet::cmd_simulate(scenario, opt, std::cout);
  return opinet::cmd_sweep(scenario, opt, std::cout);
}
