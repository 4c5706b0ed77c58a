#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "conjpt/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Conjugate points of control-affine Bolza problems"};
  app.require_subcommand(1);

  std::string config;
  std::string output = ".";
  bool plot = false;
  int threads = 0;

  const std::map<std::string, std::string> about = {
      {"solve", "one extremal from its terminal point z"},
      {"sens", "first- and second-order sensitivities with respect to z"},
      {"scan", "conjugate candidates (det x_z(0, z) = 0) over a box"},
      {"kappa", "the cubic necessary condition at each candidate"},
      {"oracle", "replay-cost derivatives g', g'', g''' at each candidate"},
      {"hmodel", "table of the minimized Hamiltonian and its derivatives"},
      {"omega", "zeros of Phi with transversality"},
      {"perturb", "genericity experiment with random terminal cost perturbations"},
      {"boxcount", "box counts of the conjugate image"}};
  for (const auto& name : conjpt::cli::command_names()) {
    CLI::App* sub = app.add_subcommand(name, about.at(name));
    sub->add_option("-c,--config", config, "JSON config file")->required()->check(CLI::ExistingFile);
    sub->add_option("-o,--out", output, "output directory")->capture_default_str();
    sub->add_flag("--plot", plot, "also write det_grid.csv and, for n = 2, det_contour.svg");
    sub->add_option("-t,--threads", threads, "worker threads (default: CONJPT_THREADS or all cores)")
        ->check(CLI::PositiveNumber);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  conjpt::cli::RunFlags flags;
  flags.plot = plot;
  if (threads > 0) flags.threads = threads;
  return conjpt::cli::run(app.get_subcommands().front()->get_name(), config, output, flags, std::cerr);
}
