// invlab: run, sweep or validate JSON experiment configs.
//
// Exit codes: 0 success, 2 invalid config, 3 solver did not converge
// (artifacts are still written), 1 anything else.

#include "invlab/experiment.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

int report_outcome(bool converged, const std::string& dir) {
  std::cout << "wrote " << dir << (converged ? "" : " (not converged)") << '\n';
  return converged ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Inverse-problem experiment runner"};
  app.require_subcommand(1);

  std::string config_path;
  auto* run = app.add_subcommand("run", "Run one experiment");
  run->add_option("config", config_path, "Experiment JSON")->required();

  std::string template_path, axis;
  auto* sweep = app.add_subcommand("sweep", "Run a template once per axis value");
  sweep->add_option("template", template_path, "Template JSON")->required();
  sweep->add_option("--axis", axis, "key.path=v1,v2,...")->required();

  std::string validate_path;
  auto* validate = app.add_subcommand("validate", "Check a config without running it");
  validate->add_option("config", validate_path, "Experiment JSON")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (*run) {
      const auto out = invlab::run_experiment(invlab::load_config(config_path));
      if (out.report.contains("error")) {
        std::cerr << "error: " << out.report["error"].get<std::string>() << '\n';
      }
      return report_outcome(out.converged, out.output_dir);
    }
    if (*sweep) {
      const auto [name, values] = invlab::parse_axis(axis);
      const auto out = invlab::run_sweep(invlab::load_config(template_path), name, values);
      return report_outcome(out.all_converged, out.output_dir);
    }
    invlab::validate_config(invlab::load_config(validate_path));
    std::cout << "ok\n";
    return 0;
  } catch (const invlab::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const invlab::DomainError& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
