// dcgd: experiment runner for decentralized consensus optimization with
// delayed stochastic gradients.
//
//   dcgd run <config>        full experiment: trace CSV + summary
//   dcgd sweep <config>      grid over delay bound / noise level / network size
//   dcgd timing <config>     synchronous vs asynchronous wall-clock comparison
//   dcgd validate <config>   mixing-matrix assumption report
//   dcgd reference <config>  centralized reference optimum only

#include <exception>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "dcgd/experiment.hpp"

namespace {

constexpr int kExitConfigError = 2;
constexpr int kExitDivergence = 3;

dcgd::ExperimentConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw dcgd::ConfigError("config: cannot open '" + path + "'");
  return dcgd::parse_config(is);
}

int cmd_run(const std::string& path) {
  const auto config = load_config(path);
  const auto result = dcgd::run_experiment(config);
  dcgd::write_experiment_files(config, result);
  dcgd::write_summary(std::cout, config, result);
  const auto dir = dcgd::resolve_output_dir(config);
  std::cout << "trace " << (dir / (config.run.tag + "_trace.csv")).string() << "\n";
  return 0;
}

int cmd_sweep(const std::string& path) {
  const auto config = load_config(path);
  const auto result = dcgd::sweep(config);
  const auto dir = dcgd::resolve_output_dir(config);
  int failures = 0;
  for (const auto& cell : result.cells) {
    if (!cell.ok) {
      ++failures;
      std::cout << "cell " << cell.label << " FAILED: " << cell.error << "\n";
      continue;
    }
    dcgd::ExperimentConfig cc =
        dcgd::apply_cell(config, cell.delay_bound, cell.sigma, cell.size);
    cc.run.tag = config.run.tag + "_" + cell.label;
    dcgd::write_experiment_files(cc, cell.result);
    std::cout << "cell " << cell.label << " final_gap "
              << dcgd::format_double(cell.result.mean_final_gap) << " final_disagreement "
              << dcgd::format_double(cell.result.mean_final_disagreement_sq) << "\n";
  }
  dcgd::write_file_atomic(dir / (config.run.tag + "_comparison.csv"),
                          [&](std::ostream& os) { dcgd::write_sweep_csv(os, result); });
  std::cout << "comparison " << (dir / (config.run.tag + "_comparison.csv")).string() << "\n";
  return failures == 0 ? 0 : 1;
}

int cmd_timing(const std::string& path) {
  const auto config = load_config(path);
  const auto result = dcgd::timing_compare(config);
  const auto dir = dcgd::resolve_output_dir(config);
  dcgd::write_file_atomic(dir / (config.run.tag + "_timing.csv"),
                          [&](std::ostream& os) { dcgd::write_timing_csv(os, result); });
  const double threshold = 0.25 * result.initial_gap;
  std::cout << "ticks " << result.ticks << "\n";
  std::cout << "sync_iterations " << result.comparison.synchronous.wall_clock.size() << "\n";
  std::cout << "time_to_quarter_gap sync "
            << dcgd::format_double(result.comparison.synchronous.time_to_gap(threshold))
            << " async "
            << dcgd::format_double(result.comparison.asynchronous.time_to_gap(threshold)) << "\n";
  std::cout << "timing " << (dir / (config.run.tag + "_timing.csv")).string() << "\n";
  return 0;
}

int cmd_validate(const std::string& path) {
  const auto config = load_config(path);
  const auto topo = dcgd::build_topology(config);
  const auto mixing = dcgd::build_mixing(config, topo);
  const auto report = dcgd::validate_mixing(mixing.weights, topo);
  std::cout << "nodes " << topo.node_count << " edges " << topo.edges.size() << " lambda "
            << dcgd::format_double(mixing.lambda) << "\n";
  for (const auto& check : report.checks)
    std::cout << check.name << " " << (check.pass ? "pass" : "FAIL") << " ("
              << dcgd::format_double(check.value) << ")\n";
  return report.all_pass() ? 0 : 1;
}

int cmd_reference(const std::string& path) {
  const auto config = load_config(path);
  const auto topo = dcgd::build_topology(config);
  const auto problem = dcgd::build_problem(config, topo.node_count, config.run.seed);
  const auto ref = dcgd::centralized_reference(problem);
  std::cout << "reference_value " << dcgd::format_double(ref.value) << "\n";
  std::cout << "iterations " << ref.iterations << "\n";
  std::cout << "gradient_map " << dcgd::format_double(ref.gradient_map_norm) << "\n";
  std::cout << "converged " << (ref.converged ? "yes" : "no") << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"decentralized consensus optimization with delayed stochastic gradients"};
  app.require_subcommand(1);

  std::string config_path;
  auto add = [&](const char* name, const char* desc) {
    CLI::App* sub = app.add_subcommand(name, desc);
    sub->add_option("config", config_path, "experiment config file")->required();
    return sub;
  };
  CLI::App* run = add("run", "run one experiment");
  CLI::App* sweep = add("sweep", "run a parameter grid");
  CLI::App* timing = add("timing", "synchronous vs asynchronous wall-clock comparison");
  CLI::App* validate = add("validate", "check mixing-matrix assumptions");
  CLI::App* reference = add("reference", "compute the centralized optimum only");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(config_path);
    if (sweep->parsed()) return cmd_sweep(config_path);
    if (timing->parsed()) return cmd_timing(config_path);
    if (validate->parsed()) return cmd_validate(config_path);
    if (reference->parsed()) return cmd_reference(config_path);
  } catch (const dcgd::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const dcgd::DivergenceError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitDivergence;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
