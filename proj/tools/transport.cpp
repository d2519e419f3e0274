// Command-line front end: analyze, sensitivity, simulate, calibrate.
#include "transport/io.hpp"

#include "CLI11.hpp"

#include <fstream>
#include <iomanip>
#include <iostream>

using namespace transport;

namespace {

// Writes to `path`, or stdout when it is empty or "-".
template <class F>
void emit(const std::string& path, F&& write) {
  if (path.empty() || path == "-") {
    write(std::cout);
    return;
  }
  std::ofstream out(path);
  if (!out) throw Error(Errc::config_invalid, "cannot write " + path);
  write(out);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Transport a trial treatment effect to a target population"};
  app.require_subcommand(1);

  std::string config_path, report_path, output;
  int threads = 0;

  auto* analyze = app.add_subcommand("analyze", "fit, partition and estimate; writes a JSON report");
  analyze->add_option("-c,--config", config_path, "analysis configuration (JSON)")->required();
  analyze->add_option("-o,--output", output, "report path (default stdout)");

  auto* sensitivity = app.add_subcommand("sensitivity", "sweep sensitivity parameters; writes CSV");
  sensitivity->add_option("-c,--config", config_path, "analysis configuration (JSON)")->required();
  sensitivity->add_option("-r,--report", report_path, "report from analyze")->required();
  sensitivity->add_option("-o,--output", output, "CSV path (default stdout)");

  auto* simulate = app.add_subcommand("simulate", "run a replication study; writes CSV");
  simulate->add_option("-c,--config", config_path, "study configuration (JSON)")->required();
  simulate->add_option("-o,--output", output, "CSV path (default stdout)");
  simulate->add_option("--threads", threads, "worker threads (results do not depend on this)")
      ->check(CLI::PositiveNumber);

  double target = 0.01, tol = 1e-4;
  int draws = 10000000;
  std::uint64_t seed = 0;
  std::vector<double> slopes{-2, 1, 1, 1};
  bool no_exclusion = false;
  auto* calibrate = app.add_subcommand("calibrate", "participation intercept for a target rate");
  calibrate->add_option("--target", target, "target participation probability");
  calibrate->add_option("--slopes", slopes, "slopes of X1..X4")->expected(4);
  calibrate->add_option("--draws", draws, "Monte Carlo draws");
  calibrate->add_option("--tol", tol, "tolerance on the achieved probability");
  calibrate->add_option("--seed", seed, "random seed")->required();
  calibrate->add_flag("--no-exclusion", no_exclusion, "do not apply the E / X4 exclusions");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*analyze) {
      const Json report = cmd_analyze(load_analysis_config(config_path));
      emit(output, [&](std::ostream& out) { out << std::setw(2) << report << '\n'; });
    } else if (*sensitivity) {
      const AnalysisConfig config = load_analysis_config(config_path);
      const SensitivityGrid grid = cmd_sensitivity(config, read_json(report_path));
      emit(output, [&](std::ostream& out) { write_csv(out, grid); });
      for (const auto& r : grid.rows)
        if (r.k1 == 1.0 && r.k2 == 1.0)
          std::cerr << "reference (k1 = k2 = 1): " << std::setprecision(6) << r.tau << " ["
                    << r.ci_low << ", " << r.ci_high << "]\n";
    } else if (*simulate) {
      StudyConfig config = load_study_config(config_path);
      if (threads > 0) config.threads = threads;
      const StudyReport report = cmd_simulate(config);
      emit(output, [&](std::ostream& out) { write_csv(out, report); });
      std::cerr << "true tau " << std::setprecision(8) << report.true_tau << ", "
                << report.failures << " failed replications\n";
    } else if (*calibrate) {
      DgpConfig dgp;
      dgp.exclusion = !no_exclusion;
      const double b = calibrate_intercept(
          Eigen::Map<const Eigen::VectorXd>(slopes.data(), 4), target, dgp_covariate_sampler(dgp),
          draws, tol, seed);
      std::cout << std::setprecision(8) << b << '\n';
    }
  } catch (const Error& e) {
    std::cerr << "error [" << to_string(e.code()) << "]: " << e.what() << '\n';
    return exit_code(e);
  }
  return 0;
}
