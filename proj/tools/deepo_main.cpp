#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "deepo/experiment.hpp"

namespace {

using deepo::cli::ExperimentConfig;

// Exit codes: 0 success, 1 assertion/numerical failure, 2 input error.
constexpr int kExitOk = 0;
constexpr int kExitAssertion = 1;
constexpr int kExitInput = 2;

void add_config_flags(CLI::App& cmd, ExperimentConfig& cfg, std::string& config_path) {
  cmd.add_option("--config", config_path, "JSON config file; flags override its values");
  cmd.add_option("--system", cfg.system_source, "plant source: benchmark | random");
  cmd.add_option("--n", cfg.state_dim, "state dimension (random system)");
  cmd.add_option("--m", cfg.input_dim, "input dimension (random system)");
  cmd.add_option("--rho", cfg.target_rho, "target spectral radius (random system)");
  cmd.add_option("--T", cfg.data_length, "number of data columns");
  cmd.add_option("--data", cfg.data_file, "data file (relative paths live in output dir)");
  cmd.add_option("--eta", cfg.eta, "stepsize");
  cmd.add_flag("--line-search", cfg.line_search, "backtracking line search");
  cmd.add_option("--max-iter", cfg.max_iter, "iteration budget");
  cmd.add_option("--grad-tol", cfg.grad_tol, "projected-gradient stopping tolerance");
  cmd.add_option("--stability-margin", cfg.stability_margin, "spectral-radius margin");
  cmd.add_option("--lambda", cfg.lambda, "certainty-equivalence weight (deepo-ce)");
  cmd.add_option("--gamma", cfg.gamma, "robustness weight (deepo-rob)");
  cmd.add_option("--init", cfg.init, "initial policy: auto | zero-gain | given-gain | perturbed");
  cmd.add_option("--k0", cfg.k0, "row-major gain values for --init given-gain");
  cmd.add_option("--init-noise-std", cfg.init_noise_std,
                 "entry stddev of the nullspace perturbation for --init perturbed");
  cmd.add_option("--seed", cfg.seed, "master seed; all randomness derives from it");
  cmd.add_option("--output-dir", cfg.output_dir, "directory for generated files");
}

// Re-parse after loading --config so explicit flags win over file values.
ExperimentConfig resolve_config(CLI::App& cmd, const ExperimentConfig& parsed,
                                const std::string& config_path) {
  if (config_path.empty()) return parsed;
  ExperimentConfig cfg = ExperimentConfig::from_json_file(config_path);
  auto merge = [&](const char* flag, auto member) {
    if (cmd.count(flag) > 0) cfg.*member = parsed.*member;
  };
  merge("--system", &ExperimentConfig::system_source);
  merge("--n", &ExperimentConfig::state_dim);
  merge("--m", &ExperimentConfig::input_dim);
  merge("--rho", &ExperimentConfig::target_rho);
  merge("--T", &ExperimentConfig::data_length);
  merge("--data", &ExperimentConfig::data_file);
  merge("--eta", &ExperimentConfig::eta);
  merge("--line-search", &ExperimentConfig::line_search);
  merge("--max-iter", &ExperimentConfig::max_iter);
  merge("--grad-tol", &ExperimentConfig::grad_tol);
  merge("--stability-margin", &ExperimentConfig::stability_margin);
  merge("--lambda", &ExperimentConfig::lambda);
  merge("--gamma", &ExperimentConfig::gamma);
  merge("--init", &ExperimentConfig::init);
  merge("--k0", &ExperimentConfig::k0);
  merge("--init-noise-std", &ExperimentConfig::init_noise_std);
  merge("--seed", &ExperimentConfig::seed);
  merge("--output-dir", &ExperimentConfig::output_dir);
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"deepo: direct data-driven LQR by projected policy gradients"};
  app.require_subcommand(1);

  ExperimentConfig cfg;
  std::string config_path;

  auto* gen = app.add_subcommand("gen-data", "simulate the plant and write a certified data batch");
  auto* run = app.add_subcommand("run", "run one algorithm and write its trace");
  auto* compare = app.add_subcommand("compare", "align trace files into one table with fitted rates");
  auto* verify = app.add_subcommand("verify", "run the numerical certificate suite");
  auto* defaults = app.add_subcommand("defaults", "print the default config as JSON");

  add_config_flags(*gen, cfg, config_path);

  std::string algorithm = "deepo";
  add_config_flags(*run, cfg, config_path);
  run->add_option("--algorithm", algorithm, "deepo | deepo-ce | deepo-rob");

  std::vector<std::string> trace_files;
  std::string compare_out = "compare.csv";
  compare->add_option("traces", trace_files, "trace CSV files from completed runs");
  compare->add_option("--output", compare_out, "combined table path");

  std::string report_out;
  add_config_flags(*verify, cfg, config_path);
  verify->add_option("--report", report_out, "write the certificate report to this file");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) {
      const ExperimentConfig final_cfg = resolve_config(*gen, cfg, config_path);
      const std::filesystem::path path = deepo::cli::cmd_gen_data(final_cfg);
      const deepo::data::DataMatrices batch = deepo::data::load(path);
      std::cout << "wrote " << path.string() << "\n";
      std::cout << "T " << batch.length() << " n " << batch.state_dim() << " m "
                << batch.input_dim() << "\n";
      std::cout << "sigma_min_D " << batch.sigma_min_d() << "\n";
      if (batch.seed()) std::cout << "seed " << *batch.seed() << "\n";
      return kExitOk;
    }
    if (run->parsed()) {
      const ExperimentConfig final_cfg = resolve_config(*run, cfg, config_path);
      const deepo::cli::RunReport report = deepo::cli::cmd_run(final_cfg, algorithm);
      std::cout << report.text();
      return report.stop_reason == "step-unstable" ? kExitAssertion : kExitOk;
    }
    if (compare->parsed()) {
      std::vector<std::filesystem::path> paths(trace_files.begin(), trace_files.end());
      deepo::cli::cmd_compare(paths, compare_out, std::cout);
      std::cout << "wrote " << compare_out << "\n";
      return kExitOk;
    }
    if (verify->parsed()) {
      const ExperimentConfig final_cfg = resolve_config(*verify, cfg, config_path);
      const deepo::cli::VerifyReport report = deepo::cli::cmd_verify(final_cfg);
      std::cout << report.text();
      if (!report_out.empty()) {
        std::ofstream os(report_out);
        if (!os) throw deepo::IoError("cannot open " + report_out + " for writing");
        os << report.text();
      }
      return report.all_passed() ? kExitOk : kExitAssertion;
    }
    if (defaults->parsed()) {
      std::cout << ExperimentConfig{}.to_json();
      return kExitOk;
    }
  } catch (const deepo::ConfigError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kExitInput;
  } catch (const deepo::ParseError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kExitInput;
  } catch (const deepo::IoError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kExitInput;
  } catch (const deepo::DimensionError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kExitInput;
  } catch (const deepo::InsufficientDataError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kExitInput;
  } catch (const deepo::Error& e) {
    std::cerr << "failure: " << e.what() << "\n";
    return kExitAssertion;
  }
  return kExitInput;
}
