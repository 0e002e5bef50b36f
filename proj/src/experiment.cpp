#include "deepo/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <sstream>

namespace deepo::cli {

namespace {

using json = nlohmann::json;

std::string fmt(double v, const char* spec = "%.17g") {
  char buf[48];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

std::string fmt6(double v) { return fmt(v, "%.6g"); }

std::string matrix_text(const Matrix& m) {
  std::string out = "[";
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    if (i) out += "; ";
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) out += " ";
      out += fmt(m(i, j), "%.12g");
    }
  }
  out += "]";
  return out;
}

}  // namespace

void ExperimentConfig::validate() const {
  if (system_source != "benchmark" && system_source != "random")
    throw ConfigError("system must be 'benchmark' or 'random'");
  const int n = system_source == "benchmark" ? 4 : state_dim;
  const int m = system_source == "benchmark" ? 2 : input_dim;
  if (state_dim < 1 || input_dim < 1) throw ConfigError("n and m must be at least 1");
  if (target_rho <= 0.0) throw ConfigError("target_rho must be positive");
  if (data_length < n + m) {
    std::ostringstream os;
    os << "T = " << data_length << " cannot satisfy the rank condition (need >= " << n + m
       << ")";
    throw InsufficientDataError(os.str(), data_length, n + m);
  }
  if (eta <= 0.0) throw ConfigError("eta must be positive");
  if (max_iter < 0) throw ConfigError("max_iter must be nonnegative");
  if (grad_tol <= 0.0) throw ConfigError("grad_tol must be positive");
  if (stability_margin <= 0.0 || stability_margin >= 1.0)
    throw ConfigError("stability_margin must be in (0, 1)");
  if (lambda < 0.0 || gamma < 0.0) throw ConfigError("lambda and gamma must be nonnegative");
  if (init != "auto" && init != "zero-gain" && init != "given-gain" && init != "perturbed")
    throw ConfigError("init must be auto, zero-gain, given-gain, or perturbed");
  if (init == "given-gain" && k0.size() != static_cast<std::size_t>(n) * m)
    throw ConfigError("given-gain needs exactly m*n k0 values (row-major)");
  if (init_noise_std < 0.0) throw ConfigError("init_noise_std must be nonnegative");
  if (data_file.empty()) throw ConfigError("data_file must not be empty");
}

std::filesystem::path ExperimentConfig::resolve(const std::string& name) const {
  std::filesystem::path p(name);
  if (p.is_absolute()) return p;
  return std::filesystem::path(output_dir) / p;
}

std::string ExperimentConfig::to_json() const {
  json j;
  j["system"] = system_source;
  j["n"] = state_dim;
  j["m"] = input_dim;
  j["target_rho"] = target_rho;
  j["T"] = data_length;
  j["data_file"] = data_file;
  j["eta"] = eta;
  j["line_search"] = line_search;
  j["max_iter"] = max_iter;
  j["grad_tol"] = grad_tol;
  j["stability_margin"] = stability_margin;
  j["lambda"] = lambda;
  j["gamma"] = gamma;
  j["init"] = init;
  j["k0"] = k0;
  j["init_noise_std"] = init_noise_std;
  j["seed"] = seed;
  j["output_dir"] = output_dir;
  return j.dump(2) + "\n";
}

ExperimentConfig ExperimentConfig::from_json_file(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open config " + path.string());
  json j;
  try {
    is >> j;
  } catch (const json::exception& e) {
    throw ParseError("malformed config " + path.string() + ": " + e.what());
  }
  ExperimentConfig cfg;
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "system") cfg.system_source = value.get<std::string>();
      else if (key == "n") cfg.state_dim = value.get<int>();
      else if (key == "m") cfg.input_dim = value.get<int>();
      else if (key == "target_rho") cfg.target_rho = value.get<double>();
      else if (key == "T") cfg.data_length = value.get<long>();
      else if (key == "data_file") cfg.data_file = value.get<std::string>();
      else if (key == "eta") cfg.eta = value.get<double>();
      else if (key == "line_search") cfg.line_search = value.get<bool>();
      else if (key == "max_iter") cfg.max_iter = value.get<long>();
      else if (key == "grad_tol") cfg.grad_tol = value.get<double>();
      else if (key == "stability_margin") cfg.stability_margin = value.get<double>();
      else if (key == "lambda") cfg.lambda = value.get<double>();
      else if (key == "gamma") cfg.gamma = value.get<double>();
      else if (key == "init") cfg.init = value.get<std::string>();
      else if (key == "k0") cfg.k0 = value.get<std::vector<double>>();
      else if (key == "init_noise_std") cfg.init_noise_std = value.get<double>();
      else if (key == "seed") cfg.seed = value.get<std::uint64_t>();
      else if (key == "output_dir") cfg.output_dir = value.get<std::string>();
      else throw ParseError("unknown config key '" + key + "' in " + path.string());
    }
  } catch (const json::exception& e) {
    throw ParseError("bad value in config " + path.string() + ": " + e.what());
  }
  return cfg;
}

SystemModel make_system(const ExperimentConfig& config) {
  if (config.system_source == "benchmark") return data::benchmark_system();
  return data::random_system(config.state_dim, config.input_dim, config.target_rho,
                             data::mix_seed(config.seed, 1));
}

std::filesystem::path cmd_gen_data(const ExperimentConfig& config) {
  config.validate();
  const SystemModel sys = make_system(config);
  const std::filesystem::path path = config.resolve(config.data_file);
  if (!path.parent_path().empty()) std::filesystem::create_directories(path.parent_path());

  constexpr int kMaxResamples = 32;
  for (int attempt = 0; attempt < kMaxResamples; ++attempt) {
    const std::uint64_t data_seed = data::mix_seed(config.seed, 100 + attempt);
    std::mt19937_64 rng(data_seed);
    const Matrix inputs = data::gaussian(sys.input_dim(), config.data_length, rng);
    const linalg::Vector x0 = data::gaussian(sys.state_dim(), 1, rng);
    const data::Trajectory traj = data::simulate(sys, inputs, x0);
    try {
      const Eigen::Index t = traj.length();
      data::DataMatrices batch(traj.inputs, traj.states.leftCols(t), traj.states.rightCols(t),
                               data_seed);
      data::save(batch, path);
      return path;
    } catch (const RankDeficientError&) {
      continue;  // fresh excitation draw
    }
  }
  throw RankDeficientError("excitation failed the rank certificate after resampling", 0.0);
}

namespace {

Matrix initial_policy(const ExperimentConfig& config, const std::string& algorithm,
                      const DataMatrices& batch) {
  std::string mode = config.init;
  if (mode == "auto") mode = algorithm == "deepo-ce" ? "perturbed" : "zero-gain";

  const Eigen::Index n = batch.state_dim();
  const Eigen::Index m = batch.input_dim();
  if (mode == "zero-gain")
    return policy_from_gain(Matrix::Zero(m, n), batch, config.stability_margin);
  if (mode == "given-gain") {
    Matrix k0(m, n);
    for (Eigen::Index i = 0; i < m; ++i)
      for (Eigen::Index j = 0; j < n; ++j)
        k0(i, j) = config.k0[static_cast<std::size_t>(i * n + j)];
    return policy_from_gain(k0, batch, config.stability_margin);
  }
  // perturbed: zero-gain plus a nullspace component, invisible to the cost but
  // exposed by the certainty-equivalence regularizer.
  std::mt19937_64 rng(data::mix_seed(config.seed, 2));
  const Matrix g0 = policy_from_gain(Matrix::Zero(m, n), batch, config.stability_margin);
  return g0 + config.init_noise_std *
                  (batch.pi_d_minus().mat() * data::gaussian(batch.length(), n, rng));
}

Regularization algorithm_weights(const ExperimentConfig& config, const std::string& algorithm) {
  if (algorithm == "deepo") return Regularization{0.0, 0.0};
  if (algorithm == "deepo-ce") return Regularization{config.lambda, 0.0};
  if (algorithm == "deepo-rob") return Regularization{0.0, config.gamma};
  throw ConfigError("algorithm must be deepo, deepo-ce, or deepo-rob");
}

}  // namespace

RunReport cmd_run(const ExperimentConfig& config, const std::string& algorithm) {
  config.validate();
  const Regularization reg = algorithm_weights(config, algorithm);
  const auto t0 = std::chrono::steady_clock::now();

  const SystemModel sys = make_system(config);
  const DataMatrices batch = data::load(config.resolve(config.data_file));
  const GeneralizedCost cost(batch, sys.q, sys.r, reg);
  const certify::OracleSolution oracle = certify::riccati_oracle(sys, batch);
  const Matrix g0 = initial_policy(config, algorithm, batch);

  double reference = oracle.j_star;
  if (!reg.is_plain()) {
    // Self-referential optimum: the regularized problems have no closed form.
    OptimizerConfig ref_cfg;
    ref_cfg.eta = config.eta;
    ref_cfg.line_search = config.line_search;
    ref_cfg.max_iter = std::max<long>(300000, config.max_iter);
    ref_cfg.grad_tol = 1e-11;
    ref_cfg.stability_margin = config.stability_margin;
    ref_cfg.record_iterates = false;
    const OptimizerTrace ref = run_optimizer(g0, ref_cfg, batch, cost);
    if (ref.stop == StopReason::StepUnstable)
      throw StepUnstableError("reference run left the stability region",
                              ref.stop_spectral_radius, ref.stop_iteration);
    reference = ref.final_record().cost;
  }

  OptimizerConfig run_cfg;
  run_cfg.eta = config.eta;
  run_cfg.line_search = config.line_search;
  run_cfg.max_iter = config.max_iter;
  run_cfg.grad_tol = config.grad_tol;
  run_cfg.stability_margin = config.stability_margin;
  const OptimizerTrace trace = run_optimizer(g0, run_cfg, batch, cost);

  const std::filesystem::path trace_path = config.resolve("trace_" + algorithm + ".csv");
  write_trace_csv(trace, trace_path, reference);

  RunReport report;
  report.algorithm = algorithm;
  report.stop_reason = to_string(trace.stop);
  report.iterations = trace.iterations();
  report.final_cost = trace.final_record().cost;
  report.final_cost_plain = trace.final_record().cost_plain;
  report.reference_cost = reference;
  report.final_rel_err = (report.final_cost - reference) / reference;
  report.final_proj_grad_norm = trace.final_record().proj_grad_norm;
  report.final_gain = recover_gain(trace.final_policy(), batch);
  report.gain_error = (report.final_gain - oracle.k_star).norm();
  report.trace_path = trace_path.string();
  report.sigma_min_d = batch.sigma_min_d();
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

std::string RunReport::text() const {
  std::ostringstream os;
  os << "algorithm " << algorithm << "\n";
  os << "stop " << stop_reason << "\n";
  os << "iterations " << iterations << "\n";
  os << "final_cost " << fmt(final_cost) << "\n";
  os << "final_cost_plain " << fmt(final_cost_plain) << "\n";
  os << "reference_cost " << fmt(reference_cost) << "\n";
  os << "final_rel_err " << fmt(final_rel_err) << "\n";
  os << "final_proj_grad_norm " << fmt(final_proj_grad_norm) << "\n";
  os << "final_gain " << matrix_text(final_gain) << "\n";
  os << "gain_error_vs_oracle " << fmt(gain_error) << "\n";
  os << "sigma_min_D " << fmt(sigma_min_d) << "\n";
  os << "trace " << trace_path << "\n";
  os << "wall_seconds " << fmt(wall_seconds, "%.3f") << "\n";
  return os.str();
}

RateFit fit_log_linear(std::span<const double> rel_err, double floor_tol) {
  std::vector<std::pair<long, double>> usable;
  for (std::size_t k = 0; k < rel_err.size(); ++k)
    if (rel_err[k] > floor_tol) usable.emplace_back(static_cast<long>(k), std::log(rel_err[k]));
  if (usable.size() < 4)
    throw Error("too few resolvable points for a rate fit");

  const std::size_t start = usable.size() / 2;  // tail half of the resolvable window
  const std::size_t count = usable.size() - start;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = start; i < usable.size(); ++i) {
    sx += usable[i].first;
    sy += usable[i].second;
    sxx += static_cast<double>(usable[i].first) * usable[i].first;
    sxy += usable[i].first * usable[i].second;
  }
  const double denom = count * sxx - sx * sx;
  if (std::abs(denom) < 1e-30) throw Error("degenerate abscissa in rate fit");
  RateFit fit;
  fit.slope = (count * sxy - sx * sy) / denom;
  fit.intercept = (sy - fit.slope * sx) / count;
  double ss_res = 0, ss_tot = 0;
  const double mean = sy / count;
  for (std::size_t i = start; i < usable.size(); ++i) {
    const double pred = fit.slope * usable[i].first + fit.intercept;
    ss_res += (usable[i].second - pred) * (usable[i].second - pred);
    ss_tot += (usable[i].second - mean) * (usable[i].second - mean);
  }
  fit.r_squared = ss_tot < 1e-30 ? 1.0 : 1.0 - ss_res / ss_tot;
  fit.first_k = usable[start].first;
  fit.last_k = usable.back().first;
  fit.points = static_cast<long>(count);
  return fit;
}

namespace {

struct ParsedTrace {
  std::string name;
  std::vector<double> rel_err;
};

ParsedTrace read_run_trace(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path))
    throw IoError("missing trace file: " + path.string());
  std::ifstream is(path);
  if (!is) throw IoError("cannot open " + path.string());

  std::string header;
  if (!std::getline(is, header)) throw ParseError("empty trace file: " + path.string());
  std::vector<std::string> cols;
  {
    std::istringstream hs(header);
    std::string col;
    while (std::getline(hs, col, ',')) cols.push_back(col);
  }
  const auto k_it = std::find(cols.begin(), cols.end(), "k");
  const auto rel_it = std::find(cols.begin(), cols.end(), "rel_err");
  if (k_it == cols.end() || rel_it == cols.end())
    throw ParseError("trace " + path.string() + " lacks k/rel_err columns");
  const std::size_t rel_idx = static_cast<std::size_t>(rel_it - cols.begin());
  const std::size_t k_idx = static_cast<std::size_t>(k_it - cols.begin());

  ParsedTrace out;
  out.name = path.stem().string();
  std::string line;
  long expected_k = 0;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string field;
    std::vector<std::string> fields;
    while (std::getline(ls, field, ',')) fields.push_back(field);
    if (fields.size() != cols.size())
      throw ParseError("ragged row in trace " + path.string());
    const long k = std::stol(fields[k_idx]);
    if (k != expected_k++)
      throw ParseError("non-contiguous iteration column in " + path.string());
    out.rel_err.push_back(std::stod(fields[rel_idx]));
  }
  if (out.rel_err.empty()) throw ParseError("trace has no records: " + path.string());
  return out;
}

}  // namespace

void cmd_compare(const std::vector<std::filesystem::path>& traces,
                 const std::filesystem::path& out, std::ostream& summary) {
  if (traces.size() < 2) throw ConfigError("compare needs at least two completed runs");
  std::vector<ParsedTrace> parsed;
  parsed.reserve(traces.size());
  for (const auto& p : traces) parsed.push_back(read_run_trace(p));

  std::size_t rows = parsed.front().rel_err.size();
  for (const auto& t : parsed) rows = std::min(rows, t.rel_err.size());

  std::ofstream os(out);
  if (!os) throw IoError("cannot open " + out.string() + " for writing");
  os << "k";
  for (std::size_t i = 0; i < parsed.size(); ++i) {
    std::string name = parsed[i].name;
    for (std::size_t j = 0; j < i; ++j)
      if (parsed[j].name == name) name += "_" + std::to_string(i);
    os << "," << name;
  }
  os << "\n";
  for (std::size_t k = 0; k < rows; ++k) {
    os << k;
    for (const auto& t : parsed) os << "," << fmt(t.rel_err[k]);
    os << "\n";
  }
  if (!os) throw IoError("write failed for " + out.string());

  for (const auto& t : parsed) {
    summary << t.name << ": ";
    try {
      const RateFit fit = fit_log_linear(t.rel_err);
      summary << "slope " << fmt6(fit.slope) << ", R2 " << fmt6(fit.r_squared) << ", fit over k "
              << fit.first_k << ".." << fit.last_k << " (" << fit.points << " points)\n";
    } catch (const Error& e) {
      summary << "rate fit unavailable (" << e.what() << ")\n";
    }
  }
}

int VerifyReport::failures() const {
  int n = 0;
  for (const auto& c : checks)
    if (!c.passed) ++n;
  return n;
}

std::string VerifyReport::text() const {
  std::ostringstream os;
  os << "deepo verify report\n";
  os << "seed " << seed << "\n";
  for (const auto& c : checks)
    os << "check " << c.name << " " << (c.passed ? "pass" : "FAIL") << " " << c.detail << "\n";
  os << "alpha_hat " << fmt(alpha_hat) << "\n";
  os << "mu_hat " << fmt(mu_hat) << "\n";
  os << "result " << (failures() == 0 ? "PASS" : "FAIL") << " checks=" << checks.size()
     << " failures=" << failures() << "\n";
  return os.str();
}

VerifyReport cmd_verify(const ExperimentConfig& config) {
  config.validate();
  VerifyReport report;
  report.seed = config.seed;

  const SystemModel sys = make_system(config);
  const DataMatrices batch = data::load(config.resolve(config.data_file));
  const SymMatrix& q = sys.q;
  const SymMatrix& r = sys.r;
  const GeneralizedCost plain(batch, q, r);
  const certify::OracleSolution oracle = certify::riccati_oracle(sys, batch);
  const Eigen::Index n = batch.state_dim();
  const Eigen::Index m = batch.input_dim();

  auto add = [&](const std::string& name, bool ok, const std::string& detail) {
    report.checks.push_back(VerifyCheck{name, ok, detail});
  };

  // -- data certificate ------------------------------------------------------
  {
    const double dyn_res =
        (batch.x_plus() - sys.a * batch.x_minus() - sys.b * batch.u_minus()).norm();
    const double px = (batch.x_minus() * batch.pi_x_minus().mat()).norm();
    const double pd = (batch.d_minus() * batch.pi_d_minus().mat()).norm();
    const bool ok = dyn_res <= 1e-10 * (1.0 + batch.x_plus().norm()) && px <= 1e-10 &&
                    pd <= 1e-10;
    add("data_certificate", ok,
        "sigma_min_D=" + fmt6(batch.sigma_min_d()) + " dynamics_res=" + fmt6(dyn_res) +
            " proj_res=" + fmt6(std::max(px, pd)));
  }

  const Matrix g0 = policy_from_gain(Matrix::Zero(m, n), batch, config.stability_margin);
  const double j0 = evaluate(g0, batch, plain).cost;

  // Baseline run shared by the dominance and implicit-regularization checks.
  OptimizerConfig base_cfg;
  base_cfg.eta = config.eta;
  base_cfg.max_iter = config.max_iter;
  base_cfg.grad_tol = 1e-14;  // let it run the full budget
  base_cfg.stability_margin = config.stability_margin;
  const OptimizerTrace base = run_optimizer(g0, base_cfg, batch, plain);

  std::vector<Matrix> anchors{g0, oracle.g_star};
  for (std::size_t i = base.iterates.size() / 4; i < base.iterates.size();
       i += std::max<std::size_t>(1, base.iterates.size() / 4))
    anchors.push_back(base.iterates[i]);

  std::mt19937_64 sample_rng(data::mix_seed(config.seed, 11));
  const std::vector<Matrix> pool = certify::sample_sublevel_policies(
      batch, q, r, anchors, 200, j0, sample_rng, 0.02);

  // -- gradient vs central differences --------------------------------------
  {
    auto costfn = [&](const Matrix& g) { return unconstrained_cost(g, batch, plain); };
    double worst = 0.0;
    for (int i = 0; i < 20; ++i) {
      const Matrix& g = pool[static_cast<std::size_t>(i)];
      const Matrix analytic = gradient(g, batch, plain);
      const Matrix fd = certify::finite_difference_gradient(costfn, g, 1e-6);
      worst = std::max(worst, (fd - analytic).norm() / analytic.norm());
    }
    add("gradient_fd", worst <= 1e-5, "max_rel_err=" + fmt6(worst) + " samples=20");
  }

  // -- regularized gradients vs central differences -------------------------
  {
    double worst = 0.0;
    for (const Regularization reg :
         {Regularization{config.lambda, 0.0}, Regularization{0.0, config.gamma}}) {
      const GeneralizedCost reg_cost(batch, q, r, reg);
      auto costfn = [&](const Matrix& g) { return unconstrained_cost(g, batch, reg_cost); };
      for (int i = 0; i < 5; ++i) {
        const Matrix& g = pool[static_cast<std::size_t>(20 + i)];
        const Matrix analytic = gradient(g, batch, reg_cost);
        const Matrix fd = certify::finite_difference_gradient(costfn, g, 1e-6);
        worst = std::max(worst, (fd - analytic).norm() / analytic.norm());
      }
    }
    add("gradient_fd_regularized", worst <= 1e-5,
        "max_rel_err=" + fmt6(worst) + " samples=10 lambda=" + fmt6(config.lambda) +
            " gamma=" + fmt6(config.gamma));
  }

  // -- Hessian quadratic form vs second differences -------------------------
  {
    auto costfn = [&](const Matrix& g) { return unconstrained_cost(g, batch, plain); };
    std::mt19937_64 rng(data::mix_seed(config.seed, 12));
    double worst = 0.0, worst_hom = 0.0;
    for (int i = 0; i < 20; ++i) {
      const Matrix& g = pool[static_cast<std::size_t>(i)];
      const Matrix z = certify::random_nullspace_direction(batch, rng);
      const double analytic = hessian_quadratic_form(g, z, batch, plain);
      const double fd = certify::finite_difference_second(costfn, g, z, 1e-4);
      worst = std::max(worst, std::abs(fd - analytic) / std::abs(analytic));
      const double scaled = hessian_quadratic_form(g, 3.0 * z, batch, plain);
      worst_hom = std::max(worst_hom,
                           std::abs(scaled - 9.0 * analytic) / (1.0 + std::abs(9.0 * analytic)));
    }
    add("hessian_fd", worst <= 1e-4 && worst_hom <= 1e-10,
        "max_rel_err=" + fmt6(worst) + " max_homogeneity_err=" + fmt6(worst_hom) +
            " samples=20");
  }

  // -- convex parameterization identity --------------------------------------
  {
    double worst_f = 0.0, worst_lmi = 0.0, worst_rt = 0.0;
    for (int i = 0; i < 20; ++i) {
      const Matrix& g = pool[static_cast<std::size_t>(i)];
      const double j = evaluate(g, batch, plain).cost;
      const certify::ConvexPoint pt = certify::from_policy(g, batch);
      const certify::ConvexFeasibility feas = certify::check_convex(pt, batch);
      worst_f = std::max(worst_f,
                         std::abs(certify::evaluate_f(pt, batch, q, r) - j) / (1.0 + j));
      worst_lmi = std::max(worst_lmi, -feas.lmi_min_eig);
      worst_rt = std::max(worst_rt, (certify::to_policy(pt) - g).norm());
    }
    add("parameterization_identity", worst_f <= 1e-8 && worst_lmi <= 1e-8 && worst_rt <= 1e-10,
        "max_f_err=" + fmt6(worst_f) + " min_lmi_eig=-" + fmt6(worst_lmi) +
            " max_roundtrip=" + fmt6(worst_rt) + " samples=20");
  }

  // -- strong convexity over the sublevel set --------------------------------
  {
    std::mt19937_64 rng(data::mix_seed(config.seed, 13));
    std::vector<certify::ConvexPoint> points;
    for (int i = 0; i < 20; ++i)
      points.push_back(certify::from_policy(pool[static_cast<std::size_t>(i)], batch));
    std::vector<certify::FeasibleDirection> dirs;
    for (int i = 0; i < 10; ++i) dirs.push_back(certify::random_feasible_direction(batch, rng));
    const certify::StrongConvexityEstimate est =
        certify::estimate_strong_convexity(points, dirs, batch, r);
    report.alpha_hat = est.alpha_hat;
    add("convexity_alpha", est.min_action >= -1e-10 && est.alpha_hat > 0.0,
        "alpha_hat=" + fmt6(est.alpha_hat) + " min_action=" + fmt6(est.min_action) +
            " samples=" + std::to_string(est.samples));
  }

  // -- gradient dominance along the run --------------------------------------
  {
    std::vector<Matrix> sample = pool;
    for (const Matrix& g : base.iterates) sample.push_back(g);
    const certify::DominanceEstimate est =
        certify::estimate_gradient_dominance(sample, batch, q, r, oracle.j_star);
    report.mu_hat = est.mu_hat;
    // Non-optimal iterates must satisfy J - J* <= mu_hat ||proj grad||^2.
    long checked = 0;
    bool ok = std::isfinite(est.mu_hat) && est.mu_hat > 0.0;
    for (const TraceRecord& rec : base.records) {
      if (rec.proj_grad_norm <= 1e-12) continue;
      ++checked;
      if (rec.cost_plain - oracle.j_star >
          est.mu_hat * rec.proj_grad_norm * rec.proj_grad_norm * (1.0 + 1e-12))
        ok = false;
    }
    add("dominance_mu", ok,
        "mu_hat=" + fmt6(est.mu_hat) + " iterates_checked=" + std::to_string(checked) +
            " samples=" + std::to_string(est.samples));
  }

  // -- Monte-Carlo smoothness bound ------------------------------------------
  {
    const double bound = smoothness_bound(j0, batch, q, r);
    std::mt19937_64 rng(data::mix_seed(config.seed, 14));
    double worst = 0.0;
    bool aux_ok = true;
    for (int i = 0; i < 100; ++i) {
      const Matrix& g = pool[static_cast<std::size_t>(i)];
      Matrix z = data::gaussian(batch.length(), n, rng);
      z /= z.norm();
      worst = std::max(worst, std::abs(hessian_quadratic_form(g, z, batch, plain)));
      const ClosedLoopEval eval = evaluate(g, batch, plain);
      const double slack = 1e-9 * (1.0 + eval.cost);
      if (eval.state_covariance.trace() > eval.cost / plain.sigma_min_q() + slack ||
          eval.value_matrix.max_eigenvalue() > eval.cost + slack)
        aux_ok = false;
    }
    add("smoothness_bound_mc", worst <= bound && aux_ok,
        "bound=" + fmt6(bound) + " max_observed=" + fmt6(worst) + " samples=100");
  }

  // -- implicit regularization ------------------------------------------------
  {
    const NullspaceAudit audit = implicit_regularization_audit(base, batch);
    std::mt19937_64 rng(data::mix_seed(config.seed, 15));
    double worst_id = 0.0;
    for (int i = 0; i < 50; ++i) {
      const Matrix& g = pool[static_cast<std::size_t>((i * 3) % pool.size())];
      const double grad_norm = gradient(g, batch, plain).norm();
      worst_id = std::max(worst_id, orthogonality_residual(g, batch, plain) / grad_norm);
    }
    // Nullspace component frozen from a perturbed start (lambda = 0).
    const Matrix g0p =
        g0 + 0.1 * (batch.pi_d_minus().mat() * data::gaussian(batch.length(), n, rng));
    OptimizerConfig short_cfg = base_cfg;
    short_cfg.max_iter = std::min<long>(base_cfg.max_iter, 300);
    const OptimizerTrace perturbed = run_optimizer(g0p, short_cfg, batch, plain);
    const Matrix frozen = batch.pi_d_minus().mat() * g0p;
    double drift = 0.0;
    for (const Matrix& g : perturbed.iterates)
      drift = std::max(drift, (batch.pi_d_minus().mat() * g - frozen).norm());
    const bool ok = audit.max_norm <= 1e-8 && worst_id <= 1e-9 && drift <= 1e-8;
    add("implicit_regularization", ok,
        "max_nullspace_norm=" + fmt6(audit.max_norm) + " max_identity_res=" + fmt6(worst_id) +
            " max_drift=" + fmt6(drift) + " identity_samples=50");
  }

  // -- solution-set flatness ----------------------------------------------
  {
    std::mt19937_64 rng(data::mix_seed(config.seed, 16));
    const std::vector<Matrix> probes = certify::solution_set_probe(oracle.g_star, batch, 10, rng);
    double worst_gain = 0.0, worst_cost = 0.0;
    for (const Matrix& g : probes) {
      worst_gain = std::max(worst_gain, (recover_gain(g, batch) - oracle.k_star).norm());
      worst_cost =
          std::max(worst_cost, std::abs(evaluate(g, batch, plain).cost - oracle.j_star));
    }
    const bool ok = worst_gain <= 1e-10 * (1.0 + oracle.k_star.norm()) &&
                    worst_cost <= 1e-8 * oracle.j_star;
    add("solution_set_flat", ok,
        "max_gain_dev=" + fmt6(worst_gain) + " max_cost_dev=" + fmt6(worst_cost) +
            " probes=10");
  }

  return report;
}

}  // namespace deepo::cli
