#include "deepo/data.hpp"

#include <Eigen/SVD>
#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

namespace deepo::data {

namespace {

constexpr int kMaxControllabilityRetries = 100;

bool is_controllable(const Matrix& a, const Matrix& b, double rank_tol_scale) {
  const Eigen::Index n = a.rows();
  const Eigen::Index m = b.cols();
  Matrix ctrb(n, n * m);
  Matrix block = b;
  for (Eigen::Index i = 0; i < n; ++i) {
    ctrb.middleCols(i * m, m) = block;
    block = a * block;
  }
  Eigen::JacobiSVD<Matrix> svd(ctrb);
  const double sigma_max = svd.singularValues()(0);
  return svd.singularValues()(n - 1) > rank_tol_scale * std::max(1.0, sigma_max);
}

}  // namespace

SystemModel::SystemModel(Matrix a_in, Matrix b_in, SymMatrix q_in, SymMatrix r_in)
    : a(std::move(a_in)), b(std::move(b_in)), q(std::move(q_in)), r(std::move(r_in)) {
  if (a.rows() != a.cols()) throw DimensionError("A must be square");
  if (b.rows() != a.rows()) throw DimensionError("B row count must match A");
  if (q.dim() != a.rows()) throw DimensionError("Q must be n-by-n");
  if (r.dim() != b.cols()) throw DimensionError("R must be m-by-m");
  const double q_min = q.min_eigenvalue();
  if (q_min <= 0.0) throw NotPsdError("Q must be positive definite", q_min);
  const double r_min = r.min_eigenvalue();
  if (r_min <= 0.0) throw NotPsdError("R must be positive definite", r_min);
  if (!is_controllable(a, b, linalg::kDefaultRankTolScale))
    throw RankDeficientError("(A, B) is not controllable", 0.0);
}

DataMatrices::DataMatrices(Matrix u_minus, Matrix x_minus, Matrix x_plus,
                           std::optional<std::uint64_t> seed)
    : u_minus_(std::move(u_minus)),
      x_minus_(std::move(x_minus)),
      x_plus_(std::move(x_plus)),
      pi_x_minus_(Matrix::Identity(1, 1), "placeholder"),
      pi_d_minus_(Matrix::Identity(1, 1), "placeholder"),
      seed_(seed) {
  const Eigen::Index t = u_minus_.cols();
  const Eigen::Index n = x_minus_.rows();
  const Eigen::Index m = u_minus_.rows();
  if (x_minus_.cols() != t || x_plus_.cols() != t)
    throw DimensionError("U_-, X_-, X_+ must have the same number of columns");
  if (x_plus_.rows() != n) throw DimensionError("X_+ row count must match X_-");
  if (t < m + n) {
    std::ostringstream os;
    os << "need at least m + n = " << m + n << " data columns, got " << t;
    throw InsufficientDataError(os.str(), t, m + n);
  }

  d_minus_.resize(m + n, t);
  d_minus_.topRows(m) = u_minus_;
  d_minus_.bottomRows(n) = x_minus_;

  Eigen::JacobiSVD<Matrix> svd(d_minus_);
  sigma_min_d_ = svd.singularValues()(m + n - 1);
  const double sigma_max = svd.singularValues()(0);
  if (sigma_min_d_ <= linalg::kDefaultRankTolScale * std::max(1.0, sigma_max)) {
    std::ostringstream os;
    os << "data not sufficiently exciting: sigma_min(D_-) = " << sigma_min_d_;
    throw RankDeficientError(os.str(), sigma_min_d_);
  }

  d_pinv_ = linalg::right_pseudoinverse(d_minus_);
  pi_x_minus_ = linalg::nullspace_projector(x_minus_, "X_-");
  pi_d_minus_ = linalg::nullspace_projector(d_minus_, "D_-");
}

Trajectory simulate(const SystemModel& system, const Matrix& inputs, const Vector& x0) {
  if (inputs.rows() != system.input_dim())
    throw DimensionError("input rows must match the plant input dimension");
  if (x0.size() != system.state_dim())
    throw DimensionError("x0 size must match the plant state dimension");
  if (inputs.cols() < 1) throw DimensionError("need at least one input column");

  const Eigen::Index t_len = inputs.cols();
  Matrix states(system.state_dim(), t_len + 1);
  states.col(0) = x0;
  for (Eigen::Index t = 0; t < t_len; ++t)
    states.col(t + 1) = system.a * states.col(t) + system.b * inputs.col(t);
  return Trajectory{std::move(states), inputs};
}

DataMatrices assemble(const Trajectory& trajectory) {
  const Eigen::Index t = trajectory.length();
  const Eigen::Index need = trajectory.state_dim() + trajectory.input_dim();
  if (t < need) {
    std::ostringstream os;
    os << "trajectory of length " << t << " cannot satisfy the rank condition (need " << need
       << ")";
    throw InsufficientDataError(os.str(), t, need);
  }
  return DataMatrices(trajectory.inputs, trajectory.states.leftCols(t),
                      trajectory.states.rightCols(t));
}

DataMatrices assemble_from_experiments(const std::vector<Trajectory>& trajectories) {
  if (trajectories.empty()) throw InsufficientDataError("no trajectories supplied", 0, 1);
  const Eigen::Index n = trajectories.front().state_dim();
  const Eigen::Index m = trajectories.front().input_dim();
  Eigen::Index total = 0;
  for (const Trajectory& tr : trajectories) {
    if (tr.state_dim() != n || tr.input_dim() != m)
      throw DimensionError("trajectories have inconsistent dimensions");
    total += tr.length();
  }
  if (total < m + n) {
    std::ostringstream os;
    os << "combined length " << total << " below m + n = " << m + n;
    throw InsufficientDataError(os.str(), total, m + n);
  }
  Matrix u(m, total), xm(n, total), xp(n, total);
  Eigen::Index at = 0;
  for (const Trajectory& tr : trajectories) {
    const Eigen::Index t = tr.length();
    u.middleCols(at, t) = tr.inputs;
    xm.middleCols(at, t) = tr.states.leftCols(t);
    xp.middleCols(at, t) = tr.states.rightCols(t);
    at += t;
  }
  return DataMatrices(std::move(u), std::move(xm), std::move(xp));
}

Matrix gaussian(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = normal(rng);
  return m;
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 finalizer over seed xor stream tag.
  std::uint64_t z = seed ^ (stream * 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

SystemModel random_system(int n, int m, double target_rho, std::uint64_t seed) {
  if (n < 1 || m < 1) throw ConfigError("state and input dimensions must be at least 1");
  if (target_rho <= 0.0) throw ConfigError("target spectral radius must be positive");

  std::mt19937_64 rng(seed);
  for (int attempt = 0; attempt < kMaxControllabilityRetries; ++attempt) {
    Matrix a = gaussian(n, n, rng);
    const Matrix b = gaussian(n, m, rng);
    const double rho = linalg::spectral_radius(a);
    if (rho < 1e-12) continue;
    a *= target_rho / rho;
    if (!is_controllable(a, b, linalg::kDefaultRankTolScale)) continue;
    return SystemModel(std::move(a), b, SymMatrix::identity(n), SymMatrix::identity(m));
  }
  throw GenerationError("could not draw a controllable (A, B) within the retry budget");
}

SystemModel benchmark_system() {
  Matrix a(4, 4);
  a << -0.137, 0.146, -0.297, 0.283,
        0.487, 0.095,  0.417, 0.301,
       -0.018, 0.049,  0.175, 0.435,
        0.143, 0.317, -0.293, -0.107;
  Matrix b(4, 2);
  b <<  1.639,  0.930,
        0.264,  1.793,
       -1.464, -1.183,
       -0.776, -0.111;
  return SystemModel(std::move(a), std::move(b), SymMatrix::identity(4),
                     SymMatrix::identity(2));
}

namespace {

void write_matrix(std::ostream& os, const char* name, const Matrix& m) {
  os << name << "\n";
  char buf[40];
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", m(i, j));
      os << (j ? " " : "") << buf;
    }
    os << "\n";
  }
}

std::string next_line(std::istream& is, const std::filesystem::path& path) {
  std::string line;
  if (!std::getline(is, line))
    throw ParseError("unexpected end of file in " + path.string());
  return line;
}

Matrix read_matrix(std::istream& is, const std::filesystem::path& path, const char* name,
                   Eigen::Index rows, Eigen::Index cols) {
  if (next_line(is, path) != name)
    throw ParseError("expected section '" + std::string(name) + "' in " + path.string());
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    std::istringstream row(next_line(is, path));
    for (Eigen::Index j = 0; j < cols; ++j) {
      if (!(row >> m(i, j)))
        throw ParseError("malformed row in section '" + std::string(name) + "' of " +
                         path.string());
    }
    double extra;
    if (row >> extra)
      throw ParseError("trailing values in section '" + std::string(name) + "' of " +
                       path.string());
  }
  return m;
}

long read_scalar_line(std::istream& is, const std::filesystem::path& path, const char* key) {
  std::istringstream line(next_line(is, path));
  std::string k;
  long v;
  if (!(line >> k >> v) || k != key)
    throw ParseError("expected '" + std::string(key) + " <value>' in " + path.string());
  return v;
}

}  // namespace

void save(const DataMatrices& data, const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  os << "deepo-data v1\n";
  os << "n " << data.state_dim() << "\n";
  os << "m " << data.input_dim() << "\n";
  os << "T " << data.length() << "\n";
  if (data.seed())
    os << "seed " << *data.seed() << "\n";
  else
    os << "seed none\n";
  write_matrix(os, "U_minus", data.u_minus());
  write_matrix(os, "X_minus", data.x_minus());
  write_matrix(os, "X_plus", data.x_plus());
  if (!os) throw IoError("write failed for " + path.string());
}

DataMatrices load(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open " + path.string());
  if (next_line(is, path) != "deepo-data v1")
    throw ParseError("not a deepo data file: " + path.string());
  const long n = read_scalar_line(is, path, "n");
  const long m = read_scalar_line(is, path, "m");
  const long t = read_scalar_line(is, path, "T");
  if (n < 1 || m < 1 || t < 1) throw ParseError("non-positive dimensions in " + path.string());

  std::optional<std::uint64_t> seed;
  {
    std::istringstream line(next_line(is, path));
    std::string key, value;
    if (!(line >> key >> value) || key != "seed")
      throw ParseError("expected 'seed <value>' in " + path.string());
    if (value != "none") {
      std::uint64_t s = 0;
      if (std::sscanf(value.c_str(), "%" SCNu64, &s) != 1)
        throw ParseError("malformed seed in " + path.string());
      seed = s;
    }
  }
  Matrix u = read_matrix(is, path, "U_minus", m, t);
  Matrix xm = read_matrix(is, path, "X_minus", n, t);
  Matrix xp = read_matrix(is, path, "X_plus", n, t);
  return DataMatrices(std::move(u), std::move(xm), std::move(xp), seed);
}

}  // namespace deepo::data
