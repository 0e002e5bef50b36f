#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "deepo/data.hpp"
#include "test_support.hpp"

using namespace deepo;
using data::DataMatrices;
using data::SystemModel;
using data::Trajectory;
using linalg::Matrix;
using linalg::SymMatrix;
using linalg::Vector;

namespace {

std::filesystem::path temp_file(const char* name) {
  return std::filesystem::temp_directory_path() / name;
}

}  // namespace

TEST_CASE("simulate: single impulse and accumulation") {
  const SystemModel zero_a(Matrix::Zero(2, 2), Matrix::Identity(2, 2), SymMatrix::identity(2),
                           SymMatrix::identity(2));
  Matrix e1 = Matrix::Zero(2, 1);
  e1(0, 0) = 1.0;
  const Trajectory t1 = data::simulate(zero_a, e1, Vector::Zero(2));
  CHECK((t1.states.col(1) - e1.col(0)).norm() <= 1e-15);

  const SystemModel integrator(Matrix::Identity(2, 2), Matrix::Identity(2, 2),
                               SymMatrix::identity(2), SymMatrix::identity(2));
  Matrix u2(2, 2);
  u2 << 1, 1, 0, 0;
  const Trajectory t2 = data::simulate(integrator, u2, Vector::Zero(2));
  CHECK(t2.states(0, 2) == doctest::Approx(2.0));
  CHECK(t2.states(1, 2) == doctest::Approx(0.0));
}

TEST_CASE("simulate satisfies the recursion on the benchmark plant") {
  const SystemModel sys = data::benchmark_system();
  std::mt19937_64 rng(11);
  const Matrix inputs = data::gaussian(2, 25, rng);
  const Vector x0 = data::gaussian(4, 1, rng);
  const Trajectory traj = data::simulate(sys, inputs, x0);
  for (Eigen::Index t = 0; t < traj.length(); ++t) {
    const Vector expected = sys.a * traj.states.col(t) + sys.b * inputs.col(t);
    CHECK((traj.states.col(t + 1) - expected).norm() <= 1e-12);
  }
}

TEST_CASE("simulate dimension errors") {
  const SystemModel sys = data::benchmark_system();
  CHECK_THROWS_AS(data::simulate(sys, Matrix::Zero(3, 5), Vector::Zero(4)), DimensionError);
  CHECK_THROWS_AS(data::simulate(sys, Matrix::Zero(2, 5), Vector::Zero(3)), DimensionError);
}

TEST_CASE("assemble: dynamics consistency and rank certificate") {
  const auto setup = test_support::make_setup();
  const DataMatrices& batch = setup.batch;
  CHECK((batch.x_plus() - setup.system.a * batch.x_minus() -
         setup.system.b * batch.u_minus())
            .norm() <= 1e-12);
  CHECK(batch.sigma_min_d() > 1e-8);
  // rank(D_-) = m + n = 6 on Gaussian excitation.
  Eigen::JacobiSVD<Matrix> svd(batch.d_minus());
  CHECK((svd.singularValues().array() > 1e-8).count() == 6);

  // Projector orthogonality.
  CHECK((batch.x_minus() * batch.pi_x_minus().mat()).norm() <= 1e-10);
  CHECK((batch.d_minus() * batch.pi_d_minus().mat()).norm() <= 1e-10);
}

TEST_CASE("assemble rejects short trajectories") {
  const SystemModel sys = data::benchmark_system();
  std::mt19937_64 rng(12);
  const Matrix inputs = data::gaussian(2, 5, rng);  // m + n - 1 columns
  const Trajectory traj = data::simulate(sys, inputs, data::gaussian(4, 1, rng));
  CHECK_THROWS_AS(data::assemble(traj), InsufficientDataError);
}

TEST_CASE("assemble_from_experiments") {
  const SystemModel sys = data::benchmark_system();
  std::mt19937_64 rng(13);
  const Matrix u1 = data::gaussian(2, 5, rng);
  const Vector x01 = data::gaussian(4, 1, rng);
  const Matrix u2 = data::gaussian(2, 5, rng);
  const Vector x02 = data::gaussian(4, 1, rng);
  const Trajectory t1 = data::simulate(sys, u1, x01);
  const Trajectory t2 = data::simulate(sys, u2, x02);

  const DataMatrices combined = data::assemble_from_experiments({t1, t2});
  CHECK(combined.length() == 10);
  CHECK((combined.u_minus().leftCols(5) - u1).norm() <= 1e-15);
  CHECK((combined.u_minus().rightCols(5) - u2).norm() <= 1e-15);
  // Column-wise dynamics hold even though the batch is not one rollout.
  CHECK((combined.x_plus() - sys.a * combined.x_minus() - sys.b * combined.u_minus())
            .norm() <= 1e-12);

  // One trajectory reduces to assemble.
  std::mt19937_64 rng2(14);
  const Trajectory t3 = data::simulate(sys, data::gaussian(2, 10, rng2),
                                       data::gaussian(4, 1, rng2));
  const DataMatrices single = data::assemble_from_experiments({t3});
  const DataMatrices direct = data::assemble(t3);
  CHECK((single.d_minus() - direct.d_minus()).norm() == 0.0);

  CHECK_THROWS_AS(data::assemble_from_experiments({}), InsufficientDataError);
}

TEST_CASE("random_system: determinism, spectral radius, controllability") {
  const SystemModel s1 = data::random_system(4, 2, 0.8, 99);
  const SystemModel s2 = data::random_system(4, 2, 0.8, 99);
  CHECK((s1.a - s2.a).norm() == 0.0);
  CHECK((s1.b - s2.b).norm() == 0.0);
  CHECK(linalg::spectral_radius(s1.a) == doctest::Approx(0.8).epsilon(1e-12));

  const SystemModel s3 = data::random_system(6, 3, 1.2, 7);
  CHECK(linalg::spectral_radius(s3.a) == doctest::Approx(1.2).epsilon(1e-12));
  // Constructor already enforces controllability; re-check the rank directly.
  Matrix ctrb(6, 6 * 3);
  Matrix block = s3.b;
  for (int i = 0; i < 6; ++i) {
    ctrb.middleCols(i * 3, 3) = block;
    block = s3.a * block;
  }
  Eigen::JacobiSVD<Matrix> svd(ctrb);
  CHECK(svd.singularValues()(5) > 1e-8);
}

TEST_CASE("benchmark plant matches its published entries") {
  const SystemModel sys = data::benchmark_system();
  CHECK(sys.a(0, 0) == doctest::Approx(-0.137));
  CHECK(sys.a(3, 3) == doctest::Approx(-0.107));
  CHECK(sys.b(0, 0) == doctest::Approx(1.639));
  CHECK(sys.b(3, 1) == doctest::Approx(-0.111));
  CHECK(sys.state_dim() == 4);
  CHECK(sys.input_dim() == 2);
  // Open loop is stable; the entries as printed give rho(A) = 0.4634.
  CHECK(linalg::spectral_radius(sys.a) == doctest::Approx(0.46340306926).epsilon(1e-9));
  CHECK((sys.q.mat() - Matrix::Identity(4, 4)).norm() == 0.0);
  CHECK((sys.r.mat() - Matrix::Identity(2, 2)).norm() == 0.0);
}

TEST_CASE("system model validation") {
  const SystemModel sys = data::benchmark_system();
  // Q not positive definite.
  Matrix q = Matrix::Identity(4, 4);
  q(0, 0) = 0.0;
  CHECK_THROWS_AS(SystemModel(sys.a, sys.b, SymMatrix(q), sys.r), NotPsdError);
  // Uncontrollable pair: B = 0.
  CHECK_THROWS_AS(SystemModel(sys.a, Matrix::Zero(4, 2), sys.q, sys.r), RankDeficientError);
}

TEST_CASE("save/load round trip is bitwise") {
  const auto setup = test_support::make_setup();
  const auto path = temp_file("deepo_roundtrip.txt");
  data::save(setup.batch, path);
  const DataMatrices loaded = data::load(path);
  CHECK((loaded.u_minus() - setup.batch.u_minus()).norm() == 0.0);
  CHECK((loaded.x_minus() - setup.batch.x_minus()).norm() == 0.0);
  CHECK((loaded.x_plus() - setup.batch.x_plus()).norm() == 0.0);
  CHECK(loaded.sigma_min_d() == setup.batch.sigma_min_d());
  std::filesystem::remove(path);
}

TEST_CASE("load rejects malformed files") {
  const auto setup = test_support::make_setup();
  const auto path = temp_file("deepo_truncated.txt");
  data::save(setup.batch, path);
  // Truncate the file mid-matrix.
  {
    std::ifstream is(path);
    std::string all((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
    std::ofstream os(path);
    os << all.substr(0, all.size() / 2);
  }
  CHECK_THROWS_AS(data::load(path), ParseError);
  std::filesystem::remove(path);

  CHECK_THROWS_AS(data::load(temp_file("deepo_does_not_exist.txt")), IoError);
}

TEST_CASE("load re-runs the rank certificate") {
  const auto setup = test_support::make_setup();
  // Duplicate one column everywhere: D_- keeps T columns but drops rank.
  Matrix u = setup.batch.u_minus();
  Matrix xm = setup.batch.x_minus();
  Matrix xp = setup.batch.x_plus();
  for (Eigen::Index j = 1; j < u.cols(); ++j) {
    u.col(j) = u.col(0);
    xm.col(j) = xm.col(0);
    xp.col(j) = xp.col(0);
  }
  const auto path = temp_file("deepo_rank_deficient.txt");
  {
    std::ofstream os(path);
    os << "deepo-data v1\n";
    os << "n 4\nm 2\nT 10\nseed none\n";
    auto dump = [&os](const char* name, const Matrix& m) {
      os << name << "\n";
      for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) os << (j ? " " : "") << m(i, j);
        os << "\n";
      }
    };
    dump("U_minus", u);
    dump("X_minus", xm);
    dump("X_plus", xp);
  }
  CHECK_THROWS_AS(data::load(path), RankDeficientError);
  std::filesystem::remove(path);
}

TEST_CASE("square data batch has an empty D nullspace") {
  // T = m + n = 6: D_- is square, so Pi_{D_-} vanishes.
  const auto setup = test_support::make_setup(3, 6);
  CHECK(setup.batch.pi_d_minus().mat().norm() <= 1e-10);
}
