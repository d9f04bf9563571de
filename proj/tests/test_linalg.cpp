#include <doctest.h>

#include <cmath>
#include <random>

#include <relunmd/linalg.hpp>

#include "support/example1.hpp"
#include "support/oracles.hpp"

using relunmd::Index;
using relunmd::Matrix;
using relunmd::SvdFactors;
using relunmd::SvdMethod;
using relunmd::SvdOptions;
using relunmd::Vector;

namespace {

Matrix random_matrix(Index rows, Index cols, unsigned long seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;
  Matrix m(rows, cols);
  for (Index j = 0; j < cols; ++j) {
    for (Index i = 0; i < rows; ++i) m(i, j) = gauss(rng);
  }
  return m;
}

double ridge_objective_right(const Matrix& w, const Matrix& u,
                             const Matrix& v, double lambda) {
  return 0.5 * (w - u * v).squaredNorm() + 0.5 * lambda * u.squaredNorm();
}

}  // namespace

TEST_SUITE_BEGIN("linalg");

TEST_CASE("truncated_svd of the identity has a unit spectrum") {
  const SvdFactors f = relunmd::truncated_svd(Matrix::Identity(3, 3), 2);
  REQUIRE(f.sigma.size() == 2);
  CHECK(f.sigma(0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(f.sigma(1) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("truncated_svd reconstructs the rank-2 example exactly") {
  const Matrix x = testsupport::example1_x();
  const SvdFactors f = relunmd::truncated_svd(x, 2);
  const Matrix rebuilt = f.u * f.sigma.asDiagonal() * f.vt;
  CHECK((x - rebuilt).norm() <= 1e-10 * x.norm());
}

TEST_CASE("truncated_svd spectrum matches the Gram-matrix oracle") {
  const Matrix m = random_matrix(8, 6, 101);
  const SvdFactors f = relunmd::truncated_svd(m, 3);
  const std::vector<double> eig = testsupport::oracle_gram_eigenvalues(m);
  for (int i = 0; i < 3; ++i) {
    CHECK(f.sigma(i) ==
          doctest::Approx(std::sqrt(std::max(0.0, eig[i]))).epsilon(1e-8));
  }
  SUBCASE("residual energy equals the truncated tail") {
    const Matrix rebuilt = f.u * f.sigma.asDiagonal() * f.vt;
    double tail = 0.0;
    for (size_t i = 3; i < eig.size(); ++i) tail += std::max(0.0, eig[i]);
    CHECK((m - rebuilt).squaredNorm() ==
          doctest::Approx(tail).epsilon(1e-8));
  }
}

TEST_CASE("truncated_svd factors are orthonormal") {
  const Matrix m = random_matrix(10, 7, 102);
  const SvdFactors f = relunmd::truncated_svd(m, 4);
  const Matrix utu = f.u.transpose() * f.u;
  const Matrix vvt = f.vt * f.vt.transpose();
  CHECK((utu - Matrix::Identity(4, 4)).norm() <= 1e-10);
  CHECK((vvt - Matrix::Identity(4, 4)).norm() <= 1e-10);
  CHECK(f.sigma(0) >= f.sigma(1));
  CHECK(f.sigma.minCoeff() >= 0.0);
}

TEST_CASE("truncated_svd sign convention pins the largest entry positive") {
  const Matrix m = random_matrix(9, 5, 103);
  const SvdFactors f = relunmd::truncated_svd(m, 5);
  for (Index j = 0; j < f.u.cols(); ++j) {
    Index argmax = 0;
    f.u.col(j).cwiseAbs().maxCoeff(&argmax);
    CHECK(f.u(argmax, j) > 0.0);
  }
  SUBCASE("magnitude tie goes to the lowest row") {
    Matrix ones(2, 2);
    ones << 1, 1, 1, 1;
    const SvdFactors g = relunmd::truncated_svd(ones, 1);
    CHECK(g.u(0, 0) > 0.0);
  }
}

TEST_CASE("truncated_svd is deterministic") {
  const Matrix m = random_matrix(12, 9, 104);
  const SvdFactors a = relunmd::truncated_svd(m, 4);
  const SvdFactors b = relunmd::truncated_svd(m, 4);
  CHECK(a.u == b.u);
  CHECK(a.vt == b.vt);
  CHECK(a.sigma == b.sigma);
}

TEST_CASE("randomized range finder agrees with the exact path on low rank") {
  // Exactly rank-5 input: the subspace iteration captures it completely.
  const Matrix m = random_matrix(60, 5, 105) * random_matrix(5, 50, 106);
  SvdOptions exact_opts;
  exact_opts.method = SvdMethod::exact;
  SvdOptions rand_opts;
  rand_opts.method = SvdMethod::randomized;
  rand_opts.seed = 7;
  const SvdFactors exact = relunmd::truncated_svd(m, 5, exact_opts);
  const SvdFactors randomized = relunmd::truncated_svd(m, 5, rand_opts);
  for (int i = 0; i < 5; ++i) {
    CHECK(randomized.sigma(i) ==
          doctest::Approx(exact.sigma(i)).epsilon(1e-8));
  }
  const Matrix rebuilt =
      randomized.u * randomized.sigma.asDiagonal() * randomized.vt;
  CHECK((m - rebuilt).norm() <= 1e-8 * m.norm());

  SUBCASE("same seed reproduces the factors bit for bit") {
    const SvdFactors again = relunmd::truncated_svd(m, 5, rand_opts);
    CHECK(again.u == randomized.u);
    CHECK(again.sigma == randomized.sigma);
    CHECK(again.vt == randomized.vt);
  }
}

TEST_CASE("truncated_svd rejects an out-of-range rank") {
  const Matrix m = random_matrix(4, 3, 107);
  CHECK_THROWS_AS(relunmd::truncated_svd(m, 4), relunmd::InvalidArgument);
  CHECK_THROWS_AS(relunmd::truncated_svd(m, 0), relunmd::InvalidArgument);
}

TEST_CASE("ridge_solve_right solves the hand-checked normal equations") {
  Matrix w(2, 2);
  w << 1, 0, 0, 1;
  Matrix v(1, 2);
  v << 1, 1;
  const Matrix u = relunmd::ridge_solve_right(w, v, 1.0);
  REQUIRE(u.rows() == 2);
  REQUIRE(u.cols() == 1);
  CHECK(u(0, 0) == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
  CHECK(u(1, 0) == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
}

TEST_CASE("ridge_solve_right recovers an exact factor at lambda zero") {
  const Matrix u0 = random_matrix(6, 2, 108);
  const Matrix v = random_matrix(2, 5, 109);
  const Matrix u = relunmd::ridge_solve_right(u0 * v, v, 0.0);
  CHECK((u - u0).norm() <= 1e-10 * (u0.norm() + 1.0));
}

TEST_CASE("ridge_solve_right matches the elimination oracle") {
  const Matrix w = random_matrix(6, 4, 110);
  const Matrix v = random_matrix(2, 4, 111);
  const double lambda = 1e-4;
  const Matrix got = relunmd::ridge_solve_right(w, v, lambda);
  const Matrix want = testsupport::oracle_ridge_right(w, v, lambda);
  CHECK((got - want).norm() <= 1e-9 * (want.norm() + 1.0));
  SUBCASE("stationarity bound") {
    const Matrix grad = (got * v - w) * v.transpose() + lambda * got;
    CHECK(grad.norm() <= 1e-10 * (w.norm() * v.norm() + 1.0));
  }
  SUBCASE("probing in random directions never improves the objective") {
    std::mt19937_64 rng(112);
    std::normal_distribution<double> gauss;
    const double at_solution = ridge_objective_right(w, got, v, lambda);
    for (int trial = 0; trial < 20; ++trial) {
      Matrix dir(got.rows(), got.cols());
      for (Index j = 0; j < dir.cols(); ++j) {
        for (Index i = 0; i < dir.rows(); ++i) dir(i, j) = gauss(rng);
      }
      dir /= dir.norm();
      const double moved =
          ridge_objective_right(w, got + 1e-3 * dir, v, lambda);
      CHECK(moved >= at_solution);
    }
  }
}

TEST_CASE("ridge_solve_left mirrors ridge_solve_right under transposition") {
  const Matrix w = random_matrix(5, 3, 113);
  const Matrix u = random_matrix(5, 2, 114);
  const double lambda = 0.5;
  const Matrix left = relunmd::ridge_solve_left(w, u, lambda);
  const Matrix right =
      relunmd::ridge_solve_right(w.transpose(), u.transpose(), lambda)
          .transpose();
  CHECK((left - right).norm() <= 1e-12 * (left.norm() + 1.0));
}

TEST_CASE("ridge_solve_left recovers an exact factor at lambda zero") {
  const Matrix u = random_matrix(7, 3, 115);
  const Matrix v0 = random_matrix(3, 4, 116);
  const Matrix v = relunmd::ridge_solve_left(u * v0, u, 0.0);
  CHECK((v - v0).norm() <= 1e-10 * (v0.norm() + 1.0));
}

TEST_CASE("ridge_solve_left satisfies its gradient bound") {
  const Matrix w = random_matrix(5, 6, 117);
  const Matrix u = random_matrix(5, 2, 118);
  const double lambda = 0.5;
  const Matrix v = relunmd::ridge_solve_left(w, u, lambda);
  const Matrix grad = u.transpose() * (u * v - w) + lambda * v;
  CHECK(grad.norm() <= 1e-10 * (w.norm() * u.norm() + 1.0));
}

TEST_CASE("rank deficiency at lambda zero is reported, not patched") {
  Matrix w(2, 2);
  w << 1, 2, 3, 4;
  Matrix v(2, 2);
  v << 1, 1, 1, 1;  // rank 1, so the Gram matrix is singular
  CHECK_THROWS_WITH_AS(relunmd::ridge_solve_right(w, v, 0.0),
                       doctest::Contains("rank"),
                       relunmd::RankDeficiencyError);
}

TEST_CASE("ridge solves validate their inputs") {
  const Matrix w = random_matrix(3, 4, 119);
  const Matrix v = random_matrix(2, 5, 120);
  CHECK_THROWS_AS(relunmd::ridge_solve_right(w, v, 1e-4),
                  relunmd::DimensionError);
  CHECK_THROWS_AS(relunmd::ridge_solve_right(w, random_matrix(2, 4, 121), -1.0),
                  relunmd::InvalidArgument);
}

TEST_SUITE_END();
