#include <doctest.h>

#include <algorithm>
#include <numeric>

#include "arrayext/sparse_coding.hpp"
#include "../support/oracles.hpp"

using namespace arrayext;

namespace {

RealMatrix unit_columns(RealMatrix m) {
  for (Eigen::Index j = 0; j < m.cols(); ++j) m.col(j).normalize();
  return m;
}

}  // namespace

TEST_CASE("lambda above twice the largest correlation gives the zero code") {
  std::mt19937_64 rng(1);
  const RealMatrix d = unit_columns(oracle::gaussian(10, 20, rng));
  const RealMatrix y = oracle::gaussian(10, 3, rng);
  for (Eigen::Index c = 0; c < y.cols(); ++c) {
    const double lam = 2.0 * (d.transpose() * y.col(c)).cwiseAbs().maxCoeff();
    const SparseCodeMatrix w = LassoSolver(d).solve(y.col(c), LassoOptions{lam * 1.0000001, 1e-12, 1000});
    CHECK(w.codes.isZero(0.0));
  }
}

TEST_CASE("identity dictionary soft-thresholds at lambda / 2") {
  const RealMatrix y = (RealMatrix(4, 1) << 0.3, -0.05, 1.0, -2.0).finished();
  const SparseCodeMatrix w = lasso(Dictionary(RealMatrix::Identity(4, 4)), y, 0.2, 1e-14, 100);
  const RealVector expect = (RealVector(4) << 0.2, 0.0, 0.9, -1.9).finished();
  CHECK((w.codes.col(0) - expect).norm() < 1e-12);
}

TEST_CASE("LASSO matches the exhaustive small-support oracle") {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> pick(0, 15);
  std::normal_distribution<double> coef(0.0, 1.0);
  int compared = 0;
  for (int i = 0; i < 60 && compared < 25; ++i) {
    const RealMatrix d = unit_columns(oracle::gaussian(8, 16, rng));
    RealVector w_true = RealVector::Zero(16);
    w_true(pick(rng)) = 1.0 + std::abs(coef(rng));
    w_true(pick(rng)) = -(1.0 + std::abs(coef(rng)));
    const RealVector y = d * w_true + 0.01 * oracle::gaussian(8, 1, rng).col(0);
    const double lam = 0.2;
    const RealVector ref = oracle::exhaustive_lasso(d, y, lam, 2);
    // The oracle is only the global minimizer when it satisfies the optimality conditions.
    if (oracle::kkt_residual(d, y, ref, lam) > 1e-9) continue;
    ++compared;
    const SparseCodeMatrix w = LassoSolver(d).solve(y, LassoOptions{lam, 1e-15, 10000});
    CHECK((w.codes.col(0) - ref).norm() < 1e-6);
  }
  CHECK(compared >= 10);
}

TEST_CASE("LASSO solutions satisfy the optimality conditions") {
  std::mt19937_64 rng(8);
  for (int i = 0; i < 40; ++i) {
    RealMatrix d = oracle::gaussian(12, 30, rng);
    d.col(3).setZero();  // zero atoms must stay unused
    const RealMatrix y = oracle::gaussian(12, 2, rng);
    const double lam = 0.05 * (1 + i % 5);
    const SparseCodeMatrix w = LassoSolver(d).solve(y, LassoOptions{lam, 1e-13, 100000});
    CHECK(w.converged);
    for (Eigen::Index c = 0; c < 2; ++c) CHECK(oracle::kkt_residual(d, y.col(c), w.codes.col(c), lam) < 1e-6);
    CHECK(w.codes.row(3).isZero(0.0));
  }
}

TEST_CASE("LASSO objective never exceeds that of the zero code") {
  std::mt19937_64 rng(9);
  const RealMatrix d = unit_columns(oracle::gaussian(20, 40, rng));
  const RealMatrix y = oracle::gaussian(20, 10, rng);
  const SparseCodeMatrix w = lasso(Dictionary(d), y, 0.1, 1e-10, 1000);
  CHECK(lasso_objective(d, y, w.codes, 0.1) <= y.squaredNorm());
}

TEST_CASE("atom permutation permutes the code") {
  std::mt19937_64 rng(10);
  const RealMatrix d = unit_columns(oracle::gaussian(10, 25, rng));
  const RealMatrix y = oracle::gaussian(10, 4, rng);
  std::vector<Eigen::Index> perm(25);
  std::iota(perm.begin(), perm.end(), Eigen::Index{0});
  std::shuffle(perm.begin(), perm.end(), rng);
  RealMatrix dp(10, 25);
  for (Eigen::Index j = 0; j < 25; ++j) dp.col(j) = d.col(perm[static_cast<std::size_t>(j)]);
  const RealMatrix w = LassoSolver(d).solve(y, LassoOptions{0.05, 1e-15, 100000}).codes;
  const RealMatrix wp = LassoSolver(dp).solve(y, LassoOptions{0.05, 1e-15, 100000}).codes;
  for (Eigen::Index j = 0; j < 25; ++j) CHECK((wp.row(j) - w.row(perm[static_cast<std::size_t>(j)])).norm() < 1e-6);
}

TEST_CASE("l1 norm of the code shrinks as lambda grows") {
  std::mt19937_64 rng(11);
  const RealMatrix d = unit_columns(oracle::gaussian(15, 30, rng));
  const RealMatrix y = oracle::gaussian(15, 1, rng);
  double prev = std::numeric_limits<double>::infinity();
  for (double lam : {0.001, 0.01, 0.05, 0.1, 0.3, 1.0, 3.0}) {
    const double l1 = LassoSolver(d).solve(y, LassoOptions{lam, 1e-13, 100000}).codes.cwiseAbs().sum();
    CHECK(l1 <= prev + 1e-9);
    prev = l1;
  }
}

TEST_CASE("warm start converges to the same code") {
  std::mt19937_64 rng(12);
  const RealMatrix d = unit_columns(oracle::gaussian(12, 24, rng));
  const RealMatrix y = oracle::gaussian(12, 5, rng);
  const LassoSolver solver(d);
  const LassoOptions opts{0.02, 1e-15, 100000};
  const RealMatrix cold = solver.solve(y, opts).codes;
  const RealMatrix start = oracle::gaussian(24, 5, rng);
  const RealMatrix warm = solver.solve(y, opts, &start).codes;
  CHECK((cold - warm).norm() < 1e-6);
}

TEST_CASE("LASSO rejects inconsistent input") {
  const RealMatrix d = RealMatrix::Identity(3, 3);
  CHECK_THROWS_AS((void)LassoSolver(d).solve(RealMatrix::Ones(4, 1), LassoOptions{}), ShapeError);
  CHECK_THROWS_AS((void)LassoSolver(d).solve(RealMatrix::Ones(3, 1), LassoOptions{0.0, 1e-8, 10}), std::invalid_argument);
  const RealMatrix bad_warm = RealMatrix::Zero(2, 1);
  CHECK_THROWS_AS((void)LassoSolver(d).solve(RealMatrix::Ones(3, 1), LassoOptions{}, &bad_warm), ShapeError);
  CHECK_THROWS_AS(Dictionary(RealMatrix::Ones(3, 2)), std::invalid_argument);
  CHECK_THROWS_AS(Dictionary::normalized(RealMatrix::Zero(3, 2)), DegenerateInputError);
}

TEST_CASE("reconstruction error") {
  const RealMatrix d = RealMatrix::Identity(2, 2);
  const RealMatrix y = (RealMatrix(2, 2) << 1, 2, 3, 4).finished();
  CHECK(reconstruction_error(d, y, y) == 0.0);
  CHECK(reconstruction_error(d, RealMatrix::Zero(2, 2), y) == doctest::Approx(30.0));
  CHECK_THROWS_AS(reconstruction_error(d, RealMatrix::Zero(3, 2), y), ShapeError);
}

TEST_CASE("online dictionary learning recovers a generating dictionary's span") {
  std::mt19937_64 rng(21);
  const RealMatrix gen = unit_columns(oracle::gaussian(20, 50, rng));
  std::uniform_int_distribution<int> pick(0, 49);
  std::normal_distribution<double> coef(0.0, 1.0);
  RealMatrix y(20, 2000);
  for (Eigen::Index c = 0; c < y.cols(); ++c) {
    RealVector w = RealVector::Zero(50);
    for (int s = 0; s < 3; ++s) w(pick(rng)) = coef(rng);
    y.col(c) = gen * w;
  }
  OdlOptions opts;
  opts.n_atoms = 50;
  opts.lambda = 0.01;
  opts.n_iters = 100;
  opts.batch_size = 128;
  opts.seed = 5;
  const OdlResult r = odl_train(y, opts);
  const SparseCodeMatrix w = LassoSolver(r.dict.atoms()).solve(y, LassoOptions{0.01, 1e-8, 1000});
  double mean_rel = 0.0;
  for (Eigen::Index c = 0; c < y.cols(); ++c) {
    mean_rel += (y.col(c) - r.dict.atoms() * w.codes.col(c)).norm() / y.col(c).norm();
  }
  mean_rel /= static_cast<double>(y.cols());
  CHECK(mean_rel <= 0.05);
}

TEST_CASE("online dictionary learning invariants") {
  std::mt19937_64 rng(22);
  const RealMatrix y = oracle::gaussian(12, 400, rng);
  OdlOptions opts;
  opts.n_atoms = 30;
  opts.lambda = 0.05;
  opts.n_iters = 25;
  opts.batch_size = 32;
  opts.seed = 3;

  SUBCASE("zero iterations return the initial dictionary") {
    opts.n_iters = 0;
    const OdlResult r = odl_train(y, opts);
    CHECK(r.dict.atoms() == odl_initial_dictionary(y, 30, 3).atoms());
    CHECK(r.log.empty());
  }
  SUBCASE("deterministic under a fixed seed") {
    CHECK(odl_train(y, opts).dict.atoms() == odl_train(y, opts).dict.atoms());
  }
  SUBCASE("atoms stay unit norm and every update lowers the surrogate") {
    const OdlResult r = odl_train(y, opts);
    for (Eigen::Index j = 0; j < r.dict.atoms().cols(); ++j) CHECK(std::abs(r.dict.atoms().col(j).norm() - 1.0) < 1e-12);
    REQUIRE(r.log.size() == 25);
    for (const auto& e : r.log) {
      if (e.replaced_atoms == 0) CHECK(e.surrogate_after <= e.surrogate_before + 1e-9);
    }
  }
  SUBCASE("batch larger than the sample count is clamped") {
    opts.batch_size = 10000;
    opts.n_iters = 2;
    CHECK(odl_train(y, opts).log.size() == 2);
  }
}

TEST_CASE("initial dictionary draws distinct nonzero samples") {
  RealMatrix y = RealMatrix::Zero(3, 5);
  y(0, 1) = 2.0;
  y(1, 3) = -1.0;
  const Dictionary d = odl_initial_dictionary(y, 4, 1);
  CHECK(d.atoms().cols() == 4);
  for (Eigen::Index j = 0; j < 4; ++j) CHECK(std::abs(d.atoms().col(j).norm() - 1.0) < 1e-12);
  CHECK_THROWS_AS(odl_initial_dictionary(RealMatrix::Zero(3, 5), 4, 1), DegenerateInputError);
  CHECK_THROWS_AS(odl_train(RealMatrix::Zero(3, 5), OdlOptions{}), DegenerateInputError);
}
