#include <cmath>

#include "doctest.h"

#include "besa/error.hpp"
#include "besa/optimizer.hpp"
#include "test_utils.hpp"

using namespace besa;

TEST_CASE("quadratic objective reaches the direct-solve minimizer") {
  auto rng = testutil::make_rng(80);
  const int n = 20;
  Eigen::MatrixXd a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = testutil::nrand(rng);
  const Eigen::MatrixXd q =
      a.transpose() * a + Eigen::MatrixXd::Identity(n, n);
  // Keep the optimal value tiny so double rounding in the objective does
  // not cap the attainable accuracy.
  Eigen::VectorXd c(n);
  for (int i = 0; i < n; ++i) c(i) = 1e-4 * testutil::nrand(rng);
  const Eigen::VectorXd b = q * c;

  std::vector<double> accepted;
  MinimizeOptions opts;
  opts.grad_tol = 1e-9;
  opts.on_iterate = [&](int, double value, double) {
    accepted.push_back(value);
  };
  const auto res = minimize(
      [&](const Eigen::VectorXd& x, Eigen::VectorXd& grad) {
        grad = q * x - b;
        return 0.5 * x.dot(q * x) - b.dot(x);
      },
      Eigen::VectorXd::Zero(n), opts);

  const Eigen::VectorXd want = q.ldlt().solve(b);
  CHECK((res.x - want).norm() < 1e-8);
  CHECK(res.report.converged);
  for (size_t i = 1; i < accepted.size(); ++i)
    CHECK(accepted[i] <= accepted[i - 1]);
}

TEST_CASE("a stationary starting point returns immediately") {
  const auto res = minimize(
      [](const Eigen::VectorXd& x, Eigen::VectorXd& grad) {
        grad = Eigen::VectorXd::Zero(x.size());
        return 3.0;
      },
      Eigen::VectorXd::Constant(5, 1.5));
  CHECK(res.report.iterations == 0);
  CHECK(res.report.converged);
  CHECK((res.x - Eigen::VectorXd::Constant(5, 1.5)).norm() == 0.0);
}

TEST_CASE("rosenbrock is minimized from the classic start") {
  MinimizeOptions opts;
  opts.max_iterations = 2000;
  opts.grad_tol = 1e-10;
  Eigen::VectorXd x0(2);
  x0 << -1.2, 1.0;
  const auto res = minimize(
      [](const Eigen::VectorXd& x, Eigen::VectorXd& grad) {
        const double t1 = x(1) - x(0) * x(0);
        const double t2 = 1.0 - x(0);
        grad.resize(2);
        grad(0) = -400.0 * t1 * x(0) - 2.0 * t2;
        grad(1) = 200.0 * t1;
        return 100.0 * t1 * t1 + t2 * t2;
      },
      x0, opts);
  CHECK(std::abs(res.x(0) - 1.0) < 1e-6);
  CHECK(std::abs(res.x(1) - 1.0) < 1e-6);
  CHECK(res.report.converged);
}

TEST_CASE("non-finite starting values are rejected") {
  CHECK_THROWS_AS(minimize(
                      [](const Eigen::VectorXd& x, Eigen::VectorXd& grad) {
                        grad = Eigen::VectorXd::Zero(x.size());
                        return std::numeric_limits<double>::quiet_NaN();
                      },
                      Eigen::VectorXd::Zero(3)),
                  Error);
  CHECK_THROWS_AS(minimize(
                      [](const Eigen::VectorXd& x, Eigen::VectorXd& grad) {
                        grad = Eigen::VectorXd::Constant(
                            x.size(), std::numeric_limits<double>::infinity());
                        return 1.0;
                      },
                      Eigen::VectorXd::Zero(3)),
                  Error);
}

TEST_CASE("an unbounded descent direction reports line-search failure") {
  const auto res = minimize(
      [](const Eigen::VectorXd& x, Eigen::VectorXd& grad) {
        grad = -Eigen::VectorXd::Ones(x.size());
        return -x.sum();
      },
      Eigen::VectorXd::Zero(4));
  CHECK(res.report.line_search_failed);
  CHECK_FALSE(res.report.converged);
  CHECK_FALSE(res.report.note.empty());
}

TEST_CASE("invalid options are rejected") {
  const Objective obj = [](const Eigen::VectorXd& x, Eigen::VectorXd& grad) {
    grad = x;
    return 0.5 * x.squaredNorm();
  };
  MinimizeOptions bad;
  bad.grad_tol = 0.0;
  CHECK_THROWS_AS(minimize(obj, Eigen::VectorXd::Zero(2), bad), Error);
}
