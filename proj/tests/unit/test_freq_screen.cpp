#include <algorithm>
#include <cmath>

#include "argoskit/freq_screen.hpp"
#include "argoskit/ode_bench.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace argoskit;

namespace {

struct Problem {
  CandidateLibrary lib;
  Vector y;
};

Problem linear_problem(int n, int m, std::uint64_t seed, const Vector& beta, double noise) {
  std::mt19937_64 rng(seed);
  Matrix X = testutil::gaussian_matrix(n, m, rng);
  X.col(0) += 0.5 * X.col(m - 1);  // some correlation
  Problem p{build_library(X, 1, false), Vector()};
  p.y = 1.5 + (X * beta).array();
  p.y += noise * testutil::gaussian_vector(n, rng);
  return p;
}

// Intercept profiled out: the best intercept for fixed slopes is mean(y - X b).
double profiled_objective(const Problem& p, const Vector& w, double lambda, double b1, double b2) {
  Vector coeffs(3);
  coeffs << 0.0, b1, b2;
  coeffs(0) = (p.y - p.lib.theta * coeffs).mean();
  return lasso_objective(p.lib, p.y, w, lambda, coeffs);
}

Vector ols_normal_equations(const Matrix& A, const Vector& y) {
  return (A.transpose() * A).llt().solve(A.transpose() * y);
}

}  // namespace

TEST_SUITE("freq_screen") {

TEST_CASE("cv folds are contiguous, balanced and seed dependent") {
  const auto f = cv_folds(103, 10, 42);
  std::vector<int> counts(10, 0);
  int changes = 0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    counts[static_cast<std::size_t>(f[i])]++;
    if (i > 0 && f[i] != f[i - 1]) ++changes;
  }
  for (int c : counts) CHECK((c == 10 || c == 11));
  CHECK(changes <= 10);  // one wrap-around boundary at most
  CHECK(cv_folds(103, 10, 42) == f);
  CHECK(cv_folds(103, 10, 43) != f);
  CHECK_THROWS(cv_folds(5, 10, 1));
}

TEST_CASE("p=2 lasso matches a brute-force grid minimum") {
  Vector beta(2);
  beta << 0.8, -0.05;
  const Problem p = linear_problem(200, 2, 1, beta, 0.3);
  Vector w(3);
  w << 0.0, 1.0, 2.0;
  for (double lambda : {0.01, 0.05, 0.2}) {
    CAPTURE(lambda);
    ScreenOptions tight;
    tight.tolerance = 1e-14;
    const Vector fit = lasso_fit(p.lib, p.y, w, lambda, tight);
    const double obj = lasso_objective(p.lib, p.y, w, lambda, fit);
    double best = kInfinity, best1 = 0, best2 = 0;
    const int steps = 400;
    for (int i = 0; i <= steps; ++i) {
      for (int j = 0; j <= steps; ++j) {
        const double b1 = -0.5 + 2.0 * i / steps;
        const double b2 = -0.5 + 1.0 * j / steps;
        const double v = profiled_objective(p, w, lambda, b1, b2);
        if (v < best) best = v, best1 = b1, best2 = b2;
      }
    }
    CHECK(obj <= best + 1e-12);
    CHECK(std::abs(fit(1) - best1) <= 0.005 + 1e-12);
    CHECK(std::abs(fit(2) - best2) <= 0.0025 + 1e-12);
  }
}

TEST_CASE("lambda = 0 reproduces OLS from the normal equations") {
  Vector beta(3);
  beta << 1.0, -2.0, 0.5;
  const Problem p = linear_problem(150, 3, 2, beta, 0.1);
  ScreenOptions tight;
  tight.tolerance = 1e-16;
  const Vector fit = lasso_fit(p.lib, p.y, Vector::Ones(4), 0.0, tight);
  const Vector ols = ols_normal_equations(p.lib.theta, p.y);
  CHECK(testutil::max_rel_err(fit, ols) < 1e-6);
  CHECK(testutil::max_rel_err(ridge_fit(p.lib, p.y, 0.0), ols) < 1e-9);
}

TEST_CASE("KKT conditions hold at the adaptive-lasso solution") {
  Vector beta(4);
  beta << 2.0, 0.0, -1.0, 0.01;
  const Problem p = linear_problem(300, 4, 3, beta, 0.5);
  const Vector w = adaptive_weights(p.lib, ridge_pilot(p.lib, p.y, 1));
  const double lmax = lambda_max(p.lib, p.y, w);
  ScreenOptions tight;
  tight.tolerance = 1e-14;
  for (double frac : {0.5, 0.1, 0.01}) {
    CAPTURE(frac);
    const double lambda = frac * lmax;
    const Vector b = lasso_fit(p.lib, p.y, w, lambda, tight);
    const Vector r = p.y - p.lib.theta * b;
    CHECK(std::abs(r.mean()) < 1e-10);
    const double n = static_cast<double>(p.y.size());
    const double ysd = sample_sd(p.y);
    for (Eigen::Index k = 1; k < p.lib.size(); ++k) {
      // Gradient in standardised units so the residual is scale free.
      const double s = p.lib.scales(k);
      const double g = p.lib.theta.col(k).dot(r) / n * s;
      const double pen = lambda * w(k) * s;
      const double viol = b(k) != 0.0 ? std::abs(g - pen * (b(k) > 0 ? 1.0 : -1.0))
                                      : std::max(0.0, std::abs(g) - pen);
      CHECK(viol / ysd < 1e-5);
    }
  }
}

TEST_CASE("lambda_max zeroes every penalised coefficient") {
  Vector beta(3);
  beta << 1.0, 0.5, -0.3;
  const Problem p = linear_problem(120, 3, 4, beta, 0.2);
  const Vector w = adaptive_weights(p.lib, ridge_fit(p.lib, p.y, 1e-3));
  const double lmax = lambda_max(p.lib, p.y, w);
  const Vector at = lasso_fit(p.lib, p.y, w, lmax * (1.0 + 1e-9));
  CHECK(at.tail(3).cwiseAbs().maxCoeff() == 0.0);
  CHECK(at(0) == doctest::Approx(p.y.mean()));
  const Vector below = lasso_fit(p.lib, p.y, w, 0.9 * lmax);
  CHECK(below.tail(3).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("objective at the solution beats OLS and the all-zero point") {
  Vector beta(3);
  beta << 1.0, 0.0, -0.7;
  const Problem p = linear_problem(200, 3, 5, beta, 0.4);
  const Vector w = adaptive_weights(p.lib, ridge_pilot(p.lib, p.y, 7));
  const double lambda = 0.2 * lambda_max(p.lib, p.y, w);
  const Vector b = lasso_fit(p.lib, p.y, w, lambda);
  const double obj = lasso_objective(p.lib, p.y, w, lambda, b);
  Vector zero = Vector::Zero(4);
  zero(0) = p.y.mean();
  CHECK(obj <= lasso_objective(p.lib, p.y, w, lambda, ols_normal_equations(p.lib.theta, p.y)));
  CHECK(obj <= lasso_objective(p.lib, p.y, w, lambda, zero));
}

TEST_CASE("adaptive weights") {
  std::mt19937_64 rng(6);
  const auto lib = build_library(testutil::gaussian_matrix(10, 2, rng), 1, false);
  Vector pilot(3);
  pilot << 5.0, -0.25, 0.0;
  const Vector w = adaptive_weights(lib, pilot);
  CHECK(w(0) == 0.0);
  CHECK(w(1) == doctest::Approx(4.0));
  CHECK(std::isinf(w(2)));
  // Infinite weights drop the column from the fit.
  const Vector y = lib.theta.col(2) * 3.0;
  CHECK(lasso_fit(lib, y, w, 0.0)(2) == 0.0);
}

TEST_CASE("BIC monotonicity") {
  for (Eigen::Index k = 0; k < 10; ++k) CHECK(bic(5.0, 100, k + 1) > bic(5.0, 100, k));
  CHECK(bic(5.0, 100, 3) < bic(6.0, 100, 3));
  CHECK(bic(1.0, 100, 2) == doctest::Approx(100.0 * std::log(0.01) + 2.0 * std::log(100.0)));
  CHECK(std::isfinite(bic(0.0, 100, 2)));
  const auto& g = threshold_grid();
  REQUIRE(g.size() == 10);
  CHECK(g.front() == doctest::Approx(1e-8));
  CHECK(g.back() == doctest::Approx(10.0));
}

TEST_CASE("OLS refit flags dependent columns") {
  std::mt19937_64 rng(8);
  Matrix X = testutil::gaussian_matrix(50, 3, rng);
  X.col(2) = 2.0 * X.col(0);
  const auto lib = build_library(X, 1, false);
  const Vector y = lib.theta.col(1) + lib.theta.col(2);
  const SparseFit fit = ols_refit(lib, y, {1, 2, 3});
  CHECK(fit.rank_deficient);
  CHECK(fit.rss < 1e-20);
  const SparseFit empty = ols_refit(lib, y, {});
  CHECK(empty.rss == doctest::Approx(y.squaredNorm()));
}

TEST_CASE("threshold sweep recovers an exact sparse support") {
  Vector beta(4);
  beta << 2.0, 0.0, -1.0, 0.0;
  const Problem p = linear_problem(400, 4, 9, beta, 0.05);
  Vector noisy_coeffs(5);
  noisy_coeffs << 1.5, 2.0, 1e-6, -1.0, 3e-5;
  const SparseFit best = threshold_sweep(p.lib, p.y, noisy_coeffs);
  CHECK(best.support == std::vector<Eigen::Index>{0, 1, 3});
  const auto candidates = threshold_candidates(p.lib, p.y, noisy_coeffs);
  for (const auto& c : candidates) CHECK(best.bic <= c.bic);
  CHECK(best.dense(5)(2) == 0.0);
}

TEST_CASE("screen recovers the Lorenz support from clean derivatives") {
  const auto sys = builtin_system("lorenz");
  const Trajectory t = simulate(sys, sample_initial_condition(sys, 12), 0.001, 2000);
  Matrix dx(t.size(), 3);
  for (Eigen::Index i = 0; i < t.size(); ++i) {
    dx.row(i) = sys.evaluate(t.states.row(i).transpose()).transpose();
  }
  std::mt19937_64 rng(13);
  const auto lib = build_library(t.states, 3, false);
  for (int j = 0; j < 3; ++j) {
    CAPTURE(j);
    const Vector y = dx.col(j) + 0.01 * testutil::gaussian_vector(t.size(), rng);
    const ScreenResult r = screen(lib, t.states, y, 21);
    std::vector<std::string> got;
    for (const auto& term : r.support) got.push_back(term.name());
    std::vector<std::string> want;
    for (const auto& term : sys.truth[static_cast<std::size_t>(j)]) want.push_back(term.name());
    std::sort(got.begin(), got.end());
    std::sort(want.begin(), want.end());
    CHECK(got == want);
    CHECK(r.trimmed.size() == static_cast<Eigen::Index>(want.size()));
  }
}

}  // TEST_SUITE
