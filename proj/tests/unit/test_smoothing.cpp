#include <cmath>

#include "argoskit/smoothing.hpp"
#include "doctest.h"

using namespace argoskit;

TEST_SUITE("smoothing") {

TEST_CASE("polynomials up to the filter order are reproduced exactly") {
  const double dt = 0.01;
  const int n = 300;
  for (int deg = 0; deg <= 4; ++deg) {
    for (int window : {13, 31, 101}) {
      CAPTURE(deg);
      CAPTURE(window);
      Vector y(n), dy(n);
      for (int i = 0; i < n; ++i) {
        const double t = i * dt - 1.0;
        y(i) = std::pow(t, deg) + 0.5 * t - 2.0;
        dy(i) = (deg == 0 ? 0.0 : deg * std::pow(t, deg - 1)) + 0.5;
      }
      CHECK((sg_filter(y, 4, window, 0, dt) - y).cwiseAbs().maxCoeff() < 1e-8);
      CHECK((sg_filter(y, 4, window, 1, dt) - dy).cwiseAbs().maxCoeff() < 1e-8);
    }
  }
}

TEST_CASE("derivative of a sampled sine") {
  const double dt = 0.01;
  const int n = 1000;
  Vector y(n), dy(n);
  for (int i = 0; i < n; ++i) {
    y(i) = std::sin(i * dt);
    dy(i) = std::cos(i * dt);
  }
  const Vector err = (sg_filter(y, 4, 13, 1, dt) - dy).cwiseAbs();
  // Truncation error is O(h^4); the off-centre edge fits are looser.
  CHECK(err.segment(6, n - 12).maxCoeff() < 1e-7);
  CHECK(err.maxCoeff() < 1e-6);
}

TEST_CASE("the filter is linear") {
  const int n = 200;
  Vector a(n), b(n);
  for (int i = 0; i < n; ++i) {
    a(i) = std::cos(0.1 * i) + 0.01 * ((i * 7919) % 13);
    b(i) = std::exp(-0.01 * i);
  }
  const Vector lhs = sg_filter(2.0 * a - 3.0 * b, 4, 21, 1, 0.1);
  const Vector rhs = 2.0 * sg_filter(a, 4, 21, 1, 0.1) - 3.0 * sg_filter(b, 4, 21, 1, 0.1);
  CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("invalid windows are rejected") {
  const Vector y = Vector::LinSpaced(50, 0.0, 1.0);
  CHECK_THROWS_AS(sg_filter(y, 4, 14, 0, 1.0), InvalidWindowError);
  CHECK_THROWS_AS(sg_filter(y, 4, 51, 0, 1.0), InvalidWindowError);
  CHECK_THROWS_AS(sg_filter(y, 4, 3, 0, 1.0), InvalidWindowError);
  CHECK_THROWS_AS(sg_filter(y, 4, 13, 2, 1.0), InvalidWindowError);
}

TEST_CASE("window grid") {
  const auto g = sg_window_grid(5000);
  CHECK(g.front() == 13);
  CHECK(g.back() == 101);
  for (std::size_t i = 1; i < g.size(); ++i) CHECK(g[i] - g[i - 1] == 2);
  const auto small = sg_window_grid(40);
  CHECK(small.front() == 13);
  CHECK(small.back() <= 40);
  CHECK(small.back() % 2 == 1);
}

TEST_CASE("adaptive smoothing picks a window per column and checks length") {
  const auto sys = builtin_system("lorenz");
  const Trajectory clean = simulate(sys, sample_initial_condition(sys, 2), 0.001, 2000);
  const SmoothedData s = smooth_and_differentiate(add_noise(clean, {49.0, 3}));
  CHECK(s.window_per_column.size() == 3);
  for (int w : s.window_per_column) CHECK((w >= 13 && w <= 101 && w % 2 == 1));
  CHECK(s.X.rows() == 2000);
  CHECK(s.Xdot.cols() == 3);
  CHECK_THROWS_AS(smooth_and_differentiate(Matrix::Zero(12, 3), 0.1), TooFewSamplesError);
}

}  // TEST_SUITE
