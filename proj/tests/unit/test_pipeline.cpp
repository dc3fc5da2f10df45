#include <algorithm>

#include "argoskit/pipeline.hpp"
#include "argoskit/smoothing.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace argoskit;

namespace {

DiscoveredModel model_from_truth(const DynamicalSystem& sys) {
  DiscoveredModel m;
  for (const auto& eq : sys.truth) {
    EquationModel e;
    for (const auto& t : eq) e.terms.push_back({t, 1.0, 0.5, 1.5});
    m.equations.push_back(e);
  }
  m.diagnostics.resize(m.equations.size());
  return m;
}

DiscoverOptions quick_options() {
  DiscoverOptions o;
  o.degree = 3;
  o.bayes.iters = 500;
  o.bayes.warmup = 250;
  o.seed = 4;
  return o;
}

Trajectory lorenz_data(int n, std::uint64_t seed) {
  const auto sys = builtin_system("lorenz");
  const Trajectory t = simulate(sys, sample_initial_condition(sys, seed), sys.default_dt, n);
  return add_noise(t, {49.0, seed + 1});
}

}  // namespace

TEST_SUITE("pipeline") {

TEST_CASE("compare_truth is an exact set comparison") {
  const auto sys = builtin_system("lorenz");
  DiscoveredModel m = model_from_truth(sys);
  CHECK(compare_truth(m, sys));
  std::reverse(m.equations[1].terms.begin(), m.equations[1].terms.end());
  CHECK(compare_truth(m, sys));

  DiscoveredModel extra = model_from_truth(sys);
  extra.equations[0].terms.push_back({TermDescriptor::intercept(3), 0.1, 0.05, 0.2});
  CHECK_FALSE(compare_truth(extra, sys));

  DiscoveredModel missing = model_from_truth(sys);
  missing.equations[2].terms.pop_back();
  CHECK_FALSE(compare_truth(missing, sys));

  DiscoveredModel failed = model_from_truth(sys);
  failed.equations[0].error = "boom";
  CHECK_FALSE(compare_truth(failed, sys));

  DiscoveredModel short_model = model_from_truth(sys);
  short_model.equations.pop_back();
  CHECK_THROWS_AS(compare_truth(short_model, sys), DimensionMismatchError);
}

TEST_CASE("STLSQ examples") {
  std::mt19937_64 rng(1);
  const Matrix X = testutil::gaussian_matrix(200, 3, rng);
  const CandidateLibrary lib = build_library(X, 2, false);
  const Vector y = 3.0 * lib.theta.col(1) - 2.0 * lib.theta.col(6) + 0.5 * lib.theta.col(0);
  const SparseFit fit = stlsq_baseline(lib, y, 0.1);
  CHECK(fit.support == std::vector<Eigen::Index>{0, 1, 6});
  CHECK(fit.coeffs(1) == doctest::Approx(3.0));
  CHECK(fit.rss < 1e-20);

  const SparseFit none = stlsq_baseline(lib, y, 100.0);
  CHECK(none.support.empty());
  CHECK(none.rss == doctest::Approx(y.squaredNorm()));

  // Orthonormal design: the fixed point is hard-thresholded OLS.
  const Matrix Q = Eigen::HouseholderQR<Matrix>(testutil::gaussian_matrix(50, 4, rng))
                       .householderQ() * Matrix::Identity(50, 4);
  CandidateLibrary orth;
  orth.theta = Q;
  for (int k = 0; k < 4; ++k) {
    std::vector<int> e(4, 0);
    e[static_cast<std::size_t>(k)] = 1;
    orth.terms.push_back(TermDescriptor::monomial(e));
  }
  orth.scales = Vector::Ones(4);
  Vector c(4);
  c << 1.0, 0.05, -0.3, 0.09;
  const Vector yo = Q * c;
  const SparseFit o = stlsq_baseline(orth, yo, 0.1);
  CHECK(o.support == std::vector<Eigen::Index>{0, 2});
  CHECK(o.coeffs(0) == doctest::Approx(1.0));
  CHECK(o.coeffs(1) == doctest::Approx(-0.3));
  CHECK_THROWS(stlsq_baseline(lib, y, 0.0));
}

TEST_CASE("discover is deterministic and equations are independent") {
  const Trajectory data = lorenz_data(2000, 3);
  const DiscoverOptions opts = quick_options();
  const DiscoveredModel a = discover(data, opts);
  const DiscoveredModel b = discover(data, opts);
  REQUIRE(a.dim() == 3);
  CHECK(model_json(a) == model_json(b));
  CHECK(compare_truth(a, builtin_system("lorenz")));

  const SmoothedData s = smooth_and_differentiate(data);
  const EquationModel third = discover_equation(s.X, s.Xdot.col(2), opts, 2);
  REQUIRE(third.terms.size() == a.equations[2].terms.size());
  for (std::size_t k = 0; k < third.terms.size(); ++k) {
    CHECK(third.terms[k].mean == a.equations[2].terms[k].mean);
  }
  CHECK(a.meta.n == 2000);
  CHECK(a.meta.seed == 4);
}

TEST_CASE("a constant trajectory yields empty or failed equations, never a crash") {
  Trajectory flat;
  flat.dt = 0.01;
  flat.times = Vector::LinSpaced(200, 0.0, 1.99);
  flat.states = Matrix::Constant(200, 3, 2.0);
  const DiscoveredModel m = discover(flat, quick_options());
  for (const auto& eq : m.equations) {
    const bool ok = eq.empty || eq.error.has_value() ||
                    (eq.terms.size() == 1 && eq.terms[0].term.is_intercept());
    CHECK(ok);
  }
}

TEST_CASE("model JSON round trip") {
  const Trajectory data = lorenz_data(1500, 8);
  DiscoverOptions opts = quick_options();
  opts.snr_db = 49.0;
  DiscoveredModel m = discover(data, opts);
  m.equations[1].error = "example failure";
  const DiscoveredModel back = parse_model_json(model_json(m));
  CHECK(model_json(back) == model_json(m));
  CHECK(back.meta.snr_db == 49.0);
  CHECK(back.equations[1].error == m.equations[1].error);

  m.meta.snr_db = kInfinity;
  CHECK(model_json(m).find("\"snr_db\": \"inf\"") != std::string::npos);
  CHECK(parse_model_json(model_json(m)).meta.snr_db == kInfinity);
  CHECK_THROWS_AS(parse_model_json("{\"equations\": 3}"), ParseError);
  CHECK(model_text(m).find("dx1/dt = ") == 0);
}

}  // TEST_SUITE
