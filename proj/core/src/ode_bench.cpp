#include "argoskit/ode_bench.hpp"

#include <cmath>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include <boost/numeric/odeint.hpp>

namespace argoskit {

namespace {

using TermList = std::vector<TermDescriptor>;

TermList terms(int dim, std::initializer_list<std::string_view> names) {
  TermList out;
  for (auto n : names) out.push_back(TermDescriptor::parse(n, dim));
  return out;
}

DynamicalSystem make_lorenz() {
  const double sigma = 10.0, rho = 28.0, zeta = 8.0 / 3.0;
  DynamicalSystem s;
  s.name = "lorenz";
  s.dim = 3;
  s.params = {{"sigma", sigma}, {"rho", rho}, {"zeta", zeta}};
  s.rhs = [=](std::span<const double> x, std::span<double> f) {
    f[0] = sigma * (x[1] - x[0]);
    f[1] = x[0] * (rho - x[2]) - x[1];
    f[2] = x[0] * x[1] - zeta * x[2];
  };
  s.truth = {terms(3, {"x1", "x2"}), terms(3, {"x1", "x2", "x1*x3"}),
             terms(3, {"x1*x2", "x3"})};
  s.ic_ranges = {{-15, 15}, {-15, 15}, {10, 40}};
  s.default_dt = 0.001;
  return s;
}

DynamicalSystem make_thomas() {
  const double a = 0.208186;
  DynamicalSystem s;
  s.name = "thomas";
  s.dim = 3;
  s.params = {{"a", a}};
  s.rhs = [=](std::span<const double> x, std::span<double> f) {
    f[0] = std::sin(x[1]) - a * x[0];
    f[1] = std::sin(x[2]) - a * x[1];
    f[2] = std::sin(x[0]) - a * x[2];
  };
  s.truth = {terms(3, {"sin(x2)", "x1"}), terms(3, {"sin(x3)", "x2"}),
             terms(3, {"sin(x1)", "x3"})};
  s.ic_ranges = {{-1, 1}, {-1, 1}, {-1, 1}};
  return s;
}

DynamicalSystem make_rossler() {
  const double a = 0.2, b = 0.2, c = 5.7;
  DynamicalSystem s;
  s.name = "rossler";
  s.dim = 3;
  s.params = {{"a", a}, {"b", b}, {"c", c}};
  s.rhs = [=](std::span<const double> x, std::span<double> f) {
    f[0] = -x[1] - x[2];
    f[1] = x[0] + a * x[1];
    f[2] = b + x[2] * (x[0] - c);
  };
  s.truth = {terms(3, {"x2", "x3"}), terms(3, {"x1", "x2"}),
             terms(3, {"1", "x3", "x1*x3"})};
  s.ic_ranges = {{-10, 10}, {-10, 10}, {0, 20}};
  return s;
}

DynamicalSystem make_dadras() {
  const double a = 3.0, b = 2.7, c = 1.7, d = 2.0, h = 9.0;
  DynamicalSystem s;
  s.name = "dadras";
  s.dim = 3;
  s.params = {{"a", a}, {"b", b}, {"c", c}, {"d", d}, {"h", h}};
  s.rhs = [=](std::span<const double> x, std::span<double> f) {
    f[0] = x[1] - a * x[0] + b * x[1] * x[2];
    f[1] = c * x[1] - x[0] * x[2] + x[2];
    f[2] = d * x[0] * x[1] - h * x[2];
  };
  s.truth = {terms(3, {"x1", "x2", "x2*x3"}), terms(3, {"x2", "x3", "x1*x3"}),
             terms(3, {"x3", "x1*x2"})};
  s.ic_ranges = {{-4, 4}, {-4, 4}, {-4, 4}};
  return s;
}

DynamicalSystem make_aizawa() {
  const double a = 0.95, b = 0.7, c = 0.65, d = 3.5, e = 0.25, f = 0.1;
  DynamicalSystem s;
  s.name = "aizawa";
  s.dim = 3;
  s.params = {{"a", a}, {"b", b}, {"c", c}, {"d", d}, {"e", e}, {"f", f}};
  s.rhs = [=](std::span<const double> x, std::span<double> out) {
    const double r2 = x[0] * x[0] + x[1] * x[1];
    out[0] = -d * x[1] + x[0] * (x[2] - b);
    out[1] = d * x[0] + x[1] * (x[2] - b);
    out[2] = a * x[2] + c + f * x[0] * x[0] * x[0] * x[2] -
             x[2] * x[2] * x[2] / 3.0 - r2 * (e * x[2] + 1.0);
  };
  s.truth = {terms(3, {"x1", "x2", "x1*x3"}), terms(3, {"x1", "x2", "x2*x3"}),
             terms(3, {"1", "x3", "x1^2", "x2^2", "x3^3", "x1^2*x3", "x2^2*x3",
                       "x1^3*x3"})};
  s.ic_ranges = {{-2, 2}, {-2, 2}, {-1, 2}};
  return s;
}

DynamicalSystem make_sprott() {
  const double a = 2.07, b = 1.79;
  DynamicalSystem s;
  s.name = "sprott";
  s.dim = 3;
  s.params = {{"a", a}, {"b", b}};
  s.rhs = [=](std::span<const double> x, std::span<double> f) {
    f[0] = x[1] + a * x[0] * x[1] + x[0] * x[2];
    f[1] = 1.0 - b * x[0] * x[0] + x[1] * x[2];
    f[2] = x[0] - x[0] * x[0] - x[1] * x[1];
  };
  s.truth = {terms(3, {"x2", "x1*x2", "x1*x3"}), terms(3, {"1", "x1^2", "x2*x3"}),
             terms(3, {"x1", "x1^2", "x2^2"})};
  s.ic_ranges = {{-1, 1}, {-1, 1}, {-1, 1}};
  return s;
}

DynamicalSystem make_halvorsen() {
  const double a = 1.89;
  DynamicalSystem s;
  s.name = "halvorsen";
  s.dim = 3;
  s.params = {{"a", a}};
  s.rhs = [=](std::span<const double> x, std::span<double> f) {
    f[0] = -a * x[0] - 4.0 * x[1] - 4.0 * x[2] - x[1] * x[1];
    f[1] = -a * x[1] - 4.0 * x[2] - 4.0 * x[0] - x[2] * x[2];
    f[2] = -a * x[2] - 4.0 * x[0] - 4.0 * x[1] - x[0] * x[0];
  };
  s.truth = {terms(3, {"x1", "x2", "x3", "x2^2"}), terms(3, {"x1", "x2", "x3", "x3^2"}),
             terms(3, {"x1", "x2", "x3", "x1^2"})};
  s.ic_ranges = {{-4, 4}, {-4, 4}, {-4, 4}};
  return s;
}

using OdeState = std::vector<double>;

}  // namespace

Vector DynamicalSystem::evaluate(const Vector& x) const {
  Vector out(dim);
  rhs(std::span<const double>(x.data(), static_cast<std::size_t>(x.size())),
      std::span<double>(out.data(), static_cast<std::size_t>(out.size())));
  return out;
}

double DynamicalSystem::param(std::string_view key) const {
  for (const auto& [k, v] : params) {
    if (k == key) return v;
  }
  throw Error("system '" + name + "' has no parameter '" + std::string(key) + "'");
}

const std::vector<std::string>& builtin_system_names() {
  static const std::vector<std::string> names = {
      "lorenz", "thomas", "rossler", "dadras", "aizawa", "sprott", "halvorsen"};
  return names;
}

DynamicalSystem builtin_system(std::string_view name) {
  if (name == "lorenz") return make_lorenz();
  if (name == "thomas") return make_thomas();
  if (name == "rossler") return make_rossler();
  if (name == "dadras") return make_dadras();
  if (name == "aizawa") return make_aizawa();
  if (name == "sprott") return make_sprott();
  if (name == "halvorsen") return make_halvorsen();
  std::string valid;
  for (const auto& n : builtin_system_names()) {
    valid += valid.empty() ? n : ", " + n;
  }
  throw UnknownSystemError("unknown system '" + std::string(name) +
                           "'; valid identifiers: " + valid);
}

Vector sample_initial_condition(const DynamicalSystem& sys, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Vector ic(sys.dim);
  for (int j = 0; j < sys.dim; ++j) {
    const auto [lo, hi] = sys.ic_ranges[static_cast<std::size_t>(j)];
    std::uniform_real_distribution<double> u(lo, hi);
    ic(j) = u(rng);
  }
  return ic;
}

Trajectory simulate(const DynamicalSystem& sys, const Vector& ic, double dt, int n,
                    double t0, IntegratorTolerances tol) {
  namespace odeint = boost::numeric::odeint;
  if (!(dt > 0.0)) throw Error("simulate: dt must be positive");
  if (n < 2) throw Error("simulate: n must be at least 2");
  if (ic.size() != sys.dim) {
    throw DimensionMismatchError("simulate: initial condition has length " +
                                 std::to_string(ic.size()) + ", system dimension is " +
                                 std::to_string(sys.dim));
  }

  Trajectory traj;
  traj.dt = dt;
  traj.noisy = false;
  traj.times.resize(n);
  traj.states.resize(n, sys.dim);

  OdeState x(ic.data(), ic.data() + ic.size());
  auto ode = [&sys](const OdeState& s, OdeState& dsdt, double /*t*/) {
    sys.rhs(std::span<const double>(s), std::span<double>(dsdt));
  };
  auto stepper = odeint::make_controlled(tol.abs, tol.rel,
                                         odeint::runge_kutta_dopri5<OdeState>());

  double h = dt;
  traj.times(0) = t0;
  traj.states.row(0) = ic.transpose();
  for (int i = 1; i < n; ++i) {
    double t = t0 + (i - 1) * dt;
    const double t_end = t0 + i * dt;
    const double eps = 1e-13 * std::max(1.0, std::abs(t_end));
    while (t_end - t > eps) {
      const bool clipped = h > t_end - t;
      double step = clipped ? t_end - t : h;
      int rejections = 0;
      while (stepper.try_step(ode, x, t, step) == odeint::fail) {
        if (step < 1e-14 * std::max(1.0, std::abs(t)) || ++rejections > 500) {
          throw IntegrationError("simulate: step size underflow at t = " + format_double(t));
        }
      }
      // A step shortened to land on the grid says nothing about the usable step size.
      if (!clipped || rejections > 0) h = step;
    }
    for (double v : x) {
      if (!std::isfinite(v)) {
        throw IntegrationError("simulate: non-finite state at t = " + format_double(t_end));
      }
    }
    traj.times(i) = t_end;
    for (int j = 0; j < sys.dim; ++j) traj.states(i, j) = x[static_cast<std::size_t>(j)];
  }
  return traj;
}

Trajectory add_noise(const Trajectory& traj, const NoiseSpec& spec) {
  if (traj.noisy) throw Error("add_noise: trajectory is already noisy");
  Trajectory out = traj;
  if (spec.is_infinite()) return out;
  out.noisy = true;
  std::mt19937_64 rng(spec.seed);
  const double factor = std::pow(10.0, -spec.snr_db / 20.0);
  for (Eigen::Index j = 0; j < traj.states.cols(); ++j) {
    const double sd = sample_sd(traj.states.col(j)) * factor;
    std::normal_distribution<double> noise(0.0, 1.0);
    for (Eigen::Index i = 0; i < traj.states.rows(); ++i) {
      out.states(i, j) += sd * noise(rng);
    }
  }
  return out;
}

void write_trajectory_csv(std::ostream& out, const Trajectory& traj) {
  out << 't';
  for (Eigen::Index j = 0; j < traj.states.cols(); ++j) out << ",x" << (j + 1);
  out << '\n';
  for (Eigen::Index i = 0; i < traj.states.rows(); ++i) {
    out << format_double(traj.times(i));
    for (Eigen::Index j = 0; j < traj.states.cols(); ++j) {
      out << ',' << format_double(traj.states(i, j));
    }
    out << '\n';
  }
}

void write_trajectory_csv(const std::string& path, const Trajectory& traj) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  write_trajectory_csv(out, traj);
  if (!out) throw Error("failed writing '" + path + "'");
}

Trajectory read_trajectory_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("trajectory CSV: missing header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) header.push_back(cell);
  }
  if (header.size() < 2 || header[0] != "t") {
    throw ParseError("trajectory CSV: header must be t,x1,...,xm");
  }
  for (std::size_t j = 1; j < header.size(); ++j) {
    if (header[j] != "x" + std::to_string(j)) {
      throw ParseError("trajectory CSV: unexpected column '" + header[j] + "'");
    }
  }
  const auto cols = header.size();
  std::vector<double> values;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::size_t count = 0;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        values.push_back(std::stod(cell, &used));
        if (used != cell.size()) throw std::invalid_argument(cell);
      } catch (const std::exception&) {
        throw ParseError("trajectory CSV: bad number '" + cell + "' on data row " +
                         std::to_string(rows + 1));
      }
      ++count;
    }
    if (count != cols) {
      throw ParseError("trajectory CSV: row " + std::to_string(rows + 1) + " has " +
                       std::to_string(count) + " fields, expected " + std::to_string(cols));
    }
    ++rows;
  }
  if (rows < 2) throw ParseError("trajectory CSV: need at least 2 rows");

  Trajectory traj;
  traj.times.resize(static_cast<Eigen::Index>(rows));
  traj.states.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols - 1));
  for (std::size_t i = 0; i < rows; ++i) {
    traj.times(static_cast<Eigen::Index>(i)) = values[i * cols];
    for (std::size_t j = 1; j < cols; ++j) {
      const double v = values[i * cols + j];
      if (!std::isfinite(v)) throw ParseError("trajectory CSV: non-finite state value");
      traj.states(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j - 1)) = v;
    }
  }
  const auto n = traj.times.size();
  traj.dt = (traj.times(n - 1) - traj.times(0)) / static_cast<double>(n - 1);
  if (!(traj.dt > 0.0)) throw ParseError("trajectory CSV: times must be increasing");
  for (Eigen::Index i = 1; i < n; ++i) {
    const double step = traj.times(i) - traj.times(i - 1);
    const double scale = std::max(traj.dt, std::abs(traj.times(i)));
    if (std::abs(step - traj.dt) > 1e-12 * scale) {
      throw ParseError("trajectory CSV: time grid is not uniform at row " + std::to_string(i + 1));
    }
  }
  traj.noisy = true;  // provenance unknown; treat external data as observed
  return traj;
}

Trajectory read_trajectory_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "' for reading");
  return read_trajectory_csv(in);
}

}  // namespace argoskit
