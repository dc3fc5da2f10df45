#pragma once

// End-to-end discovery: smoothing, library construction, two-pass screening
// and Bayesian term selection, one equation at a time.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "argoskit/bayes.hpp"
#include "argoskit/diagnostics.hpp"
#include "argoskit/freq_screen.hpp"
#include "argoskit/library.hpp"
#include "argoskit/ode_bench.hpp"

namespace argoskit {

struct DiscoverOptions {
  int degree = 5;
  bool trig = false;
  BayesConfig bayes;          // bayes.seed is ignored; per-equation seeds derive from `seed`
  ScreenOptions screen;
  std::uint64_t seed = 0;
  bool diagnostics = false;
  double snr_db = kInfinity;  // recorded in the metadata only
};

struct ModelMeta {
  Eigen::Index n = 0;
  double snr_db = kInfinity;
  std::uint64_t seed = 0;
  int degree = 5;
  bool trig = false;
};

struct DiscoveredModel {
  std::vector<EquationModel> equations;
  ModelMeta meta;
  std::vector<std::optional<DiagnosticsReport>> diagnostics;

  Eigen::Index dim() const { return static_cast<Eigen::Index>(equations.size()); }
};

/// Seed handed to the screen and the sampler of equation `j`.
std::uint64_t equation_seed(std::uint64_t seed, int j);

/// Screening plus Bayesian selection of a single equation; `diagnostics`
/// receives the report when non-null. Throws on module errors.
EquationModel discover_equation(const Matrix& X, const Vector& y, const DiscoverOptions& opts,
                                int j, std::optional<DiagnosticsReport>* diagnostics = nullptr);

/// Failures are confined to their equation, which is reported empty with
/// `error` set.
DiscoveredModel discover(const Trajectory& traj, const DiscoverOptions& opts);

/// Exact support match on every equation; coefficients are not compared.
/// Throws DimensionMismatchError when the dimensions differ.
bool compare_truth(const DiscoveredModel& model, const DynamicalSystem& sys);
bool compare_truth(const DiscoveredModel& model,
                   const std::vector<std::vector<TermDescriptor>>& truth);

/// Sequentially thresholded (ridge) least squares, at most 50 iterations.
SparseFit stlsq_baseline(const CandidateLibrary& lib, const Vector& y, double threshold,
                         double ridge_penalty = 0.0);

std::string equation_lhs(int j);

std::string model_json(const DiscoveredModel& model, int indent = 2);
DiscoveredModel parse_model_json(const std::string& text);
void write_model_json(const std::string& path, const DiscoveredModel& model);
DiscoveredModel read_model_json(const std::string& path);

/// One "dxj/dt = ..." line per equation.
std::string model_text(const DiscoveredModel& model);

}  // namespace argoskit
