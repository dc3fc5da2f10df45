#pragma once

// Post-identification reliability checks: variance inflation factors,
// PSIS-LOO Pareto shapes, residual structure and affine-linear modal analysis.

#include <complex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "argoskit/bayes.hpp"
#include "argoskit/common.hpp"
#include "argoskit/library.hpp"

namespace argoskit {

inline constexpr double kVifThreshold = 10.0;
inline constexpr double kKhatThreshold = 0.7;

/// VIF_k = 1/(1 - R^2_k), regressing column k on the other columns plus an
/// intercept. Constant columns (the intercept) yield nullopt; perfectly
/// collinear columns yield +inf.
std::vector<std::optional<double>> vif(const CandidateLibrary& trimmed);

struct GpdFit {
  double shape = 0.0;  // k-hat (xi)
  double scale = 0.0;
};

/// Probability-weighted-moment fit of a generalised Pareto distribution to
/// nonnegative exceedances.
GpdFit fit_gpd_pwm(std::vector<double> exceedances);

/// Tail length M = min(ceil(0.2 S), ceil(3 sqrt(S))).
Eigen::Index psis_tail_length(Eigen::Index draws);

/// Pareto shape of the leave-one-out importance ratios of every observation.
/// Throws TooFewDrawsError below 100 draws.
Vector psis_loo(const PosteriorDraws& draws, const CandidateLibrary& trimmed, const Vector& y);

/// (posterior-predictive mean, residual) per observation.
std::vector<std::pair<double, double>> residual_diagnostics(const PosteriorDraws& draws,
                                                            const CandidateLibrary& trimmed,
                                                            const Vector& y);

struct DiagnosticsFlags {
  bool multicollinearity = false;  // any VIF > 10
  bool influential = false;        // any k-hat > 0.7
  bool convergence = false;        // any R-hat >= 1.1
};

struct DiagnosticsReport {
  std::vector<std::pair<std::string, std::optional<double>>> vif;
  Vector khat;
  std::vector<std::pair<double, double>> residuals;
  DiagnosticsFlags flags;
};

DiagnosticsReport diagnose(const CandidateLibrary& trimmed, const Vector& y,
                           const PosteriorSummary& summary);

/// {vif: {term: value}, khat: [...], residuals: [[mu, r], ...], flags: {...}};
/// infinite VIFs are written as the string "inf".
std::string diagnostics_json(const DiagnosticsReport& report, int indent = -1);

struct ModalAnalysis {
  Vector equilibrium;
  std::vector<std::complex<double>> eigenvalues;  // conjugate pairs adjacent, Im > 0 first
  Eigen::MatrixXcd eigenvectors;                  // columns aligned with eigenvalues
  std::vector<double> periods;                    // 2 pi / Im, one per conjugate pair
  std::vector<double> half_lives;                 // ln 2 / |Re|, one per eigenvalue
  std::vector<double> decay_timescales;           // 1 / |Re|, one per real eigenvalue

  /// z(t) = z* + V exp(Lambda t) V^{-1} (z0 - z*).
  Vector propagate(const Vector& z0, double t) const;
};

/// Equilibrium and eigen-structure of dz/dt = A z + b. Throws
/// SingularMatrixError when cond(A) >= 1e12.
ModalAnalysis analyze_affine_modes(const Matrix& A, const Vector& b);

std::string modal_analysis_json(const ModalAnalysis& modes, int indent = -1);

}  // namespace argoskit
