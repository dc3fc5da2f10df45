#pragma once

// Frequentist screening: ridge/OLS pilots, adaptive lasso with a two-phase
// cross-validated penalty search, and threshold sweeps with OLS refits scored
// by BIC, run in two sequential passes.
//
// Penalised objectives use the per-observation scaling
//   (1/2n) ||y - Theta beta||^2 + lambda * sum_k w_k |beta_k|
// with an unpenalised intercept. Internally columns are centred and scaled to
// unit sample sd; coefficients are always reported on the original scale.

#include <cstdint>
#include <vector>

#include "argoskit/common.hpp"
#include "argoskit/library.hpp"

namespace argoskit {

struct ScreenOptions {
  int folds = 10;
  int lambda_points = 100;           // phase-1 log grid length
  double lambda_min_ratio = 1e-4;    // phase-1 grid spans [ratio * lambda_max, lambda_max]
  int refine_points = 100;           // phase-2 uniform grid length
  int ridge_points = 100;
  double ridge_max = 1e2;            // ridge penalty grid on standardised columns
  double ridge_min = 1e-10;
  double tolerance = 1e-7;           // stop when max_k G_kk * delta_k^2 < tolerance * var(y)
  int max_sweeps = 100000;
};

struct SparseFit {
  std::vector<Eigen::Index> support;  // sorted column indices
  Vector coeffs;                      // OLS coefficients aligned with `support`
  double rss = 0.0;
  double bic = 0.0;
  double threshold = 0.0;
  bool rank_deficient = false;

  /// Dense p-vector with zeros off the support.
  Vector dense(Eigen::Index p) const;
};

enum class PilotKind { Ridge, Ols };

struct LassoPath {
  double lambda = 0.0;
  Vector coeffs;   // p, original scale; intercept entry holds the fitted intercept
  Vector weights;  // p, +inf marks excluded columns; intercept entry is 0
  PilotKind pilot_kind = PilotKind::Ridge;
};

struct LambdaSearch {
  double lambda_max = 0.0;
  std::vector<double> phase1_grid;
  std::vector<double> phase1_cv;
  double lambda0 = 0.0;
  std::vector<double> phase2_grid;
  std::vector<double> phase2_cv;
  double lambda = 0.0;
};

/// Fold label of every row: contiguous blocks whose boundaries are shifted
/// cyclically by a seed-derived offset.
std::vector<int> cv_folds(Eigen::Index n, int folds, std::uint64_t seed);

/// Ridge on standardised columns at a fixed penalty alpha:
///   (1/2n)||y_c - Z b||^2 + (alpha/2)||b||^2.
Vector ridge_fit(const CandidateLibrary& lib, const Vector& y, double alpha);

/// Ridge with alpha chosen by K-fold CV over a log grid.
Vector ridge_pilot(const CandidateLibrary& lib, const Vector& y, std::uint64_t seed,
                   const ScreenOptions& opts = {});

/// w_k = 1/|pilot_k| (gamma = 1); zero pilots map to +inf, the intercept to 0.
Vector adaptive_weights(const CandidateLibrary& lib, const Vector& pilot);

/// Smallest lambda at which every penalised coefficient is zero.
double lambda_max(const CandidateLibrary& lib, const Vector& y, const Vector& weights);

/// Adaptive lasso at a fixed lambda. Throws NonConvergenceError after
/// opts.max_sweeps coordinate sweeps.
Vector lasso_fit(const CandidateLibrary& lib, const Vector& y, const Vector& weights,
                 double lambda, const ScreenOptions& opts = {});

/// Objective value of `coeffs` (original scale, intercept included).
double lasso_objective(const CandidateLibrary& lib, const Vector& y, const Vector& weights,
                       double lambda, const Vector& coeffs);

double two_phase_lambda(const CandidateLibrary& lib, const Vector& y, const Vector& weights,
                        std::uint64_t seed, const ScreenOptions& opts = {},
                        LambdaSearch* trace = nullptr);

LassoPath adaptive_lasso(const CandidateLibrary& lib, const Vector& y, const Vector& weights,
                         std::uint64_t seed, const ScreenOptions& opts = {});

/// n ln(max(rss, 1e-300)/n) + k ln n.
double bic(double rss, Eigen::Index n, Eigen::Index k);

/// OLS restricted to `support`; linearly dependent columns are dropped and the
/// fit is flagged rank deficient.
SparseFit ols_refit(const CandidateLibrary& lib, const Vector& y,
                    const std::vector<Eigen::Index>& support);

/// Threshold grid 1e-8, 1e-7, ..., 1e1.
const std::vector<double>& threshold_grid();

/// Every distinct candidate support of the sweep with its refit and BIC.
std::vector<SparseFit> threshold_candidates(const CandidateLibrary& lib, const Vector& y,
                                            const Vector& lasso_coeffs);

/// BIC-minimising candidate (first on ties).
SparseFit threshold_sweep(const CandidateLibrary& lib, const Vector& y,
                          const Vector& lasso_coeffs);

struct ScreenResult {
  CandidateLibrary refined;   // library searched in pass 2
  CandidateLibrary trimmed;   // refined columns on the final support
  std::vector<TermDescriptor> support;
  SparseFit pass1;            // indices into the initial library
  SparseFit pass2;            // indices into `refined`
  LassoPath lasso1;
  LassoPath lasso2;
  bool pass1_empty = false;   // pass 2 fell back to the initial library
  bool rank_warning = false;
};

/// Two sequential screening passes (ridge-weighted, then OLS-weighted on the
/// refined library). X is the smoothed state matrix used to rebuild the library.
ScreenResult screen(const CandidateLibrary& lib0, const Matrix& X, const Vector& y,
                    std::uint64_t seed, const ScreenOptions& opts = {});

}  // namespace argoskit
