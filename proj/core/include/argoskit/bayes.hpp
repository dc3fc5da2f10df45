#pragma once

// Bayesian linear regression on a trimmed library: HMC posterior sampling,
// convergence checks and credible-interval term retention.
//
// Model: y ~ N(Theta beta, sigma^2 I), beta_k ~ N(0, (2.5 s_y / s_k)^2),
// sigma ~ Exp(rate 1/s_y). Constant columns (the intercept) use prior sd
// 2.5 s_y. sigma is sampled as log sigma.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "argoskit/common.hpp"
#include "argoskit/hmc.hpp"
#include "argoskit/library.hpp"

namespace argoskit {

struct BayesConfig {
  int chains = 4;
  int iters = 2000;
  int warmup = 1000;
  double ci_level = 0.90;
  double target_accept = 0.8;
  int max_leapfrog = 32;
  double max_divergence_rate = 0.10;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Log posterior over theta = (beta, log sigma), or beta alone when sigma is
/// fixed. Evaluated from sufficient statistics, so a gradient costs O(p^2).
class RegressionPosterior {
 public:
  /// Priors derived from the data as described above.
  RegressionPosterior(const CandidateLibrary& trimmed, const Vector& y,
                      std::optional<double> fixed_sigma = std::nullopt);
  /// Explicit prior sds and sigma rate (rate unused when sigma is fixed).
  RegressionPosterior(const Matrix& theta, const Vector& y, Vector prior_sd, double sigma_rate,
                      std::optional<double> fixed_sigma = std::nullopt);

  Eigen::Index coefficients() const { return gram_.rows(); }
  Eigen::Index dim() const { return coefficients() + (fixed_sigma_ ? 0 : 1); }
  bool samples_sigma() const { return !fixed_sigma_; }
  const Vector& prior_sd() const { return prior_sd_; }
  double sigma_rate() const { return sigma_rate_; }
  Eigen::Index observations() const { return n_; }

  double log_density(const Vector& theta, Vector& grad) const;
  double rss(const Vector& beta) const;

  /// Gaussian approximation around the mode, used as the sampler metric.
  LinearReparam reparam() const;

 private:
  void init(const Matrix& theta, const Vector& y);

  Matrix gram_;      // Theta^T Theta
  Vector beta_ls_;   // least-squares solution
  double rss_min_ = 0.0;
  Eigen::Index n_ = 0;
  Vector prior_sd_;
  double sigma_rate_ = 1.0;
  std::optional<double> fixed_sigma_;
};

/// Post-warmup draws of every chain stacked chain-major: rows
/// [c * per_chain, (c + 1) * per_chain) belong to chain c. Columns are the
/// coefficients followed by sigma (natural scale) when sigma is sampled.
struct PosteriorDraws {
  Matrix samples;
  std::vector<std::string> names;
  int chains = 0;
  int per_chain = 0;
  bool has_sigma = true;
  int divergences = 0;
  std::vector<double> step_sizes;

  Eigen::Index coefficients() const { return samples.cols() - (has_sigma ? 1 : 0); }
  Matrix beta() const { return samples.leftCols(coefficients()); }
  Vector sigma() const;
};

PosteriorDraws hmc_sample(const RegressionPosterior& posterior, std::vector<std::string> names,
                          const BayesConfig& cfg);

/// Throws DivergenceError when more than cfg.max_divergence_rate of the
/// post-warmup transitions diverged.
PosteriorDraws hmc_sample(const CandidateLibrary& trimmed, const Vector& y,
                          const BayesConfig& cfg);

struct TermPosterior {
  std::string name;
  double mean = 0.0;
  double sd = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  double rhat = 1.0;
  double ess = 0.0;
  bool retained = false;
};

struct PosteriorSummary {
  std::vector<TermPosterior> terms;
  double sigma_mean = 0.0;
  double max_rhat = 1.0;
  bool converged = true;  // every rhat < 1.1
  PosteriorDraws draws;
};

inline constexpr double kRhatThreshold = 1.1;

/// Type-7 (linear interpolation) quantile of an ascending-sorted sample.
double quantile_sorted(const std::vector<double>& sorted, double prob);

/// Split-chain Gelman-Rubin statistic; `draws` holds one chain per column.
double split_rhat(const Matrix& draws);

/// Multi-chain effective sample size (Geyer initial monotone sequence).
double effective_sample_size(const Matrix& draws);

/// sd / sqrt(ESS) of the pooled draws.
double mcse_mean(const Matrix& draws);

/// Reshapes column `col` of a chain-major draw matrix to per_chain x chains.
Matrix chain_matrix(const PosteriorDraws& draws, Eigen::Index col);

/// Throws Error for fewer than 2 chains.
PosteriorSummary summarize(const PosteriorDraws& draws, const BayesConfig& cfg);

/// Retention rule: the interval excludes zero and contains the mean.
bool retain_term(double mean, double ci_lo, double ci_hi);

struct RetainedTerm {
  TermDescriptor term;
  double mean = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
};

struct EquationModel {
  std::vector<RetainedTerm> terms;
  bool empty = false;             // nothing retained (dx/dt = 0)
  bool converged = true;
  bool rank_warning = false;
  std::optional<std::string> error;

  std::vector<std::string> names() const;
};

EquationModel select_terms(const PosteriorSummary& summary, const CandidateLibrary& trimmed);

/// "dx1/dt = -10 x1 + 10 x2" style rendering.
std::string format_equation(const EquationModel& eq, const std::string& lhs);

/// CSV with header chain,iter,beta_<name>...,sigma.
void write_draws_csv(std::ostream& out, const PosteriorDraws& draws);

}  // namespace argoskit
