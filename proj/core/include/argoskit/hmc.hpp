#pragma once

// Static-path Hamiltonian Monte Carlo with jittered trajectory length and
// dual-averaging step-size adaptation.

#include <cstdint>
#include <functional>

#include "argoskit/common.hpp"

namespace argoskit {

/// Returns log p(theta) up to a constant and writes its gradient into `grad`.
using LogDensity = std::function<double(const Vector& theta, Vector& grad)>;

struct HmcOptions {
  int iters = 2000;
  int warmup = 1000;
  double target_accept = 0.8;
  int max_leapfrog = 32;            // steps drawn uniformly from [1, max_leapfrog]
  double divergence_threshold = 1000.0;
};

/// The sampler runs in coordinates u with theta = center + transform * u and
/// an identity mass matrix, i.e. a dense metric transform * transform^T.
struct LinearReparam {
  Vector center;
  Matrix transform;

  Vector to_theta(const Vector& u) const { return center + transform * u; }
};

struct ChainResult {
  Matrix draws;            // (iters - warmup) x dim, in theta coordinates
  double step_size = 0.0;  // adapted step size used after warmup
  int divergences = 0;     // post-warmup divergent transitions
  double accept_rate = 0.0;
};

ChainResult run_hmc_chain(const LogDensity& logp, const LinearReparam& reparam,
                          const Vector& u_init, const HmcOptions& opts, std::uint64_t seed);

/// `steps` leapfrog steps of size `eps` for H = -logp(q) + |p|^2/2.
/// Returns false if the density became non-finite.
bool leapfrog(const LogDensity& logp, Vector& q, Vector& p, double eps, int steps);

class DualAveraging {
 public:
  explicit DualAveraging(double initial_step, double target, double gamma = 0.05,
                         double t0 = 10.0, double kappa = 0.75);

  /// Feeds the acceptance statistic of the latest transition; returns the
  /// step size to use next.
  double update(double accept_stat);
  double final_step() const;

 private:
  double target_;
  double gamma_;
  double t0_;
  double kappa_;
  double mu_;
  double h_bar_ = 0.0;
  double log_step_;
  double log_step_bar_ = 0.0;
  int m_ = 0;
};

}  // namespace argoskit
