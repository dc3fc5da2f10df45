#include "argoskit/hmc.hpp"

#include <cmath>
#include <random>

namespace argoskit {

DualAveraging::DualAveraging(double initial_step, double target, double gamma, double t0,
                             double kappa)
    : target_(target),
      gamma_(gamma),
      t0_(t0),
      kappa_(kappa),
      mu_(std::log(10.0 * initial_step)),
      log_step_(std::log(initial_step)) {}

double DualAveraging::update(double accept_stat) {
  ++m_;
  const double m = m_;
  const double eta = 1.0 / (m + t0_);
  h_bar_ = (1.0 - eta) * h_bar_ + eta * (target_ - accept_stat);
  log_step_ = mu_ - std::sqrt(m) / gamma_ * h_bar_;
  const double w = std::pow(m, -kappa_);
  log_step_bar_ = w * log_step_ + (1.0 - w) * log_step_bar_;
  return std::exp(log_step_);
}

double DualAveraging::final_step() const {
  return m_ == 0 ? std::exp(log_step_) : std::exp(log_step_bar_);
}

bool leapfrog(const LogDensity& logp, Vector& q, Vector& p, double eps, int steps) {
  Vector grad(q.size());
  double lp = logp(q, grad);
  if (!std::isfinite(lp)) return false;
  for (int s = 0; s < steps; ++s) {
    p += 0.5 * eps * grad;
    q += eps * p;
    lp = logp(q, grad);
    if (!std::isfinite(lp) || !grad.allFinite()) return false;
    p += 0.5 * eps * grad;
  }
  return true;
}

namespace {

struct Point {
  Vector u;
  double logp = 0.0;
  Vector grad;  // gradient in u coordinates
};

class ReparamTarget {
 public:
  ReparamTarget(const LogDensity& logp, const LinearReparam& r) : logp_(logp), r_(r) {}

  double operator()(const Vector& u, Vector& grad_u) const {
    Vector grad_theta(r_.center.size());
    const double lp = logp_(r_.to_theta(u), grad_theta);
    grad_u.noalias() = r_.transform.transpose() * grad_theta;
    return lp;
  }

 private:
  const LogDensity& logp_;
  const LinearReparam& r_;
};

// One leapfrog trajectory from `start`; returns the end point and its
// Hamiltonian (infinite when the trajectory left the finite region).
double trajectory(const ReparamTarget& target, const Point& start, const Vector& p0,
                  double eps, int steps, Point& end) {
  end.u = start.u;
  end.grad = start.grad;
  Vector p = p0;
  double lp = start.logp;
  for (int s = 0; s < steps; ++s) {
    p.noalias() += 0.5 * eps * end.grad;
    end.u.noalias() += eps * p;
    lp = target(end.u, end.grad);
    if (!std::isfinite(lp) || !end.grad.allFinite()) return kInfinity;
    p.noalias() += 0.5 * eps * end.grad;
  }
  end.logp = lp;
  return -lp + 0.5 * p.squaredNorm();
}

double initial_step_size(const ReparamTarget& target, const Point& start, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  double eps = 1.0;
  Vector p(start.u.size());
  for (auto& v : p) v = normal(rng);
  const double h0 = -start.logp + 0.5 * p.squaredNorm();
  Point end;
  auto log_ratio = [&](double e) {
    const double h = trajectory(target, start, p, e, 1, end);
    return std::isfinite(h) ? h0 - h : -kInfinity;
  };
  double lr = log_ratio(eps);
  const double direction = lr > std::log(0.5) ? 1.0 : -1.0;
  for (int i = 0; i < 100; ++i) {
    if (direction * lr <= -direction * std::log(2.0)) break;
    eps *= direction > 0 ? 2.0 : 0.5;
    lr = log_ratio(eps);
  }
  return eps;
}

}  // namespace

ChainResult run_hmc_chain(const LogDensity& logp, const LinearReparam& reparam,
                          const Vector& u_init, const HmcOptions& opts, std::uint64_t seed) {
  if (opts.warmup < 0 || opts.warmup >= opts.iters) {
    throw Error("hmc: warmup must be in [0, iters)");
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> uniform;
  std::uniform_int_distribution<int> steps_dist(1, std::max(1, opts.max_leapfrog));

  const ReparamTarget target(logp, reparam);
  Point current;
  current.u = u_init;
  current.grad.resize(u_init.size());
  current.logp = target(current.u, current.grad);
  if (!std::isfinite(current.logp)) throw Error("hmc: initial point has non-finite density");

  double eps = initial_step_size(target, current, rng);
  DualAveraging adapt(eps, opts.target_accept);

  ChainResult out;
  const int kept = opts.iters - opts.warmup;
  out.draws.resize(kept, reparam.center.size());
  int accepted = 0;
  Vector p(u_init.size());
  Point proposal;
  for (int it = 0; it < opts.iters; ++it) {
    if (it == opts.warmup) eps = adapt.final_step();
    for (auto& v : p) v = normal(rng);
    const double h0 = -current.logp + 0.5 * p.squaredNorm();
    const int steps = steps_dist(rng);
    const double h1 = trajectory(target, current, p, eps, steps, proposal);
    const double delta = h1 - h0;
    const bool divergent = !std::isfinite(h1) || delta > opts.divergence_threshold;
    const double accept_stat = divergent ? 0.0 : std::min(1.0, std::exp(-delta));
    if (!divergent && uniform(rng) < accept_stat) {
      current = proposal;
      if (it >= opts.warmup) ++accepted;
    }
    if (it < opts.warmup) {
      eps = adapt.update(accept_stat);
    } else {
      if (divergent) ++out.divergences;
      out.draws.row(it - opts.warmup) = reparam.to_theta(current.u).transpose();
    }
  }
  out.step_size = eps;
  out.accept_rate = static_cast<double>(accepted) / kept;
  return out;
}

}  // namespace argoskit
