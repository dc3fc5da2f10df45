#include "argoskit/bayes.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <random>

namespace argoskit {

void BayesConfig::validate() const {
  if (chains < 1) throw Error("BayesConfig: chains must be >= 1");
  if (warmup < 0 || warmup >= iters) throw Error("BayesConfig: need 0 <= warmup < iters");
  if (!(ci_level > 0.0 && ci_level < 1.0)) throw Error("BayesConfig: ci_level must be in (0, 1)");
  if (!(target_accept > 0.0 && target_accept < 1.0)) {
    throw Error("BayesConfig: target_accept must be in (0, 1)");
  }
  if (max_leapfrog < 1) throw Error("BayesConfig: max_leapfrog must be >= 1");
}

namespace {

double response_scale(const Vector& y) {
  const double sd = sample_sd(y);
  if (sd > 0.0) return sd;
  return std::max(std::abs(y.size() > 0 ? y.mean() : 0.0), 1.0);
}

}  // namespace

RegressionPosterior::RegressionPosterior(const CandidateLibrary& trimmed, const Vector& y,
                                         std::optional<double> fixed_sigma)
    : fixed_sigma_(fixed_sigma) {
  if (trimmed.size() < 1) throw Error("RegressionPosterior: empty library");
  if (trimmed.rows() <= trimmed.size()) {
    throw Error("RegressionPosterior: need more observations than terms");
  }
  const double sy = response_scale(y);
  prior_sd_.resize(trimmed.size());
  for (Eigen::Index k = 0; k < trimmed.size(); ++k) {
    const double sx = trimmed.scales(k);
    prior_sd_(k) = sx > 0.0 ? 2.5 * sy / sx : 2.5 * sy;
  }
  sigma_rate_ = 1.0 / sy;
  init(trimmed.theta, y);
}

RegressionPosterior::RegressionPosterior(const Matrix& theta, const Vector& y, Vector prior_sd,
                                         double sigma_rate, std::optional<double> fixed_sigma)
    : prior_sd_(std::move(prior_sd)), sigma_rate_(sigma_rate), fixed_sigma_(fixed_sigma) {
  if (prior_sd_.size() != theta.cols()) {
    throw DimensionMismatchError("RegressionPosterior: prior sd length does not match design");
  }
  init(theta, y);
}

void RegressionPosterior::init(const Matrix& theta, const Vector& y) {
  if (theta.rows() != y.size()) {
    throw DimensionMismatchError("RegressionPosterior: design and response lengths differ");
  }
  n_ = theta.rows();
  gram_ = theta.transpose() * theta;
  // Equilibrated pivoted QR for the least-squares anchor.
  Vector norms = theta.colwise().norm().transpose().cwiseMax(1e-300);
  const Matrix scaled = theta * norms.cwiseInverse().asDiagonal();
  beta_ls_ = scaled.colPivHouseholderQr().solve(y).cwiseQuotient(norms);
  rss_min_ = (y - theta * beta_ls_).squaredNorm();
}

double RegressionPosterior::rss(const Vector& beta) const {
  const Vector d = beta - beta_ls_;
  return rss_min_ + d.dot(gram_ * d);
}

double RegressionPosterior::log_density(const Vector& theta, Vector& grad) const {
  const Eigen::Index p = coefficients();
  grad.resize(dim());
  const auto beta = theta.head(p);
  const Vector d = beta - beta_ls_;
  const Vector gd = gram_ * d;
  const double rss = rss_min_ + d.dot(gd);
  const Vector inv_var = prior_sd_.array().square().inverse().matrix();
  const double prior = -0.5 * beta.cwiseProduct(beta).dot(inv_var);

  if (fixed_sigma_) {
    const double s2 = *fixed_sigma_ * *fixed_sigma_;
    grad = -gd / s2 - beta.cwiseProduct(inv_var);
    return -0.5 * rss / s2 + prior;
  }
  const double u = theta(p);
  const double sigma = std::exp(u);
  const double s2 = sigma * sigma;
  const double nn = static_cast<double>(n_);
  grad.head(p) = -gd / s2 - beta.cwiseProduct(inv_var);
  grad(p) = -nn + rss / s2 - sigma_rate_ * sigma + 1.0;
  return -nn * u - 0.5 * rss / s2 + prior - sigma_rate_ * sigma + u;
}

LinearReparam RegressionPosterior::reparam() const {
  const Eigen::Index p = coefficients();
  const double nn = static_cast<double>(n_);
  double sigma_hat = fixed_sigma_ ? *fixed_sigma_
                                  : std::sqrt(rss_min_ / std::max(1.0, nn - static_cast<double>(p)));
  const double floor = 1e-10 * std::max(std::sqrt(gram_.diagonal().maxCoeff() / nn) *
                                            beta_ls_.cwiseAbs().maxCoeff(),
                                        1e-300);
  sigma_hat = std::max(sigma_hat, floor);

  Matrix precision = gram_ / (sigma_hat * sigma_hat);
  precision.diagonal() += prior_sd_.array().square().inverse().matrix();
  const Vector dscale = precision.diagonal().cwiseSqrt();
  const Matrix equil = dscale.cwiseInverse().asDiagonal() * precision * dscale.cwiseInverse().asDiagonal();

  LinearReparam r;
  r.center.resize(dim());
  r.transform = Matrix::Zero(dim(), dim());
  Eigen::LLT<Matrix> llt(equil);
  Matrix block;
  if (llt.info() == Eigen::Success) {
    const Matrix inv_lt = llt.matrixU().solve(Matrix::Identity(p, p));  // L^{-T}
    block = dscale.cwiseInverse().asDiagonal() * inv_lt;
    r.center.head(p) = dscale.cwiseInverse().asDiagonal() *
                       llt.solve(dscale.cwiseInverse().asDiagonal() * (gram_ * beta_ls_)) /
                       (sigma_hat * sigma_hat);
  } else {
    block = dscale.cwiseInverse().asDiagonal();
    r.center.head(p) = beta_ls_;
  }
  r.transform.topLeftCorner(p, p) = block;
  if (!fixed_sigma_) {
    r.center(p) = std::log(sigma_hat);
    r.transform(p, p) = std::sqrt(1.0 / (2.0 * nn));
  }
  return r;
}

Vector PosteriorDraws::sigma() const {
  if (!has_sigma) throw Error("PosteriorDraws: sigma was not sampled");
  return samples.col(samples.cols() - 1);
}

PosteriorDraws hmc_sample(const RegressionPosterior& posterior, std::vector<std::string> names,
                          const BayesConfig& cfg) {
  cfg.validate();
  if (static_cast<Eigen::Index>(names.size()) != posterior.coefficients()) {
    throw DimensionMismatchError("hmc_sample: name count does not match coefficient count");
  }
  const LinearReparam reparam = posterior.reparam();
  const LogDensity logp = [&posterior](const Vector& theta, Vector& grad) {
    return posterior.log_density(theta, grad);
  };
  HmcOptions opts;
  opts.iters = cfg.iters;
  opts.warmup = cfg.warmup;
  opts.target_accept = cfg.target_accept;
  opts.max_leapfrog = cfg.max_leapfrog;

  PosteriorDraws out;
  out.names = std::move(names);
  out.chains = cfg.chains;
  out.per_chain = cfg.iters - cfg.warmup;
  out.has_sigma = posterior.samples_sigma();
  const Eigen::Index dim = posterior.dim();
  out.samples.resize(static_cast<Eigen::Index>(out.chains) * out.per_chain, dim);
  for (int c = 0; c < cfg.chains; ++c) {
    std::mt19937_64 init_rng(derive_seed(cfg.seed, streams::kChains, 2 * c));
    std::uniform_real_distribution<double> init(-2.0, 2.0);
    Vector u0(dim);
    for (auto& v : u0) v = init(init_rng);
    ChainResult chain =
        run_hmc_chain(logp, reparam, u0, opts, derive_seed(cfg.seed, streams::kChains, 2 * c + 1));
    if (out.has_sigma) chain.draws.col(dim - 1) = chain.draws.col(dim - 1).array().exp();
    out.samples.middleRows(static_cast<Eigen::Index>(c) * out.per_chain, out.per_chain) = chain.draws;
    out.divergences += chain.divergences;
    out.step_sizes.push_back(chain.step_size);
  }
  const double rate = static_cast<double>(out.divergences) / static_cast<double>(out.samples.rows());
  if (rate > cfg.max_divergence_rate) {
    throw DivergenceError("hmc_sample: " + std::to_string(out.divergences) + " of " +
                          std::to_string(out.samples.rows()) +
                          " post-warmup transitions diverged");
  }
  return out;
}

PosteriorDraws hmc_sample(const CandidateLibrary& trimmed, const Vector& y,
                          const BayesConfig& cfg) {
  const RegressionPosterior posterior(trimmed, y);
  return hmc_sample(posterior, trimmed.names(), cfg);
}

double quantile_sorted(const std::vector<double>& sorted, double prob) {
  if (sorted.empty()) throw Error("quantile of empty sample");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * prob;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= sorted.size()) return sorted.back();
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[lo + 1] - sorted[lo]);
}

double split_rhat(const Matrix& draws) {
  const Eigen::Index half = draws.rows() / 2;
  if (half < 2) return kInfinity;
  const Eigen::Index chains = 2 * draws.cols();
  Matrix split(half, chains);
  for (Eigen::Index c = 0; c < draws.cols(); ++c) {
    split.col(2 * c) = draws.col(c).head(half);
    split.col(2 * c + 1) = draws.col(c).tail(half);
  }
  const double n = static_cast<double>(half);
  const Vector means = split.colwise().mean().transpose();
  double within = 0.0;
  for (Eigen::Index c = 0; c < chains; ++c) {
    within += (split.col(c).array() - means(c)).square().sum() / (n - 1.0);
  }
  within /= static_cast<double>(chains);
  const double between = n * (means.array() - means.mean()).square().sum() /
                         static_cast<double>(chains - 1);
  if (within <= 0.0) return between <= 0.0 ? 1.0 : kInfinity;
  const double var_plus = (n - 1.0) / n * within + between / n;
  return std::sqrt(var_plus / within);
}

double effective_sample_size(const Matrix& draws) {
  const Eigen::Index n = draws.rows();
  const Eigen::Index m = draws.cols();
  if (n < 4) return static_cast<double>(n * m);
  const double nn = static_cast<double>(n);
  const Vector means = draws.colwise().mean().transpose();
  Matrix centred = draws.rowwise() - means.transpose();
  Vector chain_var(m);
  for (Eigen::Index c = 0; c < m; ++c) chain_var(c) = centred.col(c).squaredNorm() / (nn - 1.0);
  const double within = chain_var.mean();
  const double between = m > 1 ? nn * (means.array() - means.mean()).square().sum() /
                                     static_cast<double>(m - 1)
                                : 0.0;
  const double var_plus = (nn - 1.0) / nn * within + between / nn;
  if (var_plus <= 0.0) return static_cast<double>(n * m);

  auto rho = [&](Eigen::Index lag) {
    double acov = 0.0;
    for (Eigen::Index c = 0; c < m; ++c) {
      acov += centred.col(c).head(n - lag).dot(centred.col(c).tail(n - lag)) / nn;
    }
    acov /= static_cast<double>(m);
    return 1.0 - (within - acov) / var_plus;
  };
  // Geyer's initial monotone positive sequence on pairs of autocorrelations.
  double tau = -1.0;
  double prev_pair = kInfinity;
  for (Eigen::Index t = 0; t + 1 < n; t += 2) {
    double pair = (t == 0 ? 1.0 : rho(t)) + rho(t + 1);
    if (pair <= 0.0) break;
    pair = std::min(pair, prev_pair);
    prev_pair = pair;
    tau += 2.0 * pair;
  }
  tau = std::max(tau, 1.0 / std::log10(static_cast<double>(n * m)));
  return static_cast<double>(n * m) / tau;
}

double mcse_mean(const Matrix& draws) {
  const Eigen::Map<const Vector> pooled(draws.data(), draws.size());
  return sample_sd(pooled) / std::sqrt(effective_sample_size(draws));
}

Matrix chain_matrix(const PosteriorDraws& draws, Eigen::Index col) {
  Matrix out(draws.per_chain, draws.chains);
  for (int c = 0; c < draws.chains; ++c) {
    out.col(c) = draws.samples.col(col).segment(static_cast<Eigen::Index>(c) * draws.per_chain,
                                                draws.per_chain);
  }
  return out;
}

bool retain_term(double mean, double ci_lo, double ci_hi) {
  const bool excludes_zero = ci_lo > 0.0 || ci_hi < 0.0;
  const double slack = 1e-12 * std::max(std::abs(ci_lo), std::abs(ci_hi));
  const bool mean_inside = mean >= ci_lo - slack && mean <= ci_hi + slack;
  return excludes_zero && mean_inside;
}

PosteriorSummary summarize(const PosteriorDraws& draws, const BayesConfig& cfg) {
  if (draws.chains < 2) throw Error("summarize: need at least 2 chains");
  PosteriorSummary out;
  out.draws = draws;
  const double tail = (1.0 - cfg.ci_level) / 2.0;
  for (Eigen::Index k = 0; k < draws.samples.cols(); ++k) {
    const Matrix chains = chain_matrix(draws, k);
    const double rhat = split_rhat(chains);
    out.max_rhat = std::max(out.max_rhat, std::isnan(rhat) ? kInfinity : rhat);
    if (draws.has_sigma && k == draws.samples.cols() - 1) {
      out.sigma_mean = draws.samples.col(k).mean();
      continue;
    }
    TermPosterior t;
    t.name = static_cast<std::size_t>(k) < draws.names.size() ? draws.names[static_cast<std::size_t>(k)]
                                                              : "beta" + std::to_string(k);
    const auto col = draws.samples.col(k);
    t.mean = col.mean();
    t.sd = sample_sd(col);
    std::vector<double> sorted(col.data(), col.data() + col.size());
    std::sort(sorted.begin(), sorted.end());
    t.ci_lo = quantile_sorted(sorted, tail);
    t.ci_hi = quantile_sorted(sorted, 1.0 - tail);
    t.rhat = rhat;
    t.ess = effective_sample_size(chains);
    t.retained = retain_term(t.mean, t.ci_lo, t.ci_hi);
    out.terms.push_back(std::move(t));
  }
  out.converged = out.max_rhat < kRhatThreshold;
  return out;
}

std::vector<std::string> EquationModel::names() const {
  std::vector<std::string> out;
  for (const auto& t : terms) out.push_back(t.term.name());
  return out;
}

EquationModel select_terms(const PosteriorSummary& summary, const CandidateLibrary& trimmed) {
  if (summary.terms.size() != trimmed.terms.size()) {
    throw DimensionMismatchError("select_terms: summary and library sizes differ");
  }
  EquationModel eq;
  for (std::size_t k = 0; k < summary.terms.size(); ++k) {
    const auto& t = summary.terms[k];
    if (t.retained) eq.terms.push_back({trimmed.terms[k], t.mean, t.ci_lo, t.ci_hi});
  }
  eq.empty = eq.terms.empty();
  eq.converged = summary.converged;
  return eq;
}

std::string format_equation(const EquationModel& eq, const std::string& lhs) {
  std::string out = lhs + " =";
  if (eq.terms.empty()) return out + " 0";
  bool first = true;
  for (const auto& t : eq.terms) {
    char buf[64];
    const double mag = first ? t.mean : std::abs(t.mean);
    std::snprintf(buf, sizeof(buf), "%.6g", mag);
    if (!first) out += t.mean < 0 ? " -" : " +";
    out += ' ';
    out += buf;
    if (!t.term.is_intercept()) out += ' ' + t.term.name();
    first = false;
  }
  return out;
}

void write_draws_csv(std::ostream& out, const PosteriorDraws& draws) {
  out << "chain,iter";
  for (const auto& n : draws.names) out << ",beta_" << n;
  if (draws.has_sigma) out << ",sigma";
  out << '\n';
  for (Eigen::Index r = 0; r < draws.samples.rows(); ++r) {
    out << (r / draws.per_chain + 1) << ',' << (r % draws.per_chain + 1);
    for (Eigen::Index c = 0; c < draws.samples.cols(); ++c) {
      out << ',' << format_double(draws.samples(r, c));
    }
    out << '\n';
  }
}

}  // namespace argoskit
