#include "argoskit/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Eigenvalues>

#include "json.hpp"

namespace argoskit {

namespace {

nlohmann::ordered_json number_or_inf(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return nullptr;
  return v;
}

}  // namespace

std::vector<std::optional<double>> vif(const CandidateLibrary& trimmed) {
  const Eigen::Index n = trimmed.rows();
  const Eigen::Index p = trimmed.size();
  if (n <= p) throw Error("vif: need more observations than columns");
  std::vector<Eigen::Index> regressors;
  for (Eigen::Index k = 0; k < p; ++k) {
    if (!trimmed.terms[static_cast<std::size_t>(k)].is_intercept()) regressors.push_back(k);
  }
  std::vector<std::optional<double>> out(static_cast<std::size_t>(p));
  for (auto k : regressors) {
    const Vector target = trimmed.theta.col(k);
    const double tss = (target.array() - target.mean()).square().sum();
    if (!(tss > 0.0)) {
      out[static_cast<std::size_t>(k)] = kInfinity;
      continue;
    }
    Matrix A(n, static_cast<Eigen::Index>(regressors.size()));
    A.col(0).setOnes();
    Eigen::Index c = 1;
    for (auto j : regressors) {
      if (j == k) continue;
      A.col(c++) = trimmed.theta.col(j);
    }
    const Vector norms = A.colwise().norm().transpose().cwiseMax(1e-300);
    const Matrix scaled = A * norms.cwiseInverse().asDiagonal();
    const Vector fitted = scaled * scaled.colPivHouseholderQr().solve(target);
    const double r2 = 1.0 - (target - fitted).squaredNorm() / tss;
    out[static_cast<std::size_t>(k)] = r2 >= 1.0 - 1e-12 ? kInfinity : 1.0 / (1.0 - r2);
  }
  return out;
}

GpdFit fit_gpd_pwm(std::vector<double> x) {
  if (x.empty()) throw Error("fit_gpd_pwm: no exceedances");
  std::sort(x.begin(), x.end());
  const double m = static_cast<double>(x.size());
  double a0 = 0.0, a1 = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double plotting = (static_cast<double>(i + 1) - 0.35) / m;
    a0 += x[i];
    a1 += (1.0 - plotting) * x[i];
  }
  a0 /= m;
  a1 /= m;
  const double denom = a0 - 2.0 * a1;
  if (!(a0 > 0.0) || !(denom > 0.0)) return {0.0, 0.0};
  return {2.0 - a0 / denom, 2.0 * a0 * a1 / denom};
}

Eigen::Index psis_tail_length(Eigen::Index draws) {
  const double s = static_cast<double>(draws);
  return static_cast<Eigen::Index>(std::min(std::ceil(0.2 * s), std::ceil(3.0 * std::sqrt(s))));
}

Vector psis_loo(const PosteriorDraws& draws, const CandidateLibrary& trimmed, const Vector& y) {
  const Eigen::Index S = draws.samples.rows();
  if (S < 100) {
    throw TooFewDrawsError("psis_loo: need at least 100 draws, got " + std::to_string(S));
  }
  if (!draws.has_sigma) throw Error("psis_loo: draws must include sigma");
  if (draws.coefficients() != trimmed.size() || trimmed.rows() != y.size()) {
    throw DimensionMismatchError("psis_loo: draws, library and response do not agree");
  }
  const Matrix beta = draws.beta();
  const Vector log_sigma = draws.sigma().array().log();
  const Vector inv_two_var = (2.0 * draws.sigma().array().square()).inverse();
  const Eigen::Index M = psis_tail_length(S);

  Vector khat(y.size());
  Vector log_ratio(S);
  std::vector<double> tail(static_cast<std::size_t>(M) + 1);
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    const Vector mu = beta * trimmed.theta.row(i).transpose();
    // log(1 / N(y_i | mu, sigma)) up to the constant 0.5 log(2 pi)
    log_ratio = log_sigma.array() + (y(i) - mu.array()).square() * inv_two_var.array();
    std::vector<double> lr(log_ratio.data(), log_ratio.data() + S);
    std::nth_element(lr.begin(), lr.begin() + (S - M - 1), lr.end());
    std::copy(lr.begin() + (S - M - 1), lr.end(), tail.begin());
    std::sort(tail.begin(), tail.end());
    const double top = tail.back();
    const double cutoff = std::exp(tail.front() - top);
    std::vector<double> exceed(static_cast<std::size_t>(M));
    for (Eigen::Index j = 0; j < M; ++j) {
      exceed[static_cast<std::size_t>(j)] = std::exp(tail[static_cast<std::size_t>(j) + 1] - top) - cutoff;
    }
    khat(i) = fit_gpd_pwm(std::move(exceed)).shape;
  }
  return khat;
}

std::vector<std::pair<double, double>> residual_diagnostics(const PosteriorDraws& draws,
                                                            const CandidateLibrary& trimmed,
                                                            const Vector& y) {
  if (draws.coefficients() != trimmed.size() || trimmed.rows() != y.size()) {
    throw DimensionMismatchError("residual_diagnostics: draws, library and response do not agree");
  }
  // The predictive mean is linear in beta, so it equals Theta * E[beta].
  const Vector beta_mean = draws.beta().colwise().mean().transpose();
  const Vector mu = trimmed.theta * beta_mean;
  std::vector<std::pair<double, double>> out;
  out.reserve(static_cast<std::size_t>(y.size()));
  for (Eigen::Index i = 0; i < y.size(); ++i) out.emplace_back(mu(i), y(i) - mu(i));
  return out;
}

DiagnosticsReport diagnose(const CandidateLibrary& trimmed, const Vector& y,
                           const PosteriorSummary& summary) {
  DiagnosticsReport r;
  const auto v = vif(trimmed);
  for (std::size_t k = 0; k < v.size(); ++k) {
    r.vif.emplace_back(trimmed.terms[k].name(), v[k]);
    if (v[k] && *v[k] > kVifThreshold) r.flags.multicollinearity = true;
  }
  r.khat = psis_loo(summary.draws, trimmed, y);
  r.flags.influential = (r.khat.array() > kKhatThreshold).any();
  r.residuals = residual_diagnostics(summary.draws, trimmed, y);
  r.flags.convergence = !summary.converged;
  return r;
}

std::string diagnostics_json(const DiagnosticsReport& report, int indent) {
  nlohmann::ordered_json j;
  j["vif"] = nlohmann::ordered_json::object();
  for (const auto& [name, value] : report.vif) {
    if (value) j["vif"][name] = number_or_inf(*value);
  }
  j["khat"] = std::vector<double>(report.khat.data(), report.khat.data() + report.khat.size());
  auto residuals = nlohmann::ordered_json::array();
  for (const auto& [mu, r] : report.residuals) residuals.push_back({mu, r});
  j["residuals"] = std::move(residuals);
  j["flags"] = {{"multicollinearity", report.flags.multicollinearity},
                {"influential", report.flags.influential},
                {"convergence", report.flags.convergence}};
  return j.dump(indent);
}

Vector ModalAnalysis::propagate(const Vector& z0, double t) const {
  Eigen::VectorXcd lam(static_cast<Eigen::Index>(eigenvalues.size()));
  for (std::size_t i = 0; i < eigenvalues.size(); ++i) {
    lam(static_cast<Eigen::Index>(i)) = std::exp(eigenvalues[i] * t);
  }
  const Eigen::VectorXcd y0 = (z0 - equilibrium).cast<std::complex<double>>();
  const Eigen::VectorXcd coeffs = eigenvectors.partialPivLu().solve(y0);
  const Eigen::VectorXcd yt = eigenvectors * lam.cwiseProduct(coeffs);
  return equilibrium + yt.real();
}

ModalAnalysis analyze_affine_modes(const Matrix& A, const Vector& b) {
  if (A.rows() != A.cols() || A.rows() != b.size() || A.rows() == 0) {
    throw DimensionMismatchError("analyze_affine_modes: A must be m x m and b of length m");
  }
  Eigen::JacobiSVD<Matrix> svd(A);
  const Vector sv = svd.singularValues();
  const double smin = sv(sv.size() - 1);
  if (!(smin > 0.0) || sv(0) / smin >= 1e12) {
    throw SingularMatrixError("analyze_affine_modes: A is singular or ill-conditioned");
  }
  ModalAnalysis out;
  out.equilibrium = -A.fullPivLu().solve(b);

  Eigen::EigenSolver<Matrix> eig(A);
  if (eig.info() != Eigen::Success) throw Error("analyze_affine_modes: eigen decomposition failed");
  const Eigen::VectorXcd vals = eig.eigenvalues();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(vals.size()));
  for (Eigen::Index i = 0; i < vals.size(); ++i) order[static_cast<std::size_t>(i)] = i;
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index c) {
    const double ia = std::abs(vals(a).imag()), ic = std::abs(vals(c).imag());
    if (ia != ic) return ia > ic;
    if (vals(a).imag() != vals(c).imag()) return vals(a).imag() > vals(c).imag();
    return vals(a).real() > vals(c).real();
  });
  out.eigenvectors.resize(A.rows(), A.cols());
  const double tiny = 1e-12 * std::max(1.0, vals.cwiseAbs().maxCoeff());
  for (std::size_t i = 0; i < order.size(); ++i) {
    const auto lam = vals(order[i]);
    out.eigenvalues.push_back(lam);
    out.eigenvectors.col(static_cast<Eigen::Index>(i)) = eig.eigenvectors().col(order[i]);
    const double re = std::abs(lam.real());
    out.half_lives.push_back(re > 0.0 ? std::numbers::ln2 / re : kInfinity);
    if (lam.imag() > tiny) {
      out.periods.push_back(2.0 * std::numbers::pi / lam.imag());
    } else if (std::abs(lam.imag()) <= tiny) {
      out.decay_timescales.push_back(re > 0.0 ? 1.0 / re : kInfinity);
    }
  }
  return out;
}

std::string modal_analysis_json(const ModalAnalysis& modes, int indent) {
  nlohmann::ordered_json j;
  j["equilibrium"] = std::vector<double>(modes.equilibrium.data(),
                                         modes.equilibrium.data() + modes.equilibrium.size());
  auto eig = nlohmann::ordered_json::array();
  for (const auto& l : modes.eigenvalues) eig.push_back({{"re", l.real()}, {"im", l.imag()}});
  j["eigenvalues"] = std::move(eig);
  auto list = [](const std::vector<double>& v) {
    auto a = nlohmann::ordered_json::array();
    for (double x : v) a.push_back(number_or_inf(x));
    return a;
  };
  j["periods"] = list(modes.periods);
  j["half_lives"] = list(modes.half_lives);
  j["decay_timescales"] = list(modes.decay_timescales);
  return j.dump(indent);
}

}  // namespace argoskit
