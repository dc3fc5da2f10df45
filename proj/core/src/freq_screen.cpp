#include "argoskit/freq_screen.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

namespace argoskit {

namespace {

// Columns entering a penalised fit, centred (when the library has an
// intercept) and scaled to unit sample sd.
struct Design {
  Eigen::Index n = 0;
  std::optional<Eigen::Index> intercept;
  std::vector<Eigen::Index> cols;
  Vector mean;
  Vector scale;
  Matrix Z;
  Vector yc;
  double ymean = 0.0;
  double ysd = 0.0;
};

std::optional<Eigen::Index> intercept_column(const CandidateLibrary& lib) {
  for (std::size_t k = 0; k < lib.terms.size(); ++k) {
    if (lib.terms[k].is_intercept()) return static_cast<Eigen::Index>(k);
  }
  return std::nullopt;
}

// `include(k)` filters the non-intercept columns; constant columns are
// always left out because they carry no information beyond the intercept.
template <typename Pred>
Design make_design(const CandidateLibrary& lib, const Vector& y, Pred include) {
  Design d;
  d.n = lib.rows();
  d.intercept = intercept_column(lib);
  for (Eigen::Index k = 0; k < lib.size(); ++k) {
    if (d.intercept && k == *d.intercept) continue;
    if (!(lib.scales(k) > 0.0) || !include(k)) continue;
    d.cols.push_back(k);
  }
  const auto q = static_cast<Eigen::Index>(d.cols.size());
  d.mean = Vector::Zero(q);
  d.scale.resize(q);
  d.Z.resize(d.n, q);
  for (Eigen::Index c = 0; c < q; ++c) {
    const auto col = lib.theta.col(d.cols[static_cast<std::size_t>(c)]);
    if (d.intercept) d.mean(c) = col.mean();
    d.scale(c) = lib.scales(d.cols[static_cast<std::size_t>(c)]);
    d.Z.col(c) = (col.array() - d.mean(c)) / d.scale(c);
  }
  d.ymean = d.intercept ? y.mean() : 0.0;
  d.yc = y.array() - d.ymean;
  d.ysd = sample_sd(y);
  return d;
}

// Maps standardised coefficients back to a dense original-scale vector.
Vector to_original(const CandidateLibrary& lib, const Design& d, const Vector& b) {
  Vector beta = Vector::Zero(lib.size());
  double offset = 0.0;
  for (std::size_t c = 0; c < d.cols.size(); ++c) {
    const auto ci = static_cast<Eigen::Index>(c);
    beta(d.cols[c]) = b(ci) / d.scale(ci);
    offset += beta(d.cols[c]) * d.mean(ci);
  }
  if (d.intercept) beta(*d.intercept) = d.ymean - offset;
  return beta;
}

// Sufficient statistics of (z, y) over a subset of rows.
struct Moments {
  double count = 0.0;
  Vector sz;
  Matrix szz;
  double sy = 0.0;
  double syy = 0.0;
  Vector szy;

  explicit Moments(Eigen::Index q) : sz(Vector::Zero(q)), szz(Matrix::Zero(q, q)), szy(Vector::Zero(q)) {}

  Moments operator-(const Moments& o) const {
    Moments m(sz.size());
    m.count = count - o.count;
    m.sz = sz - o.sz;
    m.szz = szz - o.szz;
    m.sy = sy - o.sy;
    m.syy = syy - o.syy;
    m.szy = szy - o.szy;
    return m;
  }
};

// Per-fold training systems (Gram form) and held-out moments.
struct FoldSystem {
  Matrix G;
  Vector c;
  Vector zbar;
  double ybar = 0.0;
  Moments test;
};

struct CvProblem {
  std::vector<FoldSystem> folds;
  Eigen::Index n = 0;
};

CvProblem make_cv_problem(const Design& d, int folds, std::uint64_t seed) {
  const Eigen::Index q = d.Z.cols();
  const std::vector<int> label = cv_folds(d.n, folds, seed);
  std::vector<Moments> test(static_cast<std::size_t>(folds), Moments(q));
  for (int f = 0; f < folds; ++f) {
    std::vector<Eigen::Index> rows;
    for (Eigen::Index i = 0; i < d.n; ++i) {
      if (label[static_cast<std::size_t>(i)] == f) rows.push_back(i);
    }
    Matrix Zf(static_cast<Eigen::Index>(rows.size()), q);
    Vector yf(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
      Zf.row(static_cast<Eigen::Index>(r)) = d.Z.row(rows[r]);
      yf(static_cast<Eigen::Index>(r)) = d.yc(rows[r]);
    }
    auto& m = test[static_cast<std::size_t>(f)];
    m.count = static_cast<double>(rows.size());
    m.sz = Zf.colwise().sum().transpose();
    m.szz.selfadjointView<Eigen::Lower>().rankUpdate(Zf.transpose());
    m.szz = m.szz.selfadjointView<Eigen::Lower>();
    m.sy = yf.sum();
    m.syy = yf.squaredNorm();
    m.szy = Zf.transpose() * yf;
  }
  Moments total(q);
  for (const auto& m : test) {
    total.count += m.count;
    total.sz += m.sz;
    total.szz += m.szz;
    total.sy += m.sy;
    total.syy += m.syy;
    total.szy += m.szy;
  }

  CvProblem cv;
  cv.n = d.n;
  for (int f = 0; f < folds; ++f) {
    const Moments& held = test[static_cast<std::size_t>(f)];
    const Moments train = total - held;
    FoldSystem fs{Matrix(), Vector(), Vector(), 0.0, held};
    const double cnt = train.count;
    if (d.intercept) {
      fs.zbar = train.sz / cnt;
      fs.ybar = train.sy / cnt;
      fs.G = (train.szz - train.sz * fs.zbar.transpose()) / cnt;
      fs.c = (train.szy - train.sz * fs.ybar) / cnt;
    } else {
      fs.zbar = Vector::Zero(q);
      fs.G = train.szz / cnt;
      fs.c = train.szy / cnt;
    }
    cv.folds.push_back(std::move(fs));
  }
  return cv;
}

double heldout_sse(const FoldSystem& fs, const Vector& b) {
  const Moments& m = fs.test;
  const double a = fs.ybar - fs.zbar.dot(b);
  return m.syy - 2.0 * a * m.sy - 2.0 * b.dot(m.szy) + m.count * a * a +
         2.0 * a * b.dot(m.sz) + b.dot(m.szz * b);
}

double soft_threshold(double z, double t) {
  if (z > t) return z - t;
  if (z < -t) return z + t;
  return 0.0;
}

// Cyclic coordinate descent for (1/2) b'Gb - c'b + sum_k pen_k |b_k| with
// active-set cycling. Returns the number of sweeps.
int coordinate_descent(const Matrix& G, const Vector& c, const Vector& pen, Vector& b,
                       double tol, int max_sweeps) {
  const Eigen::Index q = G.rows();
  Vector g = c - G * b;
  auto update = [&](Eigen::Index k) {
    const double gkk = G(k, k);
    double next = 0.0;
    if (std::isfinite(pen(k)) && gkk > 1e-14) {
      next = soft_threshold(g(k) + gkk * b(k), pen(k)) / gkk;
    }
    const double delta = next - b(k);
    if (delta != 0.0) {
      b(k) = next;
      g.noalias() -= G.col(k) * delta;
    }
    return delta * delta * std::max(gkk, 0.0);
  };

  int sweeps = 0;
  std::vector<Eigen::Index> active;
  while (true) {
    double worst = 0.0;
    for (Eigen::Index k = 0; k < q; ++k) worst = std::max(worst, update(k));
    if (++sweeps > max_sweeps) break;
    if (worst < tol) return sweeps;

    active.clear();
    for (Eigen::Index k = 0; k < q; ++k) {
      if (b(k) != 0.0) active.push_back(k);
    }
    while (true) {
      worst = 0.0;
      for (auto k : active) worst = std::max(worst, update(k));
      if (++sweeps > max_sweeps || worst < tol) break;
    }
    if (sweeps > max_sweeps) break;
  }
  throw NonConvergenceError("adaptive lasso: coordinate descent did not converge in " +
                            std::to_string(max_sweeps) + " sweeps");
}

// Penalty weights on the standardised scale: w_k / s_k.
Vector standardised_weights(const Design& d, const Vector& weights) {
  Vector w(static_cast<Eigen::Index>(d.cols.size()));
  for (std::size_t c = 0; c < d.cols.size(); ++c) {
    w(static_cast<Eigen::Index>(c)) = weights(d.cols[c]) / d.scale(static_cast<Eigen::Index>(c));
  }
  return w;
}

template <typename Pred>
Design lasso_design(const CandidateLibrary& lib, const Vector& y, const Vector& weights,
                    Pred extra) {
  if (weights.size() != lib.size()) {
    throw DimensionMismatchError("adaptive lasso: weight vector length does not match library");
  }
  return make_design(lib, y, [&](Eigen::Index k) {
    return std::isfinite(weights(k)) && weights(k) >= 0.0 && extra(k);
  });
}

double lambda_max_of(const Design& d, const Vector& wstd) {
  if (d.cols.empty()) return 0.0;
  const Vector c = d.Z.transpose() * d.yc / static_cast<double>(d.n);
  double out = 0.0;
  for (Eigen::Index k = 0; k < c.size(); ++k) {
    if (wstd(k) > 0.0) out = std::max(out, std::abs(c(k)) / wstd(k));
  }
  return out;
}

// CV error (mean squared prediction error) along a lambda grid visited in the
// given order, warm-starting each fold from the previous grid point.
std::vector<double> cv_path(const CvProblem& cv, const Vector& wstd,
                            const std::vector<double>& grid, double tol, int max_sweeps) {
  std::vector<double> err(grid.size(), 0.0);
  for (const auto& fs : cv.folds) {
    Vector b = Vector::Zero(wstd.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
      coordinate_descent(fs.G, fs.c, grid[i] * wstd, b, tol, max_sweeps);
      err[i] += heldout_sse(fs, b);
    }
  }
  for (auto& e : err) e /= static_cast<double>(cv.n);
  return err;
}

std::size_t argmin_first(const std::vector<double>& v) {
  return static_cast<std::size_t>(std::min_element(v.begin(), v.end()) - v.begin());
}

double tolerance_for(const Design& d, const ScreenOptions& opts) {
  return opts.tolerance * (d.ysd > 0.0 ? d.ysd * d.ysd : 1.0);
}

}  // namespace

Vector SparseFit::dense(Eigen::Index p) const {
  Vector out = Vector::Zero(p);
  for (std::size_t i = 0; i < support.size(); ++i) {
    out(support[i]) = coeffs(static_cast<Eigen::Index>(i));
  }
  return out;
}

std::vector<int> cv_folds(Eigen::Index n, int folds, std::uint64_t seed) {
  if (folds < 2 || n < folds) {
    throw Error("cv_folds: need 2 <= folds <= n (folds=" + std::to_string(folds) +
                ", n=" + std::to_string(n) + ")");
  }
  const auto offset = static_cast<Eigen::Index>(splitmix64(seed) % static_cast<std::uint64_t>(n));
  std::vector<int> label(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Index shifted = (i + offset) % n;
    label[static_cast<std::size_t>(i)] = static_cast<int>(shifted * folds / n);
  }
  return label;
}

Vector ridge_fit(const CandidateLibrary& lib, const Vector& y, double alpha) {
  const Design d = make_design(lib, y, [](Eigen::Index) { return true; });
  const Eigen::Index q = d.Z.cols();
  if (q == 0) return to_original(lib, d, Vector());
  const double n = static_cast<double>(d.n);
  Matrix A = d.Z.transpose() * d.Z / n;
  A.diagonal().array() += alpha;
  const Vector c = d.Z.transpose() * d.yc / n;
  return to_original(lib, d, A.ldlt().solve(c));
}

Vector ridge_pilot(const CandidateLibrary& lib, const Vector& y, std::uint64_t seed,
                   const ScreenOptions& opts) {
  if (lib.rows() < 2) throw Error("ridge_pilot: need n > 1");
  const Design d = make_design(lib, y, [](Eigen::Index) { return true; });
  if (d.cols.empty()) return to_original(lib, d, Vector());

  std::vector<double> grid(static_cast<std::size_t>(opts.ridge_points));
  const double hi = std::log(opts.ridge_max), lo = std::log(opts.ridge_min);
  for (int i = 0; i < opts.ridge_points; ++i) {
    grid[static_cast<std::size_t>(i)] =
        std::exp(hi + (lo - hi) * i / std::max(1, opts.ridge_points - 1));
  }

  const CvProblem cv = make_cv_problem(d, opts.folds, seed);
  std::vector<double> err(grid.size(), 0.0);
  for (const auto& fs : cv.folds) {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(fs.G);
    const Vector proj = eig.eigenvectors().transpose() * fs.c;
    const Vector evals = eig.eigenvalues().cwiseMax(0.0);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const Vector b = eig.eigenvectors() * (proj.array() / (evals.array() + grid[i])).matrix();
      err[i] += heldout_sse(fs, b);
    }
  }
  return ridge_fit(lib, y, grid[argmin_first(err)]);
}

Vector adaptive_weights(const CandidateLibrary& lib, const Vector& pilot) {
  if (pilot.size() != lib.size()) {
    throw DimensionMismatchError("adaptive_weights: pilot length does not match library");
  }
  Vector w(lib.size());
  for (Eigen::Index k = 0; k < lib.size(); ++k) {
    if (lib.terms[static_cast<std::size_t>(k)].is_intercept()) {
      w(k) = 0.0;
    } else {
      w(k) = pilot(k) == 0.0 ? kInfinity : 1.0 / std::abs(pilot(k));
    }
  }
  return w;
}

double lambda_max(const CandidateLibrary& lib, const Vector& y, const Vector& weights) {
  const Design d = lasso_design(lib, y, weights, [](Eigen::Index) { return true; });
  return lambda_max_of(d, standardised_weights(d, weights));
}

Vector lasso_fit(const CandidateLibrary& lib, const Vector& y, const Vector& weights,
                 double lambda, const ScreenOptions& opts) {
  const Design d = lasso_design(lib, y, weights, [](Eigen::Index) { return true; });
  const Eigen::Index q = d.Z.cols();
  Vector b = Vector::Zero(q);
  if (q > 0) {
    const double n = static_cast<double>(d.n);
    const Matrix G = d.Z.transpose() * d.Z / n;
    const Vector c = d.Z.transpose() * d.yc / n;
    coordinate_descent(G, c, lambda * standardised_weights(d, weights), b,
                       tolerance_for(d, opts), opts.max_sweeps);
  }
  return to_original(lib, d, b);
}

double lasso_objective(const CandidateLibrary& lib, const Vector& y, const Vector& weights,
                       double lambda, const Vector& coeffs) {
  const Vector r = y - lib.theta * coeffs;
  double penalty = 0.0;
  for (Eigen::Index k = 0; k < lib.size(); ++k) {
    if (lib.terms[static_cast<std::size_t>(k)].is_intercept() || coeffs(k) == 0.0) continue;
    penalty += weights(k) * std::abs(coeffs(k));
  }
  return 0.5 * r.squaredNorm() / static_cast<double>(lib.rows()) + lambda * penalty;
}

double two_phase_lambda(const CandidateLibrary& lib, const Vector& y, const Vector& weights,
                        std::uint64_t seed, const ScreenOptions& opts, LambdaSearch* trace) {
  const Design d = lasso_design(lib, y, weights, [](Eigen::Index) { return true; });
  const Vector wstd = standardised_weights(d, weights);
  const double top = lambda_max_of(d, wstd);
  LambdaSearch search;
  search.lambda_max = top;
  if (top <= 0.0) {
    if (trace) *trace = search;
    return 0.0;
  }
  const double tol = tolerance_for(d, opts);
  const CvProblem cv = make_cv_problem(d, opts.folds, seed);

  const int m1 = opts.lambda_points;
  search.phase1_grid.resize(static_cast<std::size_t>(m1));
  for (int i = 0; i < m1; ++i) {
    search.phase1_grid[static_cast<std::size_t>(i)] =
        top * std::pow(opts.lambda_min_ratio, static_cast<double>(i) / std::max(1, m1 - 1));
  }
  search.phase1_cv = cv_path(cv, wstd, search.phase1_grid, tol, opts.max_sweeps);
  search.lambda0 = search.phase1_grid[argmin_first(search.phase1_cv)];

  // Phase 2: uniform grid on [lambda0/10, 1.1 lambda0], visited from the top
  // for warm starts and stored in ascending order.
  const int m2 = opts.refine_points;
  const double lo = search.lambda0 / 10.0, hi = 1.1 * search.lambda0;
  std::vector<double> descending(static_cast<std::size_t>(m2));
  for (int i = 0; i < m2; ++i) {
    descending[static_cast<std::size_t>(i)] = hi - (hi - lo) * i / std::max(1, m2 - 1);
  }
  descending.back() = lo;
  std::vector<double> err = cv_path(cv, wstd, descending, tol, opts.max_sweeps);
  search.lambda = descending[argmin_first(err)];
  search.phase2_grid.assign(descending.rbegin(), descending.rend());
  search.phase2_cv.assign(err.rbegin(), err.rend());
  if (trace) *trace = std::move(search);
  return descending[argmin_first(err)];
}

LassoPath adaptive_lasso(const CandidateLibrary& lib, const Vector& y, const Vector& weights,
                         std::uint64_t seed, const ScreenOptions& opts) {
  LassoPath path;
  path.weights = weights;
  path.lambda = two_phase_lambda(lib, y, weights, seed, opts);
  path.coeffs = lasso_fit(lib, y, weights, path.lambda, opts);
  return path;
}

double bic(double rss, Eigen::Index n, Eigen::Index k) {
  const double nn = static_cast<double>(n);
  return nn * std::log(std::max(rss, 1e-300) / nn) + static_cast<double>(k) * std::log(nn);
}

SparseFit ols_refit(const CandidateLibrary& lib, const Vector& y,
                    const std::vector<Eigen::Index>& support) {
  SparseFit fit;
  const Eigen::Index n = lib.rows();
  std::vector<Eigen::Index> cols = support;
  std::sort(cols.begin(), cols.end());
  if (cols.empty()) {
    fit.coeffs = Vector();
    fit.rss = y.squaredNorm();
    fit.bic = bic(fit.rss, n, 0);
    return fit;
  }
  auto solve = [&](const std::vector<Eigen::Index>& use, Vector& coef) {
    Matrix A(n, static_cast<Eigen::Index>(use.size()));
    Vector norms(static_cast<Eigen::Index>(use.size()));
    for (std::size_t c = 0; c < use.size(); ++c) {
      const auto ci = static_cast<Eigen::Index>(c);
      A.col(ci) = lib.theta.col(use[c]);
      norms(ci) = A.col(ci).norm();
      if (norms(ci) > 0.0) A.col(ci) /= norms(ci);
    }
    Eigen::ColPivHouseholderQR<Matrix> qr(A.rows(), A.cols());
    qr.setThreshold(1e-10);
    qr.compute(A);
    coef = qr.solve(y).cwiseQuotient(norms.cwiseMax(1e-300));
    return qr;
  };
  Vector coef;
  auto qr = solve(cols, coef);
  const auto rank = qr.rank();
  if (rank < static_cast<Eigen::Index>(cols.size())) {
    fit.rank_deficient = true;
    std::vector<Eigen::Index> keep;
    for (Eigen::Index r = 0; r < rank; ++r) {
      keep.push_back(cols[static_cast<std::size_t>(qr.colsPermutation().indices()(r))]);
    }
    std::sort(keep.begin(), keep.end());
    cols = keep;
    if (!cols.empty()) solve(cols, coef);
  }
  fit.support = cols;
  fit.coeffs = cols.empty() ? Vector() : coef;
  Vector resid = y;
  for (std::size_t c = 0; c < cols.size(); ++c) {
    resid -= lib.theta.col(cols[c]) * fit.coeffs(static_cast<Eigen::Index>(c));
  }
  fit.rss = resid.squaredNorm();
  fit.bic = bic(fit.rss, n, static_cast<Eigen::Index>(cols.size()));
  return fit;
}

const std::vector<double>& threshold_grid() {
  static const std::vector<double> grid = {1e-8, 1e-7, 1e-6, 1e-5, 1e-4,
                                           1e-3, 1e-2, 1e-1, 1e0,  1e1};
  return grid;
}

std::vector<SparseFit> threshold_candidates(const CandidateLibrary& lib, const Vector& y,
                                            const Vector& lasso_coeffs) {
  std::vector<SparseFit> out;
  std::map<std::vector<Eigen::Index>, bool> seen;
  for (double eta : threshold_grid()) {
    std::vector<Eigen::Index> support;
    for (Eigen::Index k = 0; k < lasso_coeffs.size(); ++k) {
      if (std::abs(lasso_coeffs(k)) >= eta) support.push_back(k);
    }
    if (seen.contains(support)) continue;
    seen[support] = true;
    SparseFit fit = ols_refit(lib, y, support);
    fit.threshold = eta;
    out.push_back(std::move(fit));
  }
  return out;
}

SparseFit threshold_sweep(const CandidateLibrary& lib, const Vector& y,
                          const Vector& lasso_coeffs) {
  auto candidates = threshold_candidates(lib, y, lasso_coeffs);
  std::size_t best = 0;
  for (std::size_t i = 1; i < candidates.size(); ++i) {
    if (candidates[i].bic < candidates[best].bic) best = i;
  }
  return candidates[best];
}

ScreenResult screen(const CandidateLibrary& lib0, const Matrix& X, const Vector& y,
                    std::uint64_t seed, const ScreenOptions& opts) {
  ScreenResult r;
  const std::uint64_t seed1 = derive_seed(seed, streams::kFolds, 1);
  const std::uint64_t seed2 = derive_seed(seed, streams::kFolds, 2);

  const Vector pilot1 = ridge_pilot(lib0, y, seed1, opts);
  r.lasso1 = adaptive_lasso(lib0, y, adaptive_weights(lib0, pilot1), seed1, opts);
  r.lasso1.pilot_kind = PilotKind::Ridge;
  r.pass1 = threshold_sweep(lib0, y, r.lasso1.coeffs);

  std::vector<TermDescriptor> support1;
  for (auto k : r.pass1.support) support1.push_back(lib0.terms[static_cast<std::size_t>(k)]);
  if (support1.empty()) {
    r.pass1_empty = true;
    r.refined = lib0;
  } else {
    r.refined = refine_library(lib0, support1, X);
  }

  // OLS pilots on the pass-1 support; columns it does not cover fall back to
  // ridge pilots on the whole refined library so they stay eligible.
  Vector pilot2 = ridge_pilot(r.refined, y, seed2, opts);
  if (!support1.empty()) {
    std::vector<Eigen::Index> idx;
    for (const auto& t : support1) idx.push_back(*r.refined.index_of(t));
    const SparseFit ols = ols_refit(r.refined, y, idx);
    for (std::size_t i = 0; i < ols.support.size(); ++i) {
      const double v = ols.coeffs(static_cast<Eigen::Index>(i));
      if (v != 0.0) pilot2(ols.support[i]) = v;
    }
  }
  r.lasso2 = adaptive_lasso(r.refined, y, adaptive_weights(r.refined, pilot2), seed2, opts);
  r.lasso2.pilot_kind = PilotKind::Ols;
  r.pass2 = threshold_sweep(r.refined, y, r.lasso2.coeffs);

  r.trimmed = select_columns(r.refined, r.pass2.support);
  r.support = r.trimmed.terms;
  r.rank_warning = r.pass1.rank_deficient || r.pass2.rank_deficient;
  return r;
}

}  // namespace argoskit
