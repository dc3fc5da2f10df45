#include "argoskit/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "argoskit/smoothing.hpp"
#include "json.hpp"

namespace argoskit {

std::uint64_t equation_seed(std::uint64_t seed, int j) {
  return derive_seed(seed, streams::kEquation, static_cast<std::uint64_t>(j));
}

EquationModel discover_equation(const Matrix& X, const Vector& y, const DiscoverOptions& opts,
                                int j, std::optional<DiagnosticsReport>* diagnostics) {
  const std::uint64_t seed = equation_seed(opts.seed, j);
  const CandidateLibrary lib0 = build_library(X, opts.degree, opts.trig);
  const ScreenResult screened = screen(lib0, X, y, seed, opts.screen);
  if (screened.trimmed.size() == 0) {
    EquationModel eq;
    eq.empty = true;
    eq.rank_warning = screened.rank_warning;
    return eq;
  }
  BayesConfig cfg = opts.bayes;
  cfg.seed = seed;
  const PosteriorDraws draws = hmc_sample(screened.trimmed, y, cfg);
  const PosteriorSummary summary = summarize(draws, cfg);
  EquationModel eq = select_terms(summary, screened.trimmed);
  eq.rank_warning = screened.rank_warning;
  if (diagnostics) *diagnostics = diagnose(screened.trimmed, y, summary);
  return eq;
}

DiscoveredModel discover(const Trajectory& traj, const DiscoverOptions& opts) {
  opts.bayes.validate();
  const SmoothedData smooth = smooth_and_differentiate(traj);
  DiscoveredModel model;
  model.meta = {traj.size(), opts.snr_db, opts.seed, opts.degree, opts.trig};
  const int m = static_cast<int>(traj.dim());
  model.equations.resize(static_cast<std::size_t>(m));
  model.diagnostics.resize(static_cast<std::size_t>(m));
  for (int j = 0; j < m; ++j) {
    auto& eq = model.equations[static_cast<std::size_t>(j)];
    try {
      eq = discover_equation(smooth.X, smooth.Xdot.col(j), opts, j,
                             opts.diagnostics ? &model.diagnostics[static_cast<std::size_t>(j)]
                                              : nullptr);
    } catch (const std::exception& e) {
      eq = EquationModel{};
      eq.empty = true;
      eq.converged = false;
      eq.error = e.what();
    }
  }
  return model;
}

namespace {

std::vector<std::string> sorted_names(const std::vector<TermDescriptor>& terms) {
  std::vector<std::string> out;
  for (const auto& t : terms) out.push_back(t.name());
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

bool compare_truth(const DiscoveredModel& model,
                   const std::vector<std::vector<TermDescriptor>>& truth) {
  if (model.equations.size() != truth.size()) {
    throw DimensionMismatchError("compare_truth: model has " +
                                 std::to_string(model.equations.size()) +
                                 " equations, truth has " + std::to_string(truth.size()));
  }
  for (std::size_t j = 0; j < truth.size(); ++j) {
    const auto& eq = model.equations[j];
    if (eq.error) return false;
    std::vector<TermDescriptor> found;
    for (const auto& t : eq.terms) found.push_back(t.term);
    if (sorted_names(found) != sorted_names(truth[j])) return false;
  }
  return true;
}

bool compare_truth(const DiscoveredModel& model, const DynamicalSystem& sys) {
  return compare_truth(model, sys.truth);
}

SparseFit stlsq_baseline(const CandidateLibrary& lib, const Vector& y, double threshold,
                         double ridge_penalty) {
  if (!(threshold > 0.0)) throw Error("stlsq_baseline: threshold must be positive");
  if (lib.rows() != y.size()) throw DimensionMismatchError("stlsq_baseline: row mismatch");
  const Eigen::Index n = lib.rows();
  std::vector<Eigen::Index> active(static_cast<std::size_t>(lib.size()));
  for (Eigen::Index k = 0; k < lib.size(); ++k) active[static_cast<std::size_t>(k)] = k;

  auto fit = [&](const std::vector<Eigen::Index>& cols) {
    Matrix A(n, static_cast<Eigen::Index>(cols.size()));
    for (std::size_t i = 0; i < cols.size(); ++i) A.col(static_cast<Eigen::Index>(i)) = lib.theta.col(cols[i]);
    if (ridge_penalty > 0.0) {
      Matrix G = A.transpose() * A;
      G.diagonal().array() += ridge_penalty;
      return Vector(G.ldlt().solve(A.transpose() * y));
    }
    return Vector(A.colPivHouseholderQr().solve(y));
  };

  Vector coeffs;
  for (int iter = 0; iter < 50 && !active.empty(); ++iter) {
    coeffs = fit(active);
    std::vector<Eigen::Index> keep;
    for (std::size_t i = 0; i < active.size(); ++i) {
      if (std::abs(coeffs(static_cast<Eigen::Index>(i))) >= threshold) keep.push_back(active[i]);
    }
    if (keep.size() == active.size()) break;
    active = std::move(keep);
    if (!active.empty()) coeffs = fit(active);
  }

  SparseFit out;
  out.threshold = threshold;
  out.support = active;
  out.coeffs = active.empty() ? Vector() : coeffs;
  Vector fitted = Vector::Zero(n);
  for (std::size_t i = 0; i < active.size(); ++i) {
    fitted += out.coeffs(static_cast<Eigen::Index>(i)) * lib.theta.col(active[i]);
  }
  out.rss = (y - fitted).squaredNorm();
  out.bic = bic(out.rss, n, static_cast<Eigen::Index>(active.size()));
  return out;
}

std::string equation_lhs(int j) { return "dx" + std::to_string(j + 1) + "/dt"; }

std::string model_json(const DiscoveredModel& model, int indent) {
  using nlohmann::ordered_json;
  ordered_json j;
  auto eqs = ordered_json::array();
  std::vector<bool> converged;
  for (std::size_t i = 0; i < model.equations.size(); ++i) {
    const auto& eq = model.equations[i];
    ordered_json e;
    e["lhs"] = equation_lhs(static_cast<int>(i));
    auto terms = ordered_json::array();
    for (const auto& t : eq.terms) {
      terms.push_back({{"name", t.term.name()}, {"mean", t.mean}, {"ci_lo", t.ci_lo},
                       {"ci_hi", t.ci_hi}});
    }
    e["terms"] = std::move(terms);
    e["converged"] = eq.converged;
    e["rank_warning"] = eq.rank_warning;
    if (eq.error) e["error"] = *eq.error;
    eqs.push_back(std::move(e));
    converged.push_back(eq.converged);
  }
  j["equations"] = std::move(eqs);
  ordered_json meta;
  meta["n"] = model.meta.n;
  if (std::isinf(model.meta.snr_db)) {
    meta["snr_db"] = "inf";
  } else {
    meta["snr_db"] = model.meta.snr_db;
  }
  meta["seed"] = model.meta.seed;
  meta["degree"] = model.meta.degree;
  meta["trig"] = model.meta.trig;
  meta["converged"] = converged;
  j["meta"] = std::move(meta);
  return j.dump(indent);
}

DiscoveredModel parse_model_json(const std::string& text) {
  DiscoveredModel model;
  try {
    const auto j = nlohmann::json::parse(text);
    const auto& eqs = j.at("equations");
    const int dim = static_cast<int>(eqs.size());
    for (const auto& e : eqs) {
      EquationModel eq;
      for (const auto& t : e.at("terms")) {
        eq.terms.push_back({TermDescriptor::parse(t.at("name").get<std::string>(), dim),
                            t.at("mean").get<double>(), t.at("ci_lo").get<double>(),
                            t.at("ci_hi").get<double>()});
      }
      eq.empty = eq.terms.empty();
      eq.converged = e.value("converged", true);
      eq.rank_warning = e.value("rank_warning", false);
      if (e.contains("error")) eq.error = e.at("error").get<std::string>();
      model.equations.push_back(std::move(eq));
    }
    const auto& meta = j.at("meta");
    model.meta.n = meta.at("n").get<Eigen::Index>();
    const auto& snr = meta.at("snr_db");
    model.meta.snr_db = snr.is_string() ? kInfinity : snr.get<double>();
    model.meta.seed = meta.at("seed").get<std::uint64_t>();
    model.meta.degree = meta.at("degree").get<int>();
    model.meta.trig = meta.at("trig").get<bool>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("model json: ") + e.what());
  }
  model.diagnostics.resize(model.equations.size());
  return model;
}

void write_model_json(const std::string& path, const DiscoveredModel& model) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path + " for writing");
  out << model_json(model) << '\n';
}

DiscoveredModel read_model_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_model_json(ss.str());
}

std::string model_text(const DiscoveredModel& model) {
  std::string out;
  for (std::size_t j = 0; j < model.equations.size(); ++j) {
    out += format_equation(model.equations[j], equation_lhs(static_cast<int>(j)));
    if (model.equations[j].error) out += "  [error: " + *model.equations[j].error + "]";
    out += '\n';
  }
  return out;
}

}  // namespace argoskit
