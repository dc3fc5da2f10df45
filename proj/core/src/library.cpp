#include "argoskit/library.hpp"

#include <algorithm>
#include <functional>

#include "json.hpp"

namespace argoskit {

namespace {

// Exponent vectors of exactly `total` degree, lexicographically descending.
void exponents_of_degree(int dim, int total, std::vector<std::vector<int>>& out) {
  std::vector<int> current(static_cast<std::size_t>(dim), 0);
  std::function<void(int, int)> fill = [&](int var, int remaining) {
    if (var == dim - 1) {
      current[static_cast<std::size_t>(var)] = remaining;
      out.push_back(current);
      return;
    }
    for (int e = remaining; e >= 0; --e) {
      current[static_cast<std::size_t>(var)] = e;
      fill(var + 1, remaining - e);
    }
    current[static_cast<std::size_t>(var)] = 0;
  };
  fill(0, total);
}

Vector column_scales(const Matrix& theta, const std::vector<TermDescriptor>& terms) {
  Vector scales(theta.cols());
  for (Eigen::Index k = 0; k < theta.cols(); ++k) {
    scales(k) = terms[static_cast<std::size_t>(k)].is_intercept() ? 0.0 : sample_sd(theta.col(k));
  }
  return scales;
}

}  // namespace

std::optional<Eigen::Index> CandidateLibrary::index_of(const TermDescriptor& term) const {
  auto it = std::find(terms.begin(), terms.end(), term);
  if (it == terms.end()) return std::nullopt;
  return static_cast<Eigen::Index>(it - terms.begin());
}

std::vector<std::string> CandidateLibrary::names() const {
  std::vector<std::string> out;
  out.reserve(terms.size());
  for (const auto& t : terms) out.push_back(t.name());
  return out;
}

std::vector<std::vector<int>> monomial_exponents(int dim, int degree) {
  std::vector<std::vector<int>> out;
  for (int d = 0; d <= degree; ++d) exponents_of_degree(dim, d, out);
  return out;
}

CandidateLibrary library_from_terms(const Matrix& X, const std::vector<TermDescriptor>& terms) {
  CandidateLibrary lib;
  lib.terms = terms;
  const Eigen::Index n = X.rows();
  const Eigen::Index p = static_cast<Eigen::Index>(terms.size());
  lib.theta.resize(n, p);
  // Row-major copy so each row is a contiguous state vector.
  const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rows = X;
  for (Eigen::Index i = 0; i < n; ++i) {
    std::span<const double> state(rows.row(i).data(), static_cast<std::size_t>(X.cols()));
    for (Eigen::Index k = 0; k < p; ++k) {
      lib.theta(i, k) = terms[static_cast<std::size_t>(k)].evaluate(state);
    }
  }
  lib.scales = column_scales(lib.theta, lib.terms);
  int degree = 0;
  for (const auto& t : terms) {
    if (t.is_unary()) {
      lib.trig = true;
    } else {
      degree = std::max(degree, t.degree());
    }
  }
  lib.degree = degree;
  return lib;
}

CandidateLibrary build_library(const Matrix& X, int degree, bool trig) {
  if (degree < 1) throw Error("build_library: degree must be >= 1");
  if (X.rows() < 1) throw Error("build_library: need at least one row");
  const int dim = static_cast<int>(X.cols());
  std::vector<TermDescriptor> terms;
  for (auto& e : monomial_exponents(dim, degree)) {
    terms.push_back(TermDescriptor::monomial(std::move(e)));
  }
  if (trig) {
    for (int j = 0; j < dim; ++j) terms.push_back(TermDescriptor::unary(UnaryKind::Sin, j, dim));
    for (int j = 0; j < dim; ++j) terms.push_back(TermDescriptor::unary(UnaryKind::Cos, j, dim));
  }
  CandidateLibrary lib = library_from_terms(X, terms);
  lib.degree = degree;
  lib.trig = trig;
  return lib;
}

CandidateLibrary refine_library(const CandidateLibrary& lib,
                                const std::vector<TermDescriptor>& support, const Matrix& X) {
  if (support.empty()) throw EmptySupportError("refine_library: empty support");
  int degree = 1;
  for (const auto& t : support) {
    if (!lib.index_of(t)) throw Error("refine_library: term '" + t.name() + "' not in library");
    degree = std::max(degree, t.degree());
  }
  return build_library(X, degree, lib.trig);
}

CandidateLibrary select_columns(const CandidateLibrary& lib,
                                const std::vector<Eigen::Index>& columns) {
  CandidateLibrary out;
  out.theta.resize(lib.theta.rows(), static_cast<Eigen::Index>(columns.size()));
  out.scales.resize(static_cast<Eigen::Index>(columns.size()));
  for (std::size_t c = 0; c < columns.size(); ++c) {
    const auto k = columns[c];
    out.theta.col(static_cast<Eigen::Index>(c)) = lib.theta.col(k);
    out.scales(static_cast<Eigen::Index>(c)) = lib.scales(k);
    out.terms.push_back(lib.terms[static_cast<std::size_t>(k)]);
    if (out.terms.back().is_unary()) {
      out.trig = true;
    } else {
      out.degree = std::max(out.degree, out.terms.back().degree());
    }
  }
  return out;
}

std::string library_terms_json(const CandidateLibrary& lib) {
  return nlohmann::json(lib.names()).dump();
}

}  // namespace argoskit
