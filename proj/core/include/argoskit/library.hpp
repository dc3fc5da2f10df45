#pragma once

// Candidate design matrix of monomials and optional sin/cos terms.

#include <optional>
#include <string>
#include <vector>

#include "argoskit/common.hpp"
#include "argoskit/term.hpp"

namespace argoskit {

struct CandidateLibrary {
  Matrix theta;                      // n x p
  std::vector<TermDescriptor> terms; // p descriptors, column order
  Vector scales;                     // column sample sd; intercept reports 0
  int degree = 0;
  bool trig = false;

  Eigen::Index rows() const { return theta.rows(); }
  Eigen::Index size() const { return static_cast<Eigen::Index>(terms.size()); }

  std::optional<Eigen::Index> index_of(const TermDescriptor& term) const;
  std::vector<std::string> names() const;
};

/// Monomial exponent vectors of total degree <= `degree` in `dim` variables:
/// intercept first, then by total degree, then lexicographically with
/// higher powers of lower-indexed variables first (x1^2, x1*x2, ...).
std::vector<std::vector<int>> monomial_exponents(int dim, int degree);

/// All monomials up to `degree` plus, when `trig`, sin(x_j) then cos(x_j).
CandidateLibrary build_library(const Matrix& X, int degree, bool trig);

/// Rebuilds the library up to the largest degree in `support` (unary terms
/// count as degree 1, an intercept-only support as degree 1), keeping the trig
/// block if the source library had one. Throws EmptySupportError on an empty
/// support.
CandidateLibrary refine_library(const CandidateLibrary& lib,
                                const std::vector<TermDescriptor>& support, const Matrix& X);

/// Column subset in the given order; scales and descriptors follow.
CandidateLibrary select_columns(const CandidateLibrary& lib,
                                const std::vector<Eigen::Index>& columns);

/// Library with the given descriptors evaluated on X (columns in given order).
CandidateLibrary library_from_terms(const Matrix& X, const std::vector<TermDescriptor>& terms);

/// Ordered JSON array of term names.
std::string library_terms_json(const CandidateLibrary& lib);

}  // namespace argoskit
