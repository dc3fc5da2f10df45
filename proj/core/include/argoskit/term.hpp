#pragma once

#include <compare>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace argoskit {

enum class UnaryKind { Sin, Cos };

struct UnaryFunction {
  UnaryKind kind = UnaryKind::Sin;
  int var = 0;  // zero-based state index

  auto operator<=>(const UnaryFunction&) const = default;
};

/// One candidate basis function: either a monomial prod_j x_j^{e_j} or a
/// unary function of a single state variable (exponents all zero).
class TermDescriptor {
 public:
  TermDescriptor() = default;

  static TermDescriptor intercept(int dim);
  static TermDescriptor monomial(std::vector<int> exponents);
  static TermDescriptor unary(UnaryKind kind, int var, int dim);

  /// Parses a canonical name ("1", "x2", "x1^2*x3", "sin(x2)") for a state of
  /// dimension `dim`. Throws ParseError on malformed input.
  static TermDescriptor parse(std::string_view name, int dim);

  const std::vector<int>& exponents() const { return exponents_; }
  const std::optional<UnaryFunction>& func() const { return func_; }
  int dim() const { return static_cast<int>(exponents_.size()); }

  bool is_intercept() const;
  bool is_unary() const { return func_.has_value(); }

  /// Total monomial degree; unary terms report 1.
  int degree() const;

  double evaluate(std::span<const double> state) const;

  /// Canonical printable name, deterministic from the fields.
  std::string name() const;

  bool operator==(const TermDescriptor&) const = default;

 private:
  std::vector<int> exponents_;
  std::optional<UnaryFunction> func_;
};

}  // namespace argoskit
