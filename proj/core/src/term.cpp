#include "argoskit/term.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>

#include "argoskit/common.hpp"

namespace argoskit {

namespace {

int parse_variable(std::string_view token, int dim, std::string_view whole) {
  if (token.size() < 2 || token.front() != 'x') {
    throw ParseError("malformed term '" + std::string(whole) + "'");
  }
  int index = 0;
  const auto* first = token.data() + 1;
  const auto* last = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(first, last, index);
  if (ec != std::errc{} || ptr != last || index < 1 || index > dim) {
    throw ParseError("bad variable '" + std::string(token) + "' in term '" +
                     std::string(whole) + "'");
  }
  return index - 1;
}

}  // namespace

TermDescriptor TermDescriptor::intercept(int dim) {
  TermDescriptor t;
  t.exponents_.assign(static_cast<std::size_t>(dim), 0);
  return t;
}

TermDescriptor TermDescriptor::monomial(std::vector<int> exponents) {
  for (int e : exponents) {
    if (e < 0) throw Error("monomial exponents must be nonnegative");
  }
  TermDescriptor t;
  t.exponents_ = std::move(exponents);
  return t;
}

TermDescriptor TermDescriptor::unary(UnaryKind kind, int var, int dim) {
  if (var < 0 || var >= dim) throw Error("unary term variable out of range");
  TermDescriptor t;
  t.exponents_.assign(static_cast<std::size_t>(dim), 0);
  t.func_ = UnaryFunction{kind, var};
  return t;
}

TermDescriptor TermDescriptor::parse(std::string_view name, int dim) {
  if (name == "1") return intercept(dim);
  for (auto [prefix, kind] : {std::pair{std::string_view("sin("), UnaryKind::Sin},
                              std::pair{std::string_view("cos("), UnaryKind::Cos}}) {
    if (name.starts_with(prefix)) {
      if (!name.ends_with(")")) throw ParseError("malformed term '" + std::string(name) + "'");
      auto inner = name.substr(prefix.size(), name.size() - prefix.size() - 1);
      return unary(kind, parse_variable(inner, dim, name), dim);
    }
  }
  std::vector<int> exps(static_cast<std::size_t>(dim), 0);
  std::size_t pos = 0;
  while (pos <= name.size()) {
    auto star = name.find('*', pos);
    auto factor = name.substr(pos, star == std::string_view::npos ? name.size() - pos : star - pos);
    int power = 1;
    auto caret = factor.find('^');
    auto var_token = factor.substr(0, caret);
    if (caret != std::string_view::npos) {
      auto p = factor.substr(caret + 1);
      auto [ptr, ec] = std::from_chars(p.data(), p.data() + p.size(), power);
      if (ec != std::errc{} || ptr != p.data() + p.size() || power < 1) {
        throw ParseError("bad exponent in term '" + std::string(name) + "'");
      }
    }
    exps[static_cast<std::size_t>(parse_variable(var_token, dim, name))] += power;
    if (star == std::string_view::npos) break;
    pos = star + 1;
  }
  return monomial(std::move(exps));
}

bool TermDescriptor::is_intercept() const {
  return !func_ && std::all_of(exponents_.begin(), exponents_.end(),
                               [](int e) { return e == 0; });
}

int TermDescriptor::degree() const {
  if (func_) return 1;
  return std::accumulate(exponents_.begin(), exponents_.end(), 0);
}

double TermDescriptor::evaluate(std::span<const double> state) const {
  if (func_) {
    const double v = state[static_cast<std::size_t>(func_->var)];
    return func_->kind == UnaryKind::Sin ? std::sin(v) : std::cos(v);
  }
  double out = 1.0;
  for (std::size_t j = 0; j < exponents_.size(); ++j) {
    for (int e = 0; e < exponents_[j]; ++e) out *= state[j];
  }
  return out;
}

std::string TermDescriptor::name() const {
  if (func_) {
    return std::string(func_->kind == UnaryKind::Sin ? "sin" : "cos") + "(x" +
           std::to_string(func_->var + 1) + ")";
  }
  std::string out;
  for (std::size_t j = 0; j < exponents_.size(); ++j) {
    if (exponents_[j] == 0) continue;
    if (!out.empty()) out += '*';
    out += 'x' + std::to_string(j + 1);
    if (exponents_[j] > 1) out += '^' + std::to_string(exponents_[j]);
  }
  return out.empty() ? "1" : out;
}

}  // namespace argoskit
