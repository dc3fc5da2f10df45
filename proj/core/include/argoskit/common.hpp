#pragma once

#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace argoskit {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class UnknownSystemError : public Error {
 public:
  using Error::Error;
};

/// Step-size underflow or non-finite state during integration.
class IntegrationError : public Error {
 public:
  using Error::Error;
};

class InvalidWindowError : public Error {
 public:
  using Error::Error;
};

class TooFewSamplesError : public Error {
 public:
  using Error::Error;
};

/// Screening selected nothing; callers fall back to the unrefined library.
class EmptySupportError : public Error {
 public:
  using Error::Error;
};

class NonConvergenceError : public Error {
 public:
  using Error::Error;
};

/// More than the allowed fraction of HMC trajectories diverged.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

class SingularMatrixError : public Error {
 public:
  using Error::Error;
};

class TooFewDrawsError : public Error {
 public:
  using Error::Error;
};

class DimensionMismatchError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

// Counter-based seed derivation (splitmix64 finalizer). Sub-seeds for
// independent random streams are derived as derive_seed(master, stream, index)
// so results never depend on scheduling order.
std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream,
                          std::uint64_t index = 0);

namespace streams {
inline constexpr std::uint64_t kInitialCondition = 1;
inline constexpr std::uint64_t kNoise = 2;
inline constexpr std::uint64_t kFolds = 3;
inline constexpr std::uint64_t kChains = 4;
inline constexpr std::uint64_t kTrial = 5;
inline constexpr std::uint64_t kEquation = 6;
}  // namespace streams

/// Sample standard deviation with (n - 1) denominator; 0 for fewer than 2 values.
double sample_sd(const Eigen::Ref<const Vector>& v);

/// Formats a double with 17 significant digits ("inf"/"-inf"/"nan" for non-finite).
std::string format_double(double value);

}  // namespace argoskit
