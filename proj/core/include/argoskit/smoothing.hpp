#pragma once

// Adaptive Savitzky-Golay smoothing and differentiation.

#include <vector>

#include "argoskit/common.hpp"
#include "argoskit/ode_bench.hpp"

namespace argoskit {

inline constexpr int kSgOrder = 4;
inline constexpr int kSgMinWindow = 13;
inline constexpr int kSgMaxWindow = 101;

/// Local least-squares polynomial fit of `order` over a centred window of odd
/// length `window`. deriv = 0 returns the fitted value, deriv = 1 the first
/// time derivative (sample spacing dt). The (window-1)/2 samples at each end
/// are evaluated off-centre on the nearest full window.
///
/// Throws InvalidWindowError if the window is even, longer than the series,
/// or not longer than the polynomial order, or if deriv is not 0 or 1.
Vector sg_filter(const Eigen::Ref<const Vector>& series, int order, int window, int deriv,
                 double dt);

struct SmoothedData {
  Matrix X;
  Matrix Xdot;
  std::vector<int> window_per_column;
  int order = kSgOrder;
};

/// Candidate window lengths {13, 15, ..., l_max} for a series of n samples.
std::vector<int> sg_window_grid(Eigen::Index n);

/// Per column, picks the window minimising the in-sample reconstruction SSE
/// (ties go to the smaller window), then smooths and differentiates with it.
/// Throws TooFewSamplesError when n < 13.
SmoothedData smooth_and_differentiate(const Matrix& noisy, double dt);
SmoothedData smooth_and_differentiate(const Trajectory& noisy);

}  // namespace argoskit
