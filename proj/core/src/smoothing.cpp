#include "argoskit/smoothing.hpp"

#include <algorithm>
#include <string>

namespace argoskit {

namespace {

// Evaluation weights for every position of one window: row r of `value`
// holds the weights that map the window samples to the fitted polynomial at
// window position r; `slope` likewise for the derivative in abscissa units.
struct SgKernel {
  Matrix value;  // window x window
  Matrix slope;  // window x window
  double abscissa_scale = 1.0;
};

SgKernel make_kernel(int order, int window) {
  const int half = (window - 1) / 2;
  const double scale = half > 0 ? static_cast<double>(half) : 1.0;
  Matrix vander(window, order + 1);
  for (int j = 0; j < window; ++j) {
    const double u = (j - half) / scale;
    double p = 1.0;
    for (int k = 0; k <= order; ++k) {
      vander(j, k) = p;
      p *= u;
    }
  }
  // Coefficient projector (V^T V)^{-1} V^T, via QR for conditioning.
  const Matrix projector = vander.colPivHouseholderQr().solve(Matrix::Identity(window, window));

  Matrix basis_value(window, order + 1);
  Matrix basis_slope = Matrix::Zero(window, order + 1);
  for (int r = 0; r < window; ++r) {
    const double u = (r - half) / scale;
    double p = 1.0;
    for (int k = 0; k <= order; ++k) {
      basis_value(r, k) = p;
      p *= u;
    }
    for (int k = 1; k <= order; ++k) basis_slope(r, k) = k * basis_value(r, k - 1);
  }
  return {basis_value * projector, basis_slope * projector, scale};
}

void validate(Eigen::Index n, int order, int window, int deriv) {
  if (window < 1 || window % 2 == 0) {
    throw InvalidWindowError("sg_filter: window must be a positive odd integer, got " +
                             std::to_string(window));
  }
  if (window > n) {
    throw InvalidWindowError("sg_filter: window " + std::to_string(window) +
                             " exceeds series length " + std::to_string(n));
  }
  if (order < 0 || order >= window) {
    throw InvalidWindowError("sg_filter: window " + std::to_string(window) +
                             " must exceed polynomial order " + std::to_string(order));
  }
  if (deriv != 0 && deriv != 1) {
    throw InvalidWindowError("sg_filter: deriv must be 0 or 1");
  }
}

Vector apply_kernel(const Eigen::Ref<const Vector>& series, const Matrix& weights,
                    double factor) {
  const Eigen::Index n = series.size();
  const Eigen::Index window = weights.rows();
  const Eigen::Index half = (window - 1) / 2;
  Vector out(n);
  const auto centre = weights.row(half);
  for (Eigen::Index i = half; i < n - half; ++i) {
    out(i) = centre.dot(series.segment(i - half, window));
  }
  const auto head = series.head(window);
  const auto tail = series.tail(window);
  for (Eigen::Index r = 0; r < half; ++r) {
    out(r) = weights.row(r).dot(head);
    out(n - half + r) = weights.row(half + 1 + r).dot(tail);
  }
  return out * factor;
}

}  // namespace

Vector sg_filter(const Eigen::Ref<const Vector>& series, int order, int window, int deriv,
                 double dt) {
  validate(series.size(), order, window, deriv);
  if (deriv == 1 && !(dt > 0.0)) throw InvalidWindowError("sg_filter: dt must be positive");
  const SgKernel kernel = make_kernel(order, window);
  if (deriv == 0) return apply_kernel(series, kernel.value, 1.0);
  return apply_kernel(series, kernel.slope, 1.0 / (kernel.abscissa_scale * dt));
}

std::vector<int> sg_window_grid(Eigen::Index n) {
  const auto largest_odd = static_cast<int>(std::min<Eigen::Index>(n - (n - 1) % 2, kSgMaxWindow));
  const int l_max = std::max(kSgMinWindow, largest_odd);
  std::vector<int> grid;
  for (int l = kSgMinWindow; l <= l_max; l += 2) grid.push_back(l);
  return grid;
}

SmoothedData smooth_and_differentiate(const Matrix& noisy, double dt) {
  const Eigen::Index n = noisy.rows();
  if (n < kSgMinWindow) {
    throw TooFewSamplesError("smoothing needs at least " + std::to_string(kSgMinWindow) +
                             " samples, got " + std::to_string(n));
  }
  const std::vector<int> grid = sg_window_grid(n);
  std::vector<SgKernel> kernels;
  kernels.reserve(grid.size());
  for (int l : grid) kernels.push_back(make_kernel(kSgOrder, l));

  SmoothedData out;
  out.X.resize(n, noisy.cols());
  out.Xdot.resize(n, noisy.cols());
  for (Eigen::Index j = 0; j < noisy.cols(); ++j) {
    const Vector column = noisy.col(j);
    // Reconstruction errors at round-off level count as ties.
    const double tie = 1e-12 * column.squaredNorm();
    std::size_t best = 0;
    double best_sse = kInfinity;
    for (std::size_t w = 0; w < grid.size(); ++w) {
      const double sse = (apply_kernel(column, kernels[w].value, 1.0) - column).squaredNorm();
      if (sse < best_sse - tie) {
        best_sse = sse;
        best = w;
      }
    }
    const SgKernel& k = kernels[best];
    out.window_per_column.push_back(grid[best]);
    out.X.col(j) = apply_kernel(column, k.value, 1.0);
    out.Xdot.col(j) = apply_kernel(column, k.slope, 1.0 / (k.abscissa_scale * dt));
  }
  return out;
}

SmoothedData smooth_and_differentiate(const Trajectory& noisy) {
  return smooth_and_differentiate(noisy.states, noisy.dt);
}

}  // namespace argoskit
