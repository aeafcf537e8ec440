#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "das3d/error.hpp"
#include "das3d/image.hpp"

namespace das3d {

/// Parameters of the bivariate skew normal density 2 phi2(x; 0, S) Phi(a^T x).
/// The first vector component runs along image rows (y), the second along
/// columns (x).
struct SkewParams {
  std::array<double, 2> alpha{0.0, 0.0};
  std::array<std::array<double, 2>, 2> sigma{{{1.0, 0.0}, {0.0, 1.0}}};  ///< covariance, px^2

  static SkewParams isotropic(double std_px, std::array<double, 2> alpha = {0.0, 0.0}) {
    const double var = std_px * std_px;
    return {alpha, {{{var, 0.0}, {0.0, var}}}};
  }

  double determinant() const noexcept { return sigma[0][0] * sigma[1][1] - sigma[0][1] * sigma[1][0]; }

  double max_eigenvalue() const noexcept {
    const double half_trace = 0.5 * (sigma[0][0] + sigma[1][1]);
    const double disc = std::max(0.0, half_trace * half_trace - determinant());
    return half_trace + std::sqrt(disc);
  }

  friend bool operator==(const SkewParams&, const SkewParams&) = default;

  void validate() const {
    detail::require(std::isfinite(alpha[0]) && std::isfinite(alpha[1]), Errc::invalid_argument,
                    "skew coefficients must be finite");
    detail::require(sigma[0][1] == sigma[1][0], Errc::invalid_argument, "covariance must be symmetric");
    // Both eigenvalues positive <=> positive trace and determinant.
    detail::require(std::isfinite(determinant()) && determinant() > 0.0 && sigma[0][0] + sigma[1][1] > 0.0,
                    Errc::degenerate_input, "covariance must be positive definite");
  }
};

inline double standard_normal_cdf(double z) noexcept { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

inline double skew_pdf(std::array<double, 2> x, const SkewParams& params) {
  params.validate();
  const double det = params.determinant();
  const auto& s = params.sigma;
  // Quadratic form x^T S^-1 x with the explicit 2x2 inverse.
  const double q = (s[1][1] * x[0] * x[0] - 2.0 * s[0][1] * x[0] * x[1] + s[0][0] * x[1] * x[1]) / det;
  const double phi2 = std::exp(-0.5 * q) / (2.0 * std::numbers::pi * std::sqrt(det));
  return 2.0 * phi2 * standard_normal_cdf(params.alpha[0] * x[0] + params.alpha[1] * x[1]);
}

/// Discretized, sum-normalized skew normal density on an odd h x h grid.
class SkewKernel {
 public:
  SkewKernel() = default;
  SkewKernel(std::size_t size, std::vector<double> weights) : size_(size), weights_(std::move(weights)) {}

  std::size_t size() const noexcept { return size_; }
  std::size_t radius() const noexcept { return size_ / 2; }
  double operator()(std::size_t row, std::size_t col) const noexcept { return weights_[row * size_ + col]; }
  std::span<const double> weights() const noexcept { return weights_; }

  double sum() const noexcept {
    double acc = 0.0;
    for (double w : weights_) acc += w;
    return acc;
  }

 private:
  std::size_t size_ = 0;
  std::vector<double> weights_;
};

/// Smallest odd integer >= 6 sqrt(largest eigenvalue of the covariance).
inline std::size_t kernel_size_for(const SkewParams& params) {
  const double extent = 6.0 * std::sqrt(params.max_eigenvalue());
  auto h = static_cast<std::size_t>(std::ceil(extent));
  if (h % 2 == 0) ++h;
  return std::max<std::size_t>(h, 1);
}

/// Weight (i, j) is skew_pdf at offset (i - h/2, j - h/2) from the centre
/// cell, divided by the weight sum and rounded to multiples of 2^-52. `max_size`, when given, bounds h; a larger
/// kernel raises kernel_too_large so the caller can shrink the covariance.
inline SkewKernel build_kernel(const SkewParams& params, std::optional<std::size_t> max_size = std::nullopt) {
  params.validate();
  const std::size_t h = kernel_size_for(params);
  if (max_size && h > *max_size) {
    throw Error(Errc::kernel_too_large,
                "kernel size " + std::to_string(h) + " exceeds limit " + std::to_string(*max_size));
  }
  const auto c = static_cast<double>(h / 2);
  std::vector<double> w(h * h);
  double total = 0.0;
  for (std::size_t i = 0; i < h; ++i) {
    for (std::size_t j = 0; j < h; ++j) {
      w[i * h + j] = skew_pdf({static_cast<double>(i) - c, static_cast<double>(j) - c}, params);
      total += w[i * h + j];
    }
  }
  detail::require(total > 0.0 && std::isfinite(total), Errc::degenerate_input, "kernel mass underflowed");
  // Multiples of 2^-52 summing to exactly 1, residual on the largest weight:
  // any signed partial sum of the weights is then exact.
  constexpr double quantum = 0x1.0p-52;
  std::vector<std::int64_t> q(w.size());
  std::int64_t units = 0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    q[i] = std::llround(w[i] / total / quantum);
    units += q[i];
  }
  const auto largest = static_cast<std::size_t>(std::max_element(q.begin(), q.end()) - q.begin());
  q[largest] += (std::int64_t{1} << 52) - units;
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = static_cast<double>(q[i]) * quantum;
  return SkewKernel(h, std::move(w));
}

/// Zero-padded 2-D convolution, output the size of the input:
/// out(y, x) = sum_{a,b} k(a, b) * in(y - a + r, x - b + r). A unit impulse
/// therefore reproduces the kernel around its position.
template <typename Map>
FloatMap convolve(const Map& map, const SkewKernel& kernel) {
  const std::size_t h = kernel.size();
  detail::require(h >= 1 && h <= map.height() && h <= map.width(), Errc::kernel_too_large,
                  "kernel of size " + std::to_string(h) + " does not fit a " + std::to_string(map.height()) + "x" +
                      std::to_string(map.width()) + " map");
  const auto rows = static_cast<std::ptrdiff_t>(map.height());
  const auto cols = static_cast<std::ptrdiff_t>(map.width());
  const auto r = static_cast<std::ptrdiff_t>(kernel.radius());
  const auto n = static_cast<std::ptrdiff_t>(h);

  std::vector<double> src(map.pixels());
  for (std::size_t i = 0; i < src.size(); ++i) src[i] = static_cast<double>(map.data()[i]);
  auto weights = kernel.weights();

  FloatMap out(map.height(), map.width());
  for (std::ptrdiff_t y = 0; y < rows; ++y) {
    // Kernel rows a with 0 <= y - a + r < rows.
    const std::ptrdiff_t a_lo = std::max<std::ptrdiff_t>(0, y + r - rows + 1);
    const std::ptrdiff_t a_hi = std::min<std::ptrdiff_t>(n - 1, y + r);
    for (std::ptrdiff_t x = 0; x < cols; ++x) {
      const std::ptrdiff_t b_lo = std::max<std::ptrdiff_t>(0, x + r - cols + 1);
      const std::ptrdiff_t b_hi = std::min<std::ptrdiff_t>(n - 1, x + r);
      double acc = 0.0;
      for (std::ptrdiff_t a = a_lo; a <= a_hi; ++a) {
        const double* krow = weights.data() + a * n;
        const double* irow = src.data() + (y - a + r) * cols + (x + r);
        for (std::ptrdiff_t b = b_lo; b <= b_hi; ++b) acc += krow[b] * irow[-b];
      }
      out(static_cast<std::size_t>(y), static_cast<std::size_t>(x)) = acc;
    }
  }
  return out;
}

}  // namespace das3d
