#pragma once

#include <algorithm>
#include <cmath>
#include <optional>

#include "das3d/error.hpp"
#include "das3d/image.hpp"
#include "das3d/skew_filter.hpp"

namespace das3d {

/// Thresholds and magnitude range of the depth deformation. All values are
/// in normalized depth units except t_p, which thresholds the noise field.
struct DepthAugParams {
  std::optional<double> t_f;  ///< foreground threshold; unset means max(Z) - 1e-4
  double t_p = 0.5;
  double t_h = 0.005;
  double p_min = 0.01;
  double p_max = 0.10;

  void validate() const {
    // p_min = p_max = 0 is accepted: it produces an undeformed sample.
    detail::require(p_min >= 0.0 && p_min <= p_max && std::isfinite(p_max), Errc::invalid_argument,
                    "defect magnitude range must satisfy 0 <= p_min <= p_max");
    detail::require(t_h > 0.0, Errc::invalid_argument, "t_h must be positive");
    detail::require(t_p > 0.0 && t_p < 1.0, Errc::invalid_argument, "t_p must lie in (0, 1)");
  }
};

inline constexpr double kDefaultForegroundMargin = 1e-4;

inline double default_foreground_threshold(const DepthImage& depth) {
  detail::require(!depth.empty(), Errc::invalid_argument, "empty depth image");
  return *std::max_element(depth.data().begin(), depth.data().end()) - kDefaultForegroundMargin;
}

/// 1 where Z < t_f. Background was filled with the maximum depth during
/// preprocessing, so the object is strictly nearer than t_f.
inline BinaryMask foreground_mask(const DepthImage& depth, double t_f) {
  BinaryMask out(depth.height(), depth.width());
  auto src = depth.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = src[i] < t_f ? 1 : 0;
  return out;
}

inline BinaryMask foreground_mask(const DepthImage& depth) {
  return foreground_mask(depth, default_foreground_threshold(depth));
}

/// Element-wise product M_f * M_p: defects outside the object are removed.
inline TernaryMask compose_mask(const BinaryMask& foreground, const TernaryMask& placement) {
  require_same_shape(foreground, placement, "compose_mask");
  TernaryMask out(placement.height(), placement.width());
  auto f = foreground.data();
  auto p = placement.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = static_cast<std::int8_t>(f[i] * p[i]);
  return out;
}

/// Unit depth change: the ternary mask smoothed by the sum-1 skew kernel.
inline FloatMap delta_depth(const TernaryMask& defects, const SkewKernel& kernel) {
  return convolve(defects, kernel);
}

/// Pre-clamp depth change p_z * delta; kept in sample metadata.
inline FloatMap scaled_delta(const FloatMap& delta, double p_z) {
  FloatMap out(delta.height(), delta.width());
  auto src = delta.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = p_z * src[i];
  return out;
}

/// Z_a = clamp(Z + p_z * delta, 0, 1). Pixels with delta == 0 are unchanged.
inline DepthImage augment_depth(const DepthImage& depth, const FloatMap& delta, double p_z) {
  require_same_shape(depth, delta, "augment_depth");
  DepthImage out(depth.height(), depth.width());
  auto z = depth.data();
  auto d = delta.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < dst.size(); ++i) {
    dst[i] = d[i] == 0.0 ? z[i] : std::clamp(z[i] + p_z * d[i], 0.0, 1.0);
  }
  return out;
}

/// M* = 0 where p_z |delta| < t_h, 1 otherwise.
inline BinaryMask refine_mask(const FloatMap& delta, double p_z, double t_h) {
  detail::require(t_h > 0.0, Errc::invalid_argument, "t_h must be positive");
  BinaryMask out(delta.height(), delta.width());
  auto d = delta.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = std::abs(p_z * d[i]) < t_h ? 0 : 1;
  return out;
}

}  // namespace das3d
