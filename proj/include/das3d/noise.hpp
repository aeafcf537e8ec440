#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

#include "das3d/error.hpp"
#include "das3d/image.hpp"
#include "das3d/rng.hpp"

namespace das3d {

/// Lattice resolution and seed of a single-octave Perlin field.
struct PerlinConfig {
  int freq_x = 4;  ///< lattice cells across the width
  int freq_y = 4;  ///< lattice cells across the height
  std::uint64_t seed = 0;

  friend bool operator==(const PerlinConfig&, const PerlinConfig&) = default;
};

namespace detail {

inline double quintic_fade(double t) noexcept { return t * t * t * (t * (t * 6.0 - 15.0) + 10.0); }

}  // namespace detail

/// Classic 2-D gradient noise before rescaling. Pixel (y, x) sits at lattice
/// coordinate (y * freq_y / h, x * freq_x / w); unit gradients are drawn at
/// each of the (freq_y + 1) x (freq_x + 1) lattice nodes.
inline FloatMap perlin2d_raw(std::size_t h, std::size_t w, const PerlinConfig& cfg) {
  das3d::detail::require(h >= 2 && w >= 2, Errc::invalid_argument, "perlin2d needs at least 2x2 pixels");
  das3d::detail::require(cfg.freq_x >= 1 && cfg.freq_y >= 1, Errc::invalid_argument, "perlin frequency must be >= 1");
  const auto min_dim = static_cast<int>(std::min(h, w));
  das3d::detail::require(cfg.freq_x <= min_dim && cfg.freq_y <= min_dim, Errc::invalid_argument,
                         "perlin frequency exceeds image size");

  const auto nx = static_cast<std::size_t>(cfg.freq_x) + 1;
  const auto ny = static_cast<std::size_t>(cfg.freq_y) + 1;
  std::vector<double> gx(nx * ny), gy(nx * ny);
  Rng rng(cfg.seed);
  for (std::size_t i = 0; i < nx * ny; ++i) {
    const double angle = 2.0 * std::numbers::pi * rng.uniform();
    gx[i] = std::cos(angle);
    gy[i] = std::sin(angle);
  }
  auto dot = [&](std::size_t ly, std::size_t lx, double dy, double dx) {
    const std::size_t i = ly * nx + lx;
    return gy[i] * dy + gx[i] * dx;
  };

  FloatMap out(h, w);
  for (std::size_t y = 0; y < h; ++y) {
    const double v = static_cast<double>(y) * cfg.freq_y / static_cast<double>(h);
    const auto ly = static_cast<std::size_t>(v);
    const double ty = v - static_cast<double>(ly);
    const double fy = detail::quintic_fade(ty);
    for (std::size_t x = 0; x < w; ++x) {
      const double u = static_cast<double>(x) * cfg.freq_x / static_cast<double>(w);
      const auto lx = static_cast<std::size_t>(u);
      const double tx = u - static_cast<double>(lx);
      const double fx = detail::quintic_fade(tx);
      const double n00 = dot(ly, lx, ty, tx);
      const double n01 = dot(ly, lx + 1, ty, tx - 1.0);
      const double n10 = dot(ly + 1, lx, ty - 1.0, tx);
      const double n11 = dot(ly + 1, lx + 1, ty - 1.0, tx - 1.0);
      const double top = das3d::detail::lerp(n00, n01, fx);
      const double bottom = das3d::detail::lerp(n10, n11, fx);
      out(y, x) = das3d::detail::lerp(top, bottom, fy);
    }
  }
  return out;
}

/// Perlin field divided by its maximum absolute value, so the range is
/// within [-1, 1] with signs and zeros preserved.
inline FloatMap perlin2d(std::size_t h, std::size_t w, const PerlinConfig& cfg) {
  FloatMap out = perlin2d_raw(h, w, cfg);
  double peak = 0.0;
  for (double v : out.data()) peak = std::max(peak, std::abs(v));
  if (peak > 0.0) {
    for (double& v : out.data()) v /= peak;
  }
  return out;
}

/// -1 where P < -t_p, +1 where P > t_p, 0 otherwise.
inline TernaryMask ternarize(const FloatMap& noise, double t_p) {
  das3d::detail::require(t_p > 0.0 && t_p < 1.0, Errc::invalid_argument, "t_p must lie in (0, 1)");
  TernaryMask out(noise.height(), noise.width());
  auto src = noise.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < src.size(); ++i) {
    dst[i] = src[i] < -t_p ? std::int8_t{-1} : (src[i] > t_p ? std::int8_t{1} : std::int8_t{0});
  }
  return out;
}

}  // namespace das3d
