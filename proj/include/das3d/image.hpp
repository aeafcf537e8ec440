#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include "das3d/error.hpp"

namespace das3d {

namespace tag {
struct Rgb {};
struct Depth {};
struct Float {};
struct Binary {};
struct Ternary {};
}  // namespace tag

/// Dense row-major image, interleaved channels. The tag keeps modalities
/// that share a pixel type (depth vs. signed float map) from mixing.
template <typename T, std::size_t Channels, typename Tag>
class Image {
 public:
  using value_type = T;
  using tag_type = Tag;
  static constexpr std::size_t channels = Channels;

  Image() = default;
  Image(std::size_t height, std::size_t width, T fill = T{})
      : height_(height), width_(width), data_(height * width * Channels, fill) {}

  std::size_t height() const noexcept { return height_; }
  std::size_t width() const noexcept { return width_; }
  std::size_t pixels() const noexcept { return height_ * width_; }
  bool empty() const noexcept { return data_.empty(); }

  T& operator()(std::size_t y, std::size_t x, std::size_t c = 0) noexcept {
    return data_[(y * width_ + x) * Channels + c];
  }
  const T& operator()(std::size_t y, std::size_t x, std::size_t c = 0) const noexcept {
    return data_[(y * width_ + x) * Channels + c];
  }

  std::span<T> data() noexcept { return data_; }
  std::span<const T> data() const noexcept { return data_; }

  template <typename OtherT, std::size_t OtherC, typename OtherTag>
  bool same_shape(const Image<OtherT, OtherC, OtherTag>& other) const noexcept {
    return height_ == other.height() && width_ == other.width();
  }

  friend bool operator==(const Image&, const Image&) = default;

 private:
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::vector<T> data_;
};

using RgbImage = Image<double, 3, tag::Rgb>;
using DepthImage = Image<double, 1, tag::Depth>;
using FloatMap = Image<double, 1, tag::Float>;
using BinaryMask = Image<std::uint8_t, 1, tag::Binary>;
using TernaryMask = Image<std::int8_t, 1, tag::Ternary>;

/// Reinterpret pixel values under another tag (same type and channel count).
template <typename To, typename T, std::size_t C, typename Tag>
To retag(const Image<T, C, Tag>& src) {
  static_assert(std::is_same_v<typename To::value_type, T> && To::channels == C);
  To out(src.height(), src.width());
  std::copy(src.data().begin(), src.data().end(), out.data().begin());
  return out;
}

template <typename Img1, typename Img2>
void require_same_shape(const Img1& a, const Img2& b, const std::string& what) {
  detail::require(a.same_shape(b), Errc::dimension_mismatch,
                  what + ": " + std::to_string(a.height()) + "x" + std::to_string(a.width()) +
                      " vs " + std::to_string(b.height()) + "x" + std::to_string(b.width()));
}

inline bool is_unit_range(std::span<const double> values) noexcept {
  return std::all_of(values.begin(), values.end(),
                     [](double v) { return std::isfinite(v) && v >= 0.0 && v <= 1.0; });
}

inline bool is_finite(std::span<const double> values) noexcept {
  return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
}

inline bool is_binary(const BinaryMask& m) noexcept {
  return std::all_of(m.data().begin(), m.data().end(), [](auto v) { return v <= 1; });
}

inline bool is_ternary(const TernaryMask& m) noexcept {
  return std::all_of(m.data().begin(), m.data().end(), [](auto v) { return v >= -1 && v <= 1; });
}

inline std::size_t count_nonzero(const BinaryMask& m) noexcept {
  return static_cast<std::size_t>(std::count_if(m.data().begin(), m.data().end(), [](auto v) { return v != 0; }));
}

// ---------------------------------------------------------------------------
// Resizing

namespace detail {

inline double lerp(double a, double b, double t) noexcept { return a + (b - a) * t; }

template <typename Img>
Img resize_bilinear(const Img& src, std::size_t out_h, std::size_t out_w) {
  Img out(out_h, out_w);
  const double sy = static_cast<double>(src.height()) / static_cast<double>(out_h);
  const double sx = static_cast<double>(src.width()) / static_cast<double>(out_w);
  const auto max_y = static_cast<double>(src.height() - 1);
  const auto max_x = static_cast<double>(src.width() - 1);
  for (std::size_t y = 0; y < out_h; ++y) {
    const double fy = std::clamp((static_cast<double>(y) + 0.5) * sy - 0.5, 0.0, max_y);
    const auto y0 = static_cast<std::size_t>(fy);
    const std::size_t y1 = std::min(y0 + 1, src.height() - 1);
    const double ty = fy - static_cast<double>(y0);
    for (std::size_t x = 0; x < out_w; ++x) {
      const double fx = std::clamp((static_cast<double>(x) + 0.5) * sx - 0.5, 0.0, max_x);
      const auto x0 = static_cast<std::size_t>(fx);
      const std::size_t x1 = std::min(x0 + 1, src.width() - 1);
      const double tx = fx - static_cast<double>(x0);
      for (std::size_t c = 0; c < Img::channels; ++c) {
        const double top = lerp(src(y0, x0, c), src(y0, x1, c), tx);
        const double bottom = lerp(src(y1, x0, c), src(y1, x1, c), tx);
        out(y, x, c) = lerp(top, bottom, ty);
      }
    }
  }
  return out;
}

template <typename Img>
Img resize_nearest(const Img& src, std::size_t out_h, std::size_t out_w) {
  Img out(out_h, out_w);
  const double sy = static_cast<double>(src.height()) / static_cast<double>(out_h);
  const double sx = static_cast<double>(src.width()) / static_cast<double>(out_w);
  for (std::size_t y = 0; y < out_h; ++y) {
    const auto iy = std::min(static_cast<std::size_t>((static_cast<double>(y) + 0.5) * sy), src.height() - 1);
    for (std::size_t x = 0; x < out_w; ++x) {
      const auto ix = std::min(static_cast<std::size_t>((static_cast<double>(x) + 0.5) * sx), src.width() - 1);
      for (std::size_t c = 0; c < Img::channels; ++c) out(y, x, c) = src(iy, ix, c);
    }
  }
  return out;
}

}  // namespace detail

/// Bilinear (half-pixel centers) for real-valued images, nearest-neighbour
/// for masks so that mask values stay in their discrete set.
template <typename T, std::size_t C, typename Tag>
Image<T, C, Tag> resize(const Image<T, C, Tag>& image, std::size_t out_h, std::size_t out_w) {
  detail::require(out_h >= 1 && out_w >= 1, Errc::invalid_argument, "resize target must be at least 1x1");
  detail::require(!image.empty(), Errc::invalid_argument, "resize of an empty image");
  if (out_h == image.height() && out_w == image.width()) return image;
  if constexpr (std::is_floating_point_v<T>) {
    return detail::resize_bilinear(image, out_h, out_w);
  } else {
    return detail::resize_nearest(image, out_h, out_w);
  }
}

// ---------------------------------------------------------------------------
// Depth normalization

struct NormalizationRecord {
  double min = 0.0;
  double max = 1.0;
  friend bool operator==(const NormalizationRecord&, const NormalizationRecord&) = default;
};

/// Affine map of `depth` onto [0,1] using a given (min, max) range. Values
/// outside the range are clamped.
inline DepthImage normalize_depth_with(const FloatMap& depth, const NormalizationRecord& record) {
  detail::require(std::isfinite(record.min) && std::isfinite(record.max) && record.max > record.min,
                  Errc::degenerate_input, "normalization range must satisfy min < max");
  DepthImage out(depth.height(), depth.width());
  const double scale = record.max - record.min;
  auto src = depth.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < src.size(); ++i) {
    dst[i] = std::clamp((src[i] - record.min) / scale, 0.0, 1.0);
  }
  return out;
}

inline NormalizationRecord depth_range(const FloatMap& depth) {
  detail::require(!depth.empty(), Errc::degenerate_input, "empty depth map");
  detail::require(is_finite(depth.data()), Errc::invalid_argument, "depth map has non-finite values");
  auto [lo, hi] = std::minmax_element(depth.data().begin(), depth.data().end());
  return {*lo, *hi};
}

struct NormalizedDepth {
  DepthImage depth;
  NormalizationRecord record;
};

/// Per-image min/max normalization. Throws degenerate_input on constant
/// input; callers that want a fallback substitute a constant 0.5 image.
inline NormalizedDepth normalize_depth(const FloatMap& depth) {
  const auto record = depth_range(depth);
  detail::require(record.max > record.min, Errc::degenerate_input, "constant depth map has no scale");
  return {normalize_depth_with(depth, record), record};
}

inline FloatMap denormalize_depth(const DepthImage& depth, const NormalizationRecord& record) {
  FloatMap out(depth.height(), depth.width());
  auto src = depth.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = record.min + src[i] * (record.max - record.min);
  return out;
}

}  // namespace das3d
