#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "das3d/error.hpp"
#include "das3d/image.hpp"
#include "das3d/io.hpp"
#include "das3d/noise.hpp"
#include "das3d/rng.hpp"

namespace das3d {

/// Pool of unrelated texture images. Either a directory tree of PNG/JPEG
/// files, or (when no directory is configured) procedurally generated
/// noise textures.
class TextureSource {
 public:
  static constexpr std::string_view kProceduralPrefix = "procedural:";

  static TextureSource procedural() { return TextureSource(); }

  /// Recursively indexes image files under `root`, sorted by relative path.
  static TextureSource scan(const std::filesystem::path& root) {
    namespace fs = std::filesystem;
    std::error_code ec;
    detail::require(fs::is_directory(root, ec), Errc::file_not_found, "texture root " + root.string());
    TextureSource src;
    src.root_ = root;
    for (const auto& entry : fs::recursive_directory_iterator(root)) {
      if (!entry.is_regular_file()) continue;
      auto ext = entry.path().extension().string();
      std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
      if (ext == ".png" || ext == ".jpg" || ext == ".jpeg") {
        src.index_.push_back(fs::relative(entry.path(), root).generic_string());
      }
    }
    std::sort(src.index_.begin(), src.index_.end());
    detail::require(!src.index_.empty(), Errc::empty_source, "no PNG/JPEG textures under " + root.string());
    return src;
  }

  bool is_procedural() const noexcept { return index_.empty(); }
  const std::filesystem::path& root() const noexcept { return root_; }
  const std::vector<std::string>& index() const noexcept { return index_; }

 private:
  TextureSource() = default;

  std::filesystem::path root_;
  std::vector<std::string> index_;
};

/// Two random colours blended by a Perlin field, with per-pixel grain.
inline RgbImage procedural_texture(std::uint64_t seed, std::size_t h, std::size_t w) {
  Rng rng(seed);
  const int limit = static_cast<int>(std::min(h, w));
  auto pick_freq = [&] { return std::min(1 << rng.uniform_int(1, 4), limit); };
  const PerlinConfig cfg{pick_freq(), pick_freq(), rng.next_u64()};
  const FloatMap field = perlin2d(h, w, cfg);
  double a[3], b[3];
  for (int c = 0; c < 3; ++c) {
    a[c] = rng.uniform();
    b[c] = rng.uniform();
  }
  const double grain = rng.uniform(0.0, 0.15);
  RgbImage out(h, w);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      const double t = 0.5 * (field(y, x) + 1.0);
      for (std::size_t c = 0; c < 3; ++c) {
        const double v = a[c] + (b[c] - a[c]) * t + grain * (rng.uniform() - 0.5);
        out(y, x, c) = std::clamp(v, 0.0, 1.0);
      }
    }
  }
  return out;
}

struct TextureDraw {
  RgbImage image;
  std::string id;  ///< path relative to the texture root, or "procedural:<seed>"
};

/// Loads the texture identified by `id` (as recorded in sample metadata) at
/// the requested size.
inline RgbImage load_texture(const TextureSource& src, const std::string& id, std::size_t out_h, std::size_t out_w) {
  if (id.starts_with(TextureSource::kProceduralPrefix)) {
    const auto seed = std::stoull(id.substr(TextureSource::kProceduralPrefix.size()));
    return procedural_texture(seed, out_h, out_w);
  }
  return resize(io::load_texture_image(src.root() / id), out_h, out_w);
}

/// Uniformly chooses a texture and resizes it. Unreadable files are skipped
/// and another draw is made; failure is reported only once every indexed file
/// has failed.
inline TextureDraw sample_texture(const TextureSource& src, Rng& rng, std::size_t out_h, std::size_t out_w) {
  if (src.is_procedural()) {
    const std::uint64_t seed = rng.next_u64();
    std::string id = std::string(TextureSource::kProceduralPrefix) + std::to_string(seed);
    return {procedural_texture(seed, out_h, out_w), std::move(id)};
  }
  const auto& index = src.index();
  std::vector<bool> failed(index.size(), false);
  std::size_t failures = 0;
  std::string last_error;
  while (failures < index.size()) {
    const auto pick = rng.uniform_index(index.size());
    if (failed[pick]) continue;
    try {
      return {load_texture(src, index[pick], out_h, out_w), index[pick]};
    } catch (const Error& e) {
      failed[pick] = true;
      ++failures;
      last_error = e.what();
    }
  }
  throw Error(Errc::empty_source, "every texture failed to load; last error: " + last_error);
}

/// I_a = (1 - M) I + M ((1 - beta) I_u + beta I), per channel.
inline RgbImage augment_rgb(const RgbImage& image, const RgbImage& texture, const BinaryMask& mask, double beta) {
  require_same_shape(image, texture, "augment_rgb texture");
  require_same_shape(image, mask, "augment_rgb mask");
  detail::require(beta >= 0.0 && beta <= 0.8, Errc::invalid_argument, "beta must lie in [0, 0.8]");
  RgbImage out = image;
  for (std::size_t y = 0; y < image.height(); ++y) {
    for (std::size_t x = 0; x < image.width(); ++x) {
      if (!mask(y, x)) continue;
      for (std::size_t c = 0; c < 3; ++c) {
        out(y, x, c) = (1.0 - beta) * texture(y, x, c) + beta * image(y, x, c);
      }
    }
  }
  return out;
}

}  // namespace das3d
