#pragma once

#include <array>
#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>
#include <vector>

#include "das3d/io.hpp"
#include "das3d/preprocess.hpp"
#include "das3d/toy_scene.hpp"

namespace fixture {

/// Preprocessed normal pairs (rgb/, depth/, fg/) under <root>/toy.
inline void write_normal_dataset(const std::filesystem::path& root, std::size_t count, std::size_t size,
                                 std::uint64_t seed = 0) {
  for (std::size_t i = 0; i < count; ++i) {
    das3d::ToySceneOptions o;
    o.height = o.width = size + 16;
    o.seed = seed * 1000 + i;
    const auto scene = das3d::make_toy_scene(o);
    das3d::PreprocessOptions opt;
    opt.size = size;
    opt.ransac_iters = 100;
    const auto p = das3d::preprocess_grid(scene.grid, scene.rgb, opt, i);
    const std::string stem = "n" + std::to_string(i);
    das3d::io::save_rgb(root / "toy" / "rgb" / (stem + ".png"), p.rgb);
    das3d::io::save_depth(root / "toy" / "depth" / (stem + ".pfm"), p.depth);
    das3d::io::save_mask(root / "toy" / "fg" / (stem + ".png"), p.fg);
  }
}

/// Points on the plane n.p = d with Gaussian noise along the normal, plus a
/// block of off-plane clutter.
struct PlantedPlane {
  das3d::PointGrid grid;
  std::array<double, 3> normal;
  double offset;
  std::vector<std::uint8_t> on_plane;
};

inline PlantedPlane planted_plane(std::uint64_t seed, std::size_t side = 64, double noise = 0.001) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> gauss(0.0, noise);
  std::uniform_real_distribution<double> tilt(-0.3, 0.3);
  const double a = tilt(gen), b = tilt(gen);
  const double norm = std::sqrt(a * a + b * b + 1.0);
  PlantedPlane out{das3d::PointGrid(side, side), {-a / norm, -b / norm, 1.0 / norm}, 0.0, {}};
  const double z0 = 0.6;
  out.offset = z0 / norm;
  out.on_plane.assign(side * side, 0);
  for (std::size_t y = 0; y < side; ++y) {
    for (std::size_t x = 0; x < side; ++x) {
      double px = (static_cast<double>(x) - side / 2.0) * 0.002;
      double py = (static_cast<double>(y) - side / 2.0) * 0.002;
      double pz = z0 + a * px + b * py;
      const bool clutter = x > side / 3 && x < 2 * side / 3 && y > side / 3 && y < 2 * side / 3;
      if (clutter) {
        pz -= 0.02 + 0.01 * std::sin(static_cast<double>(x + y));
      } else {
        // Offset along the normal keeps the perpendicular noise exactly Gaussian.
        const double e = gauss(gen);
        px += e * out.normal[0];
        py += e * out.normal[1];
        pz += e * out.normal[2];
        out.on_plane[y * side + x] = 1;
      }
      out.grid.set(y, x, {px, py, pz});
    }
  }
  return out;
}

}  // namespace fixture
