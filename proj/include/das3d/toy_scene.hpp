#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>

#include "das3d/image.hpp"
#include "das3d/preprocess.hpp"
#include "das3d/rng.hpp"

namespace das3d {

/// Parameters of a synthetic scan: a hemisphere resting on a tilted plane,
/// seen by an orthographic camera looking along +z.
struct ToySceneOptions {
  std::size_t height = 64;
  std::size_t width = 64;
  double extent = 0.1;         ///< metres covered by the image width
  double plane_z = 0.5;        ///< plane depth at the image centre
  double slope_x = 0.02;       ///< dz/dx of the plane
  double slope_y = -0.01;      ///< dz/dy of the plane
  double radius = 0.25;        ///< hemisphere radius as a fraction of extent
  double noise = 0.0;          ///< uniform depth noise half-width in metres
  double hole_fraction = 0.0;  ///< fraction of pixels dropped as scanner holes
  bool defect = false;         ///< add a dent to the hemisphere and mark it in gt
  std::uint64_t seed = 0;
};

struct ToyScene {
  PointGrid grid;
  RgbImage rgb;
  BinaryMask gt;          ///< dent pixels
  BinaryMask object;      ///< pixels whose point lies on the hemisphere
  PlaneModel plane;       ///< ground-truth background plane
};

inline ToyScene make_toy_scene(const ToySceneOptions& o) {
  ToyScene s;
  s.grid = PointGrid(o.height, o.width);
  s.rgb = RgbImage(o.height, o.width);
  s.gt = BinaryMask(o.height, o.width);
  s.object = BinaryMask(o.height, o.width);

  const double norm = std::sqrt(o.slope_x * o.slope_x + o.slope_y * o.slope_y + 1.0);
  s.plane.normal = {-o.slope_x / norm, -o.slope_y / norm, 1.0 / norm};
  s.plane.offset = o.plane_z / norm;

  Rng rng(o.seed);
  const double pitch = o.extent / static_cast<double>(o.width);
  const double r = o.radius * o.extent;
  const double cx = rng.uniform(-0.05, 0.05) * o.extent, cy = rng.uniform(-0.05, 0.05) * o.extent;
  const double dent_x = cx + 0.4 * r, dent_y = cy - 0.2 * r, dent_r = 0.3 * r;
  const std::array<double, 3> body{rng.uniform(0.5, 0.9), rng.uniform(0.2, 0.6), rng.uniform(0.1, 0.4)};

  for (std::size_t y = 0; y < o.height; ++y) {
    for (std::size_t x = 0; x < o.width; ++x) {
      const double px = (static_cast<double>(x) + 0.5 - 0.5 * static_cast<double>(o.width)) * pitch;
      const double py = (static_cast<double>(y) + 0.5 - 0.5 * static_cast<double>(o.height)) * pitch;
      double z = o.plane_z + o.slope_x * px + o.slope_y * py;
      const double d2 = (px - cx) * (px - cx) + (py - cy) * (py - cy);
      std::array<double, 3> colour{0.45, 0.45, 0.45};
      if (d2 < r * r) {
        z -= std::sqrt(r * r - d2);
        s.object(y, x) = 1;
        const double shade = 0.75 + 0.25 * std::sqrt(1.0 - d2 / (r * r));
        for (std::size_t c = 0; c < 3; ++c) colour[c] = body[c] * shade;
        const double e2 = (px - dent_x) * (px - dent_x) + (py - dent_y) * (py - dent_y);
        if (o.defect && e2 < dent_r * dent_r) {
          z += 0.5 * std::sqrt(dent_r * dent_r - e2);
          s.gt(y, x) = 1;
          colour = {0.15, 0.12, 0.1};
        }
      }
      if (o.noise > 0.0) z += rng.uniform(-o.noise, o.noise);
      const bool hole = o.hole_fraction > 0.0 && rng.bernoulli(o.hole_fraction);
      s.grid.set(y, x, hole ? std::array<double, 3>{0.0, 0.0, 0.0} : std::array<double, 3>{px, py, z});
      for (std::size_t c = 0; c < 3; ++c) s.rgb(y, x, c) = std::clamp(colour[c] + rng.uniform(-0.02, 0.02), 0.0, 1.0);
    }
  }
  return s;
}

}  // namespace das3d
