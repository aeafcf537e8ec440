#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <tiffio.h>

#include "das3d/error.hpp"
#include "das3d/image.hpp"
#include "das3d/io.hpp"
#include "das3d/log.hpp"
#include "das3d/parallel.hpp"
#include "das3d/rng.hpp"

namespace das3d {

namespace fs = std::filesystem;

/// Organized point cloud: one XYZ triple per pixel. Points that are zero or
/// non-finite are invalid (scanner holes).
struct PointGrid {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<std::array<double, 3>> xyz;
  std::vector<std::uint8_t> valid;

  PointGrid() = default;
  PointGrid(std::size_t h, std::size_t w) : height(h), width(w), xyz(h * w, {0.0, 0.0, 0.0}), valid(h * w, 0) {}

  void set(std::size_t y, std::size_t x, std::array<double, 3> p) {
    const std::size_t i = y * width + x;
    xyz[i] = p;
    const bool finite = std::isfinite(p[0]) && std::isfinite(p[1]) && std::isfinite(p[2]);
    const bool zero = p[0] == 0.0 && p[1] == 0.0 && p[2] == 0.0;
    valid[i] = finite && !zero ? 1 : 0;
  }

  std::size_t valid_count() const noexcept {
    return static_cast<std::size_t>(std::count(valid.begin(), valid.end(), std::uint8_t{1}));
  }
};

/// Plane {p : normal . p = offset}, unit normal.
struct PlaneModel {
  std::array<double, 3> normal{0.0, 0.0, 1.0};
  double offset = 0.0;

  double signed_distance(const std::array<double, 3>& p) const noexcept {
    return normal[0] * p[0] + normal[1] * p[1] + normal[2] * p[2] - offset;
  }
};

// ---------------------------------------------------------------------------
// XYZ ingestion

namespace detail {

inline void silence_tiff_warnings() {
  static const bool once = [] {
    TIFFSetWarningHandler(nullptr);
    return true;
  }();
  (void)once;
}

inline PointGrid grid_from_raster(const io::FloatRaster& r, const std::string& name) {
  require(r.channels == 3, Errc::wrong_channels, name + ": XYZ data needs 3 channels");
  PointGrid grid(r.height, r.width);
  for (std::size_t y = 0; y < r.height; ++y) {
    for (std::size_t x = 0; x < r.width; ++x) {
      const std::size_t i = (y * r.width + x) * 3;
      grid.set(y, x, {r.values[i], r.values[i + 1], r.values[i + 2]});
    }
  }
  return grid;
}

inline io::FloatRaster read_xyz_tiff(const fs::path& path) {
  silence_tiff_warnings();
  std::unique_ptr<TIFF, void (*)(TIFF*)> tif(TIFFOpen(path.c_str(), "r"), TIFFClose);
  require(tif != nullptr, Errc::corrupt_header, path.string() + ": cannot open as TIFF");
  std::uint32_t w = 0, h = 0;
  std::uint16_t spp = 1, bps = 0, fmt = SAMPLEFORMAT_UINT, planar = PLANARCONFIG_CONTIG;
  TIFFGetField(tif.get(), TIFFTAG_IMAGEWIDTH, &w);
  TIFFGetField(tif.get(), TIFFTAG_IMAGELENGTH, &h);
  TIFFGetFieldDefaulted(tif.get(), TIFFTAG_SAMPLESPERPIXEL, &spp);
  TIFFGetFieldDefaulted(tif.get(), TIFFTAG_BITSPERSAMPLE, &bps);
  TIFFGetFieldDefaulted(tif.get(), TIFFTAG_SAMPLEFORMAT, &fmt);
  TIFFGetFieldDefaulted(tif.get(), TIFFTAG_PLANARCONFIG, &planar);
  require(spp == 3, Errc::wrong_channels, path.string() + ": expected 3 samples per pixel");
  require(bps == 32 && fmt == SAMPLEFORMAT_IEEEFP && planar == PLANARCONFIG_CONTIG && !TIFFIsTiled(tif.get()),
          Errc::corrupt_header, path.string() + ": expected contiguous float32 strips");
  io::FloatRaster r{h, w, 3, std::vector<float>(static_cast<std::size_t>(w) * h * 3)};
  for (std::uint32_t y = 0; y < h; ++y) {
    require(TIFFReadScanline(tif.get(), r.values.data() + static_cast<std::size_t>(y) * w * 3, y) == 1,
            Errc::dimension_mismatch, path.string() + ": truncated TIFF at row " + std::to_string(y));
  }
  return r;
}

}  // namespace detail

/// Reads a 3-channel float32 TIFF (.tif/.tiff) or a raw float file with a
/// JSON sidecar declaring "channels": 3.
inline PointGrid load_xyz(const fs::path& path) {
  auto ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  if (ext == ".tif" || ext == ".tiff") {
    io::detail::require_exists(path);
    return detail::grid_from_raster(detail::read_xyz_tiff(path), path.string());
  }
  return detail::grid_from_raster(io::read_float_raster(path), path.string());
}

inline void save_xyz_tiff(const fs::path& path, const PointGrid& grid) {
  detail::silence_tiff_warnings();
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::unique_ptr<TIFF, void (*)(TIFF*)> tif(TIFFOpen(path.c_str(), "w"), TIFFClose);
  detail::require(tif != nullptr, Errc::io_failure, "cannot write " + path.string());
  TIFFSetField(tif.get(), TIFFTAG_IMAGEWIDTH, static_cast<std::uint32_t>(grid.width));
  TIFFSetField(tif.get(), TIFFTAG_IMAGELENGTH, static_cast<std::uint32_t>(grid.height));
  TIFFSetField(tif.get(), TIFFTAG_SAMPLESPERPIXEL, 3);
  TIFFSetField(tif.get(), TIFFTAG_BITSPERSAMPLE, 32);
  TIFFSetField(tif.get(), TIFFTAG_SAMPLEFORMAT, SAMPLEFORMAT_IEEEFP);
  TIFFSetField(tif.get(), TIFFTAG_PLANARCONFIG, PLANARCONFIG_CONTIG);
  TIFFSetField(tif.get(), TIFFTAG_PHOTOMETRIC, PHOTOMETRIC_RGB);
  TIFFSetField(tif.get(), TIFFTAG_ROWSPERSTRIP, 1);
  std::vector<float> row(grid.width * 3);
  for (std::size_t y = 0; y < grid.height; ++y) {
    for (std::size_t x = 0; x < grid.width; ++x) {
      for (std::size_t c = 0; c < 3; ++c) row[x * 3 + c] = static_cast<float>(grid.xyz[y * grid.width + x][c]);
    }
    detail::require(TIFFWriteScanline(tif.get(), row.data(), static_cast<std::uint32_t>(y), 0) == 1,
                    Errc::io_failure, "short write to " + path.string());
  }
}

inline void save_xyz_raw(const fs::path& path, const PointGrid& grid) {
  io::FloatRaster r{grid.height, grid.width, 3, std::vector<float>(grid.height * grid.width * 3)};
  for (std::size_t i = 0; i < grid.xyz.size(); ++i) {
    for (std::size_t c = 0; c < 3; ++c) r.values[i * 3 + c] = static_cast<float>(grid.xyz[i][c]);
  }
  io::write_raw_with_sidecar(path, r);
}

// ---------------------------------------------------------------------------
// Plane fitting

struct RansacResult {
  PlaneModel plane;
  std::size_t hypothesis_inliers = 0;  ///< inliers of the best 3-point hypothesis
  std::size_t inliers = 0;             ///< inliers of the refined plane
};

namespace detail {

/// Positive z-component; for planes parallel to z, the first nonzero
/// component is made positive.
inline PlaneModel canonicalize(PlaneModel p) {
  for (int axis : {2, 0, 1}) {
    if (p.normal[axis] == 0.0) continue;
    if (p.normal[axis] < 0.0) {
      for (auto& c : p.normal) c = -c;
      p.offset = -p.offset;
    }
    break;
  }
  return p;
}

struct LsqPlane {
  PlaneModel plane;
  Eigen::Vector3d eigenvalues;
};

inline std::optional<LsqPlane> least_squares_plane(const std::vector<Eigen::Vector3d>& pts) {
  if (pts.size() < 3) return std::nullopt;
  Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
  for (const auto& p : pts) centroid += p;
  centroid /= static_cast<double>(pts.size());
  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  for (const auto& p : pts) {
    const Eigen::Vector3d d = p - centroid;
    cov += d * d.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> solver(cov);
  if (solver.info() != Eigen::Success) return std::nullopt;
  const Eigen::Vector3d n = solver.eigenvectors().col(0).normalized();
  LsqPlane out;
  out.plane.normal = {n.x(), n.y(), n.z()};
  out.plane.offset = n.dot(centroid);
  out.eigenvalues = solver.eigenvalues();
  return out;
}

}  // namespace detail

inline std::size_t count_inliers(const PointGrid& grid, const PlaneModel& plane, double dist) {
  std::size_t n = 0;
  for (std::size_t i = 0; i < grid.xyz.size(); ++i) {
    if (grid.valid[i] && std::abs(plane.signed_distance(grid.xyz[i])) <= dist) ++n;
  }
  return n;
}

/// Best of `iters` random 3-point planes by inlier count (|n.p - d| <= dist),
/// then refined by a least-squares fit over its inliers.
inline RansacResult ransac_fit(const PointGrid& grid, double dist = 0.005, std::size_t iters = 500,
                               std::uint64_t seed = 0) {
  detail::require(dist > 0.0, Errc::invalid_argument, "RANSAC distance must be positive");
  detail::require(iters >= 1, Errc::invalid_argument, "RANSAC needs at least one iteration");
  std::vector<Eigen::Vector3d> pts;
  pts.reserve(grid.xyz.size());
  for (std::size_t i = 0; i < grid.xyz.size(); ++i) {
    if (grid.valid[i]) pts.emplace_back(grid.xyz[i][0], grid.xyz[i][1], grid.xyz[i][2]);
  }
  detail::require(pts.size() >= 3, Errc::degenerate_input, "RANSAC needs at least 3 valid points");

  double extent = 0.0;
  for (const auto& p : pts) extent = std::max(extent, (p - pts.front()).norm());
  const double degenerate_area = 1e-12 * std::max(extent * extent, 1e-300);

  auto inliers_of = [&](const Eigen::Vector3d& n, double d) {
    std::size_t count = 0;
    for (const auto& p : pts) count += std::abs(n.dot(p) - d) <= dist ? 1 : 0;
    return count;
  };

  Rng rng(seed);
  std::size_t best = 0;
  Eigen::Vector3d best_n = Eigen::Vector3d::UnitZ();
  double best_d = 0.0;
  for (std::size_t it = 0; it < iters; ++it) {
    const auto i0 = rng.uniform_index(pts.size());
    const auto i1 = rng.uniform_index(pts.size());
    const auto i2 = rng.uniform_index(pts.size());
    if (i0 == i1 || i1 == i2 || i0 == i2) continue;
    Eigen::Vector3d n = (pts[i1] - pts[i0]).cross(pts[i2] - pts[i0]);
    const double norm = n.norm();
    if (!(norm > degenerate_area)) continue;
    n /= norm;
    const double d = n.dot(pts[i0]);
    const std::size_t count = inliers_of(n, d);
    if (count > best) {
      best = count;
      best_n = n;
      best_d = d;
    }
  }

  if (best == 0) {
    // No usable hypothesis was drawn; fall back to the global fit unless the
    // points are collinear.
    const auto global = detail::least_squares_plane(pts);
    detail::require(global && global->eigenvalues[1] > 1e-18 * std::max(global->eigenvalues[2], 1e-300),
                    Errc::degenerate_input, "points are collinear; no plane is defined");
    best_n = {global->plane.normal[0], global->plane.normal[1], global->plane.normal[2]};
    best_d = global->plane.offset;
    best = inliers_of(best_n, best_d);
  }

  RansacResult result;
  result.hypothesis_inliers = best;
  result.plane = detail::canonicalize({{best_n.x(), best_n.y(), best_n.z()}, best_d});

  std::vector<Eigen::Vector3d> support;
  support.reserve(best);
  for (const auto& p : pts) {
    if (std::abs(best_n.dot(p) - best_d) <= dist) support.push_back(p);
  }
  if (auto refined = detail::least_squares_plane(support);
      refined && refined->eigenvalues[1] > 1e-18 * std::max(refined->eigenvalues[2], 1e-300)) {
    result.plane = detail::canonicalize(refined->plane);
  }
  result.inliers = count_inliers(grid, result.plane, dist);
  return result;
}

inline PlaneModel ransac_plane(const PointGrid& grid, double dist = 0.005, std::size_t iters = 500,
                               std::uint64_t seed = 0) {
  return ransac_fit(grid, dist, iters, seed).plane;
}

// ---------------------------------------------------------------------------
// Background removal

struct BackgroundRemoved {
  FloatMap depth;  ///< z coordinate, scanner units; removed pixels hold the max remaining depth
  RgbImage rgb;    ///< removed pixels set to 0
  BinaryMask fg;
};

/// Removes invalid points and points within `dist` of the plane. Their depth
/// becomes the maximum depth of the remaining points and their colour 0.
inline BackgroundRemoved remove_background(const PointGrid& grid, const RgbImage& rgb, const PlaneModel& plane,
                                           double dist = 0.005) {
  detail::require(rgb.height() == grid.height && rgb.width() == grid.width, Errc::dimension_mismatch,
                  "RGB and XYZ grids differ in size");
  const double n = std::hypot(plane.normal[0], plane.normal[1], plane.normal[2]);
  detail::require(std::abs(n - 1.0) <= 1e-9, Errc::invalid_argument, "plane normal must be unit length");

  BackgroundRemoved out{FloatMap(grid.height, grid.width), rgb, BinaryMask(grid.height, grid.width)};
  double max_depth = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < grid.xyz.size(); ++i) {
    const bool keep = grid.valid[i] && std::abs(plane.signed_distance(grid.xyz[i])) > dist;
    out.fg.data()[i] = keep ? 1 : 0;
    if (keep) max_depth = std::max(max_depth, grid.xyz[i][2]);
  }
  detail::require(std::isfinite(max_depth), Errc::no_foreground, "no foreground: every point was removed");
  for (std::size_t i = 0; i < grid.xyz.size(); ++i) {
    if (out.fg.data()[i]) {
      out.depth.data()[i] = grid.xyz[i][2];
    } else {
      out.depth.data()[i] = max_depth;
      for (std::size_t c = 0; c < 3; ++c) out.rgb.data()[i * 3 + c] = 0.0;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Pair and directory preprocessing

struct PreprocessOptions {
  double ransac_dist = 0.005;
  std::size_t ransac_iters = 500;
  std::size_t size = 256;
  std::uint64_t seed = 0;
  bool dataset_normalization = false;  ///< share one (min, max) per group instead of per image
};

struct PreprocessedPair {
  RgbImage rgb;
  DepthImage depth;
  BinaryMask fg;
  NormalizationRecord record;
  PlaneModel plane;
};

struct ResizedPair {
  RgbImage rgb;
  FloatMap depth;
  BinaryMask fg;
  PlaneModel plane;
};

inline ResizedPair remove_and_resize(const PointGrid& grid, const RgbImage& rgb, const PreprocessOptions& opt,
                                     std::uint64_t seed) {
  const PlaneModel plane = ransac_plane(grid, opt.ransac_dist, opt.ransac_iters, seed);
  const BackgroundRemoved removed = remove_background(grid, rgb, plane, opt.ransac_dist);
  return {resize(removed.rgb, opt.size, opt.size), resize(removed.depth, opt.size, opt.size),
          resize(removed.fg, opt.size, opt.size), plane};
}

/// Plane removal, resize to size x size and depth normalization. A constant
/// depth map (flat object) normalizes to 0.5 everywhere. `fixed_range`
/// replaces the per-image range.
inline PreprocessedPair preprocess_grid(const PointGrid& grid, const RgbImage& rgb, const PreprocessOptions& opt,
                                        std::uint64_t seed, std::optional<NormalizationRecord> fixed_range = std::nullopt) {
  ResizedPair r = remove_and_resize(grid, rgb, opt, seed);
  PreprocessedPair out{std::move(r.rgb), {}, std::move(r.fg), {}, r.plane};
  if (fixed_range) {
    out.record = *fixed_range;
    out.depth = normalize_depth_with(r.depth, *fixed_range);
  } else {
    try {
      auto n = normalize_depth(r.depth);
      out.depth = std::move(n.depth);
      out.record = n.record;
    } catch (const Error& e) {
      if (e.code() != Errc::degenerate_input) throw;
      out.depth = DepthImage(r.depth.height(), r.depth.width(), 0.5);
      out.record = {r.depth.data()[0], r.depth.data()[0]};
    }
  }
  return out;
}

inline PreprocessedPair preprocess_pair(const fs::path& xyz_path, const fs::path& rgb_path, const PreprocessOptions& opt,
                                        std::uint64_t seed) {
  return preprocess_grid(load_xyz(xyz_path), io::load_rgb(rgb_path), opt, seed);
}

/// A raw scan: <group>/xyz/<stem>.{tiff,tif,raw} with <group>/rgb/<stem>.png
/// and, optionally, a ground-truth mask <group>/gt/<stem>.png.
struct ScanPair {
  std::string group;
  std::string stem;
  fs::path xyz;
  fs::path rgb;
  std::optional<fs::path> gt;
};

inline std::vector<ScanPair> discover_scans(const fs::path& root) {
  std::error_code ec;
  detail::require(fs::is_directory(root, ec), Errc::file_not_found, "input directory " + root.string());
  std::vector<fs::path> groups;
  if (fs::is_directory(root / "xyz", ec)) groups.push_back(root);
  for (const auto& entry : fs::recursive_directory_iterator(root)) {
    if (entry.is_directory() && fs::is_directory(entry.path() / "xyz", ec)) groups.push_back(entry.path());
  }
  std::vector<ScanPair> scans;
  for (const auto& dir : groups) {
    for (const auto& f : fs::directory_iterator(dir / "xyz")) {
      const auto ext = f.path().extension().string();
      if (!f.is_regular_file() || (ext != ".tiff" && ext != ".tif" && ext != ".raw")) continue;
      ScanPair s{fs::relative(dir, root).generic_string(), f.path().stem().string(), f.path(), {}, {}};
      s.rgb = dir / "rgb" / (s.stem + ".png");
      detail::require(fs::is_regular_file(s.rgb, ec), Errc::file_not_found, "missing pair member " + s.rgb.string());
      if (auto gt = dir / "gt" / (s.stem + ".png"); fs::is_regular_file(gt, ec)) s.gt = gt;
      scans.push_back(std::move(s));
    }
  }
  std::sort(scans.begin(), scans.end(),
            [](const auto& a, const auto& b) { return std::tie(a.group, a.stem) < std::tie(b.group, b.stem); });
  return scans;
}

/// Writes <out>/<group>/{rgb/<stem>.png, depth/<stem>.pfm, fg/<stem>.png}
/// (plus gt/<stem>.png when the scan has one) and returns a summary.
inline nlohmann::json preprocess_directory(const fs::path& in_dir, const fs::path& out_dir, const PreprocessOptions& opt,
                                           std::size_t workers = 1, const Log& log = Log()) {
  const auto scans = discover_scans(in_dir);
  if (scans.empty()) log.warn("no xyz/ scans found under " + in_dir.string());
  auto pair_seed = [&](std::size_t i) { return hash_words({opt.seed, i}); };

  std::vector<std::optional<NormalizationRecord>> shared(scans.size());
  if (opt.dataset_normalization) {
    std::vector<NormalizationRecord> ranges(scans.size());
    parallel_for(scans.size(), workers, [&](std::size_t i) {
      const auto r = remove_and_resize(load_xyz(scans[i].xyz), io::load_rgb(scans[i].rgb), opt, pair_seed(i));
      ranges[i] = depth_range(r.depth);
    });
    for (std::size_t i = 0; i < scans.size(); ++i) {
      NormalizationRecord g = ranges[i];
      for (std::size_t j = 0; j < scans.size(); ++j) {
        if (scans[j].group != scans[i].group) continue;
        g.min = std::min(g.min, ranges[j].min);
        g.max = std::max(g.max, ranges[j].max);
      }
      if (g.max > g.min) shared[i] = g;
    }
  }

  std::vector<nlohmann::json> records(scans.size());
  parallel_for(scans.size(), workers, [&](std::size_t i) {
    const auto& s = scans[i];
    const auto p = preprocess_grid(load_xyz(s.xyz), io::load_rgb(s.rgb), opt, pair_seed(i), shared[i]);
    const fs::path base = out_dir / s.group;
    io::save_rgb(base / "rgb" / (s.stem + ".png"), p.rgb);
    io::save_depth(base / "depth" / (s.stem + ".pfm"), p.depth);
    io::save_mask(base / "fg" / (s.stem + ".png"), p.fg);
    if (s.gt) io::save_mask(base / "gt" / (s.stem + ".png"), resize(io::load_mask(*s.gt), opt.size, opt.size));
    records[i] = {{"group", s.group},
                  {"stem", s.stem},
                  {"plane", {{"normal", p.plane.normal}, {"offset", p.plane.offset}}},
                  {"depth_range", {p.record.min, p.record.max}}};
    log.debug("preprocessed " + s.group + "/" + s.stem);
  });
  nlohmann::json summary{{"pairs", records}, {"size", opt.size}, {"ransac_dist", opt.ransac_dist},
                         {"ransac_iters", opt.ransac_iters}, {"seed", opt.seed}};
  log.info("preprocessed " + std::to_string(scans.size()) + " scans");
  return summary;
}

}  // namespace das3d
