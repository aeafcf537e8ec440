#pragma once

// Brute-force reference implementations used only by the test suites. They
// are written from the defining formulas and deliberately avoid the library's
// code paths.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <numbers>
#include <random>
#include <set>
#include <string>
#include <vector>

namespace oracle {

// ---------------------------------------------------------------------------
// Kernels and convolution

/// exp(-(u^2 + v^2) / (2 s^2)) on an h x h grid centred at h/2, normalized.
inline std::vector<double> gaussian_kernel(double sigma, std::size_t h) {
  std::vector<double> k(h * h);
  const double c = static_cast<double>(h / 2);
  long double total = 0.0L;
  for (std::size_t i = 0; i < h; ++i) {
    for (std::size_t j = 0; j < h; ++j) {
      const double u = static_cast<double>(i) - c, v = static_cast<double>(j) - c;
      k[i * h + j] = std::exp(-(u * u + v * v) / (2.0 * sigma * sigma));
      total += k[i * h + j];
    }
  }
  for (double& v : k) v = static_cast<double>(v / total);
  return k;
}

/// Skew normal density from scratch: explicit inverse, normal CDF via erf.
inline double skew_density(double x0, double x1, double a0, double a1, double s00, double s01, double s11) {
  const double det = s00 * s11 - s01 * s01;
  const double i00 = s11 / det, i01 = -s01 / det, i11 = s00 / det;
  const double q = x0 * (i00 * x0 + i01 * x1) + x1 * (i01 * x0 + i11 * x1);
  const double phi = std::exp(-q / 2.0) / (2.0 * std::numbers::pi * std::sqrt(det));
  const double cdf = 0.5 * (1.0 + std::erf((a0 * x0 + a1 * x1) / std::sqrt(2.0)));
  return 2.0 * phi * cdf;
}

/// Zero-padded convolution by the literal definition: pad the input by r on
/// every side, flip the kernel, slide.
inline std::vector<double> convolve(const std::vector<double>& in, std::size_t rows, std::size_t cols,
                                    const std::vector<double>& k, std::size_t h) {
  const std::size_t r = h / 2;
  const std::size_t pr = rows + 2 * r, pc = cols + 2 * r;
  std::vector<double> padded(pr * pc, 0.0);
  for (std::size_t y = 0; y < rows; ++y) {
    for (std::size_t x = 0; x < cols; ++x) padded[(y + r) * pc + (x + r)] = in[y * cols + x];
  }
  std::vector<double> out(rows * cols, 0.0);
  for (std::size_t y = 0; y < rows; ++y) {
    for (std::size_t x = 0; x < cols; ++x) {
      double acc = 0.0;
      for (std::size_t a = 0; a < h; ++a) {
        for (std::size_t b = 0; b < h; ++b) {
          // out(y,x) = sum k(a,b) in(y - a + r, x - b + r); padded index adds r.
          acc += k[a * h + b] * padded[(y + 2 * r - a) * pc + (x + 2 * r - b)];
        }
      }
      out[y * cols + x] = acc;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Element-wise operations

inline int ternary(double p, double t) {
  if (p > t) return 1;
  if (p < -t) return -1;
  return 0;
}

inline int compose(int fg, int placement) { return fg == 1 ? placement : 0; }

inline double augmented_depth(double z, double delta, double p_z) {
  const double v = z + p_z * delta;
  return v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
}

inline int refined(double delta, double p_z, double t_h) { return std::fabs(p_z * delta) >= t_h ? 1 : 0; }

inline double augmented_rgb(double i, double i_u, int m, double beta) {
  return m ? (1.0 - beta) * i_u + beta * i : i;
}

struct Dropped {
  double rgb;
  double depth;
  int mask;
};

inline Dropped dropout(double i, double i_a, double z, double z_a, int m, int d_i, int d_z) {
  return {d_i ? i : i_a, d_z ? z : z_a, d_i * d_z == 1 ? 0 : m};
}

// ---------------------------------------------------------------------------
// Metrics

/// AUROC as the fraction of (positive, negative) pairs ranked correctly, ties
/// counting one half.
inline double auroc_pairs(const std::vector<double>& s, const std::vector<std::uint8_t>& l) {
  long double good = 0.0L;
  long double pairs = 0.0L;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (!l[i]) continue;
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (l[j]) continue;
      pairs += 1.0L;
      if (s[i] > s[j]) good += 1.0L;
      if (s[i] == s[j]) good += 0.5L;
    }
  }
  return static_cast<double>(good / pairs);
}

/// Connected components by repeated label propagation until nothing changes,
/// relabelled in raster order of first appearance.
inline std::vector<int> components(const std::vector<std::uint8_t>& m, std::size_t rows, std::size_t cols, int conn) {
  std::vector<int> lab(m.size(), 0);
  for (std::size_t i = 0; i < m.size(); ++i) lab[i] = m[i] ? static_cast<int>(i) + 1 : 0;
  for (bool changed = true; changed;) {
    changed = false;
    for (std::size_t y = 0; y < rows; ++y) {
      for (std::size_t x = 0; x < cols; ++x) {
        const std::size_t i = y * cols + x;
        if (!lab[i]) continue;
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            if (conn == 4 && dy != 0 && dx != 0) continue;
            const long ny = static_cast<long>(y) + dy, nx = static_cast<long>(x) + dx;
            if (ny < 0 || nx < 0 || ny >= static_cast<long>(rows) || nx >= static_cast<long>(cols)) continue;
            const std::size_t j = static_cast<std::size_t>(ny) * cols + static_cast<std::size_t>(nx);
            if (lab[j] && lab[j] < lab[i]) {
              lab[i] = lab[j];
              changed = true;
            }
          }
        }
      }
    }
  }
  std::map<int, int> remap;
  for (auto& v : lab) {
    if (!v) continue;
    auto it = remap.find(v);
    if (it == remap.end()) it = remap.emplace(v, static_cast<int>(remap.size()) + 1).first;
    v = it->second;
  }
  return lab;
}

struct Instance {
  std::size_t rows;
  std::size_t cols;
  std::vector<double> map;
  std::vector<std::uint8_t> gt;
};

/// For every distinct score t (descending) compute FPR and mean per-region
/// overlap of {score >= t} by direct counting, prepend (0, 0), integrate the
/// piecewise-linear curve on [0, limit] and divide by the limit.
inline double aupro_sweep(const std::vector<Instance>& data, double limit, int conn = 8) {
  std::vector<std::vector<int>> labels;
  std::size_t n_comp_total = 0;
  std::set<double, std::greater<>> thresholds;
  for (const auto& d : data) {
    labels.push_back(components(d.gt, d.rows, d.cols, conn));
    n_comp_total += static_cast<std::size_t>(*std::max_element(labels.back().begin(), labels.back().end()));
    thresholds.insert(d.map.begin(), d.map.end());
  }
  std::vector<double> xs{0.0}, ys{0.0};
  for (double t : thresholds) {
    std::size_t fp = 0, neg = 0;
    double pro = 0.0;
    for (std::size_t n = 0; n < data.size(); ++n) {
      const auto& d = data[n];
      const int nc = *std::max_element(labels[n].begin(), labels[n].end());
      for (int c = 1; c <= nc; ++c) {
        std::size_t hit = 0, size = 0;
        for (std::size_t i = 0; i < d.map.size(); ++i) {
          if (labels[n][i] != c) continue;
          ++size;
          if (d.map[i] >= t) ++hit;
        }
        pro += static_cast<double>(hit) / static_cast<double>(size);
      }
      for (std::size_t i = 0; i < d.map.size(); ++i) {
        if (d.gt[i]) continue;
        ++neg;
        if (d.map[i] >= t) ++fp;
      }
    }
    xs.push_back(static_cast<double>(fp) / static_cast<double>(neg));
    ys.push_back(pro / static_cast<double>(n_comp_total));
  }
  double area = 0.0;
  for (std::size_t i = 1; i < xs.size(); ++i) {
    const double a = std::min(xs[i - 1], limit), b = std::min(xs[i], limit);
    if (b <= a) continue;
    auto y_at = [&](double x) {
      return xs[i] == xs[i - 1] ? ys[i] : ys[i - 1] + (ys[i] - ys[i - 1]) * (x - xs[i - 1]) / (xs[i] - xs[i - 1]);
    };
    area += (b - a) * (y_at(a) + y_at(b)) / 2.0;
  }
  return area / limit;
}

// ---------------------------------------------------------------------------
// Geometry

/// Angle in degrees between two (not necessarily unit) directions, sign-free.
inline double angle_deg(const std::array<double, 3>& a, const std::array<double, 3>& b) {
  const double dot = a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
  const double na = std::sqrt(a[0] * a[0] + a[1] * a[1] + a[2] * a[2]);
  const double nb = std::sqrt(b[0] * b[0] + b[1] * b[1] + b[2] * b[2]);
  return std::acos(std::min(1.0, std::fabs(dot) / (na * nb))) * 180.0 / std::numbers::pi;
}

// ---------------------------------------------------------------------------
// Files

inline std::string read_bytes(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), {}};
}

/// Relative path -> file bytes for every regular file below `root`.
inline std::map<std::string, std::string> tree(const std::filesystem::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : std::filesystem::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) out[std::filesystem::relative(e.path(), root).generic_string()] = read_bytes(e.path());
  }
  return out;
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& name) {
    static std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("das3d_" + name + "_" + std::to_string(rd()));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const noexcept { return path_; }
  std::filesystem::path operator/(const std::string& leaf) const { return path_ / leaf; }

 private:
  std::filesystem::path path_;
};

}  // namespace oracle
