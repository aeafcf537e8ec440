#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

#include "das3d/error.hpp"
#include "das3d/image.hpp"

namespace das3d {

/// Image-level scores with 0/1 labels (1 = anomalous).
struct ScoredImages {
  std::vector<double> scores;
  std::vector<std::uint8_t> labels;
};

/// Pixel-level anomaly maps paired with ground-truth masks.
struct PixelEval {
  std::vector<FloatMap> maps;
  std::vector<BinaryMask> gts;

  void validate() const {
    detail::require(maps.size() == gts.size(), Errc::dimension_mismatch, "maps and ground truths differ in count");
    for (std::size_t i = 0; i < maps.size(); ++i) require_same_shape(maps[i], gts[i], "pixel eval pair " + std::to_string(i));
  }
};

/// Rank-based AUROC: P(score_pos > score_neg) + 0.5 P(tie).
inline double auroc(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  detail::require(scores.size() == labels.size(), Errc::dimension_mismatch, "scores and labels differ in length");
  std::size_t n_pos = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    detail::require(!std::isnan(scores[i]), Errc::invalid_argument, "NaN score");
    n_pos += labels[i] ? 1 : 0;
  }
  const std::size_t n_neg = scores.size() - n_pos;
  detail::require(n_pos > 0 && n_neg > 0, Errc::single_class, "AUROC needs both positive and negative samples");

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return scores[a] < scores[b]; });

  long double wins = 0.0L;  // counts in half units are exact well past 1e15 pairs
  std::size_t neg_below = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i, pos = 0, neg = 0;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) {
      (labels[order[j]] ? pos : neg) += 1;
      ++j;
    }
    wins += static_cast<long double>(pos) * (static_cast<long double>(neg_below) + 0.5L * static_cast<long double>(neg));
    neg_below += neg;
    i = j;
  }
  return static_cast<double>(wins / (static_cast<long double>(n_pos) * static_cast<long double>(n_neg)));
}

inline double auroc(const ScoredImages& data) { return auroc(data.scores, data.labels); }

/// AUROC over all pixels of all images pooled together.
inline double pixel_auroc(const PixelEval& data) {
  data.validate();
  std::vector<double> scores;
  std::vector<std::uint8_t> labels;
  for (std::size_t i = 0; i < data.maps.size(); ++i) {
    scores.insert(scores.end(), data.maps[i].data().begin(), data.maps[i].data().end());
    for (auto v : data.gts[i].data()) labels.push_back(v ? 1 : 0);
  }
  return auroc(scores, labels);
}

// ---------------------------------------------------------------------------
// Connected components

struct Labeling {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<std::int32_t> labels;  ///< 0 = background, components are 1..count
  std::size_t count = 0;
  std::vector<std::size_t> sizes;    ///< sizes[c - 1] = pixel count of component c
};

/// Labels maximal connected sets of 1-pixels in raster order of their first
/// pixel. `connectivity` is 8 or 4.
inline Labeling connected_components(const BinaryMask& mask, int connectivity = 8) {
  detail::require(connectivity == 8 || connectivity == 4, Errc::invalid_argument, "connectivity must be 4 or 8");
  Labeling out{mask.height(), mask.width(), std::vector<std::int32_t>(mask.pixels(), 0), 0, {}};
  const auto h = static_cast<std::ptrdiff_t>(mask.height());
  const auto w = static_cast<std::ptrdiff_t>(mask.width());
  std::vector<std::ptrdiff_t> stack;
  for (std::ptrdiff_t start = 0; start < h * w; ++start) {
    if (!mask.data()[static_cast<std::size_t>(start)] || out.labels[static_cast<std::size_t>(start)]) continue;
    const auto label = static_cast<std::int32_t>(++out.count);
    std::size_t size = 0;
    stack.assign(1, start);
    out.labels[static_cast<std::size_t>(start)] = label;
    while (!stack.empty()) {
      const std::ptrdiff_t p = stack.back();
      stack.pop_back();
      ++size;
      const std::ptrdiff_t y = p / w, x = p % w;
      for (std::ptrdiff_t dy = -1; dy <= 1; ++dy) {
        for (std::ptrdiff_t dx = -1; dx <= 1; ++dx) {
          if ((dy == 0 && dx == 0) || (connectivity == 4 && dy != 0 && dx != 0)) continue;
          const std::ptrdiff_t ny = y + dy, nx = x + dx;
          if (ny < 0 || ny >= h || nx < 0 || nx >= w) continue;
          const auto q = static_cast<std::size_t>(ny * w + nx);
          if (mask.data()[q] && !out.labels[q]) {
            out.labels[q] = label;
            stack.push_back(static_cast<std::ptrdiff_t>(q));
          }
        }
      }
    }
    out.sizes.push_back(size);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Per-region overlap

struct ProCurve {
  std::vector<double> fpr;
  std::vector<double> pro;
};

struct AuproOptions {
  double fpr_limit = 0.3;
  int connectivity = 8;
  std::size_t bins = 0;  ///< 0: every distinct score is a threshold
};

/// PRO/FPR curve for thresholds t in decreasing order, predicting
/// score >= t. PRO is the mean over all ground-truth components (of all
/// images) of the fraction of the component predicted; FPR is over all
/// ground-truth negatives. Starts at (0, 0) and ends at (1, 1).
inline ProCurve pro_curve(const PixelEval& data, int connectivity = 8, std::size_t bins = 0) {
  data.validate();
  struct Px {
    double score;
    std::int64_t component;  // -1: negative pixel
  };
  std::vector<Px> px;
  std::vector<double> inv_size;
  std::size_t negatives = 0;
  for (std::size_t i = 0; i < data.maps.size(); ++i) {
    const Labeling cc = connected_components(data.gts[i], connectivity);
    const auto base = static_cast<std::int64_t>(inv_size.size());
    for (auto s : cc.sizes) inv_size.push_back(1.0 / static_cast<double>(s));
    for (std::size_t p = 0; p < cc.labels.size(); ++p) {
      const double score = data.maps[i].data()[p];
      detail::require(!std::isnan(score), Errc::invalid_argument, "NaN score in anomaly map");
      const auto label = cc.labels[p];
      px.push_back({score, label ? base + label - 1 : -1});
      negatives += label ? 0 : 1;
    }
  }
  detail::require(!inv_size.empty(), Errc::no_components, "ground truth has no anomalous regions");
  detail::require(negatives > 0, Errc::single_class, "ground truth has no negative pixels");

  std::sort(px.begin(), px.end(), [](const Px& a, const Px& b) { return a.score > b.score; });

  // Group key: exact score, or the first bin threshold the score passes.
  std::vector<double> key(px.size());
  if (bins >= 2) {
    const double hi = px.front().score, lo = px.back().score;
    const double step = (hi - lo) / static_cast<double>(bins - 1);
    for (std::size_t i = 0; i < px.size(); ++i) {
      key[i] = step > 0.0 ? std::min(std::ceil((hi - px[i].score) / step), static_cast<double>(bins - 1)) : 0.0;
    }
  } else {
    for (std::size_t i = 0; i < px.size(); ++i) key[i] = -px[i].score;
  }

  ProCurve curve{{0.0}, {0.0}};
  const double n_comp = static_cast<double>(inv_size.size());
  std::size_t fp = 0;
  double pro_sum = 0.0;
  for (std::size_t i = 0; i < px.size();) {
    std::size_t j = i;
    while (j < px.size() && key[j] == key[i]) {
      if (px[j].component < 0) {
        ++fp;
      } else {
        pro_sum += inv_size[static_cast<std::size_t>(px[j].component)];
      }
      ++j;
    }
    curve.fpr.push_back(static_cast<double>(fp) / static_cast<double>(negatives));
    curve.pro.push_back(std::min(pro_sum / n_comp, 1.0));
    i = j;
  }
  return curve;
}

/// Trapezoidal area under (x, y) for x in [0, limit], interpolating at the
/// limit. x must be nondecreasing.
inline double truncated_area(std::span<const double> x, std::span<const double> y, double limit) {
  double area = 0.0;
  for (std::size_t i = 1; i < x.size(); ++i) {
    const double x0 = x[i - 1], x1 = x[i];
    if (x0 >= limit) break;
    if (x1 <= limit) {
      area += (x1 - x0) * 0.5 * (y[i - 1] + y[i]);
    } else {
      const double y_lim = y[i - 1] + (y[i] - y[i - 1]) * (limit - x0) / (x1 - x0);
      area += (limit - x0) * 0.5 * (y[i - 1] + y_lim);
      break;
    }
  }
  return area;
}

/// Area under the PRO curve up to `fpr_limit`, divided by `fpr_limit`.
inline double aupro(const PixelEval& data, const AuproOptions& opt = {}) {
  detail::require(opt.fpr_limit > 0.0 && opt.fpr_limit <= 1.0, Errc::invalid_argument, "fpr_limit must lie in (0, 1]");
  const ProCurve curve = pro_curve(data, opt.connectivity, opt.bins);
  return truncated_area(curve.fpr, curve.pro, opt.fpr_limit) / opt.fpr_limit;
}

inline double aupro(const PixelEval& data, double fpr_limit) {
  AuproOptions opt;
  opt.fpr_limit = fpr_limit;
  return aupro(data, opt);
}

}  // namespace das3d
