#pragma once

#include <algorithm>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "das3d/error.hpp"
#include "das3d/io.hpp"
#include "das3d/log.hpp"
#include "das3d/metrics.hpp"
#include "json.hpp"

namespace das3d {

struct EvaluateOptions {
  std::vector<std::string> metrics{"iauroc", "pauroc", "aupro"};
  AuproOptions aupro;
};

/// One prediction matched with its ground truth.
struct EvalItem {
  std::string rel;  ///< path below the prediction root, without extension
  FloatMap map;
  BinaryMask gt;
  double score = 0.0;
};

struct EvalSet {
  std::map<std::string, std::vector<EvalItem>> categories;
  std::size_t missing_gt = 0;
};

/// Prediction layout: <pred>/<category>/.../<stem>.pfm score maps, with an
/// optional <pred>/scores.json mapping "<category>/.../<stem>" to an image
/// score (the map maximum is used otherwise). Ground truth:
/// <gt>/<same relative path>.png; a missing file means a normal image.
/// Files directly under <pred> belong to category "default".
inline EvalSet load_eval_set(const std::filesystem::path& pred_dir, const std::filesystem::path& gt_dir,
                             const Log& log = Log()) {
  namespace fs = std::filesystem;
  std::error_code ec;
  detail::require(fs::is_directory(pred_dir, ec), Errc::file_not_found, "prediction directory " + pred_dir.string());
  detail::require(fs::is_directory(gt_dir, ec), Errc::file_not_found, "ground-truth directory " + gt_dir.string());

  std::optional<nlohmann::json> scores;
  if (fs::is_regular_file(pred_dir / "scores.json", ec)) scores = io::load_json(pred_dir / "scores.json");

  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(pred_dir)) {
    if (e.is_regular_file() && e.path().extension() == ".pfm") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());

  EvalSet set;
  for (const auto& f : files) {
    const fs::path rel_path = fs::relative(f, pred_dir).replace_extension();
    EvalItem item;
    item.rel = rel_path.generic_string();
    item.map = io::load_float_map(f);
    const fs::path gt_path = gt_dir / (item.rel + ".png");
    if (fs::is_regular_file(gt_path, ec)) {
      item.gt = io::load_mask(gt_path);
      require_same_shape(item.map, item.gt, item.rel);
    } else {
      item.gt = BinaryMask(item.map.height(), item.map.width());
      ++set.missing_gt;
    }
    if (scores && scores->contains(item.rel)) {
      item.score = (*scores)[item.rel].get<double>();
    } else {
      item.score = *std::max_element(item.map.data().begin(), item.map.data().end());
    }
    auto first = rel_path.begin();
    const std::string category = std::distance(rel_path.begin(), rel_path.end()) > 1 ? first->string() : "default";
    set.categories[category].push_back(std::move(item));
  }
  if (set.missing_gt) log.info(std::to_string(set.missing_gt) + " predictions have no ground truth; treated as normal");
  return set;
}

/// {metric: {category: value | null, "mean": value | null}, "fpr_limit": x}.
/// A metric that is undefined for a category (e.g. only normal images) is
/// null there and left out of the mean.
inline nlohmann::json evaluate(const EvalSet& set, const EvaluateOptions& opt, const Log& log = Log()) {
  static const std::set<std::string> known{"iauroc", "pauroc", "aupro"};
  for (const auto& m : opt.metrics) {
    detail::require(known.count(m) == 1, Errc::invalid_argument, "unknown metric '" + m + "'");
  }
  nlohmann::json report = nlohmann::json::object();
  for (const auto& metric : opt.metrics) {
    nlohmann::json row = nlohmann::json::object();
    double total = 0.0;
    std::size_t defined = 0;
    for (const auto& [category, items] : set.categories) {
      try {
        double value = 0.0;
        if (metric == "iauroc") {
          ScoredImages s;
          for (const auto& it : items) {
            s.scores.push_back(it.score);
            s.labels.push_back(count_nonzero(it.gt) > 0 ? 1 : 0);
          }
          value = auroc(s);
        } else {
          PixelEval px;
          for (const auto& it : items) {
            px.maps.push_back(it.map);
            px.gts.push_back(it.gt);
          }
          value = metric == "pauroc" ? pixel_auroc(px) : aupro(px, opt.aupro);
        }
        row[category] = value;
        total += value;
        ++defined;
      } catch (const Error& e) {
        if (e.code() != Errc::single_class && e.code() != Errc::no_components) throw;
        log.warn(metric + " undefined for " + category + ": " + e.what());
        row[category] = nullptr;
      }
    }
    row["mean"] = defined ? nlohmann::json(total / static_cast<double>(defined)) : nlohmann::json(nullptr);
    report[metric] = row;
  }
  report["fpr_limit"] = opt.aupro.fpr_limit;
  return report;
}

}  // namespace das3d
