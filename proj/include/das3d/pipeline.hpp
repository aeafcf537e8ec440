#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "das3d/depth_synth.hpp"
#include "das3d/error.hpp"
#include "das3d/image.hpp"
#include "das3d/io.hpp"
#include "das3d/log.hpp"
#include "das3d/noise.hpp"
#include "das3d/parallel.hpp"
#include "das3d/rgb_synth.hpp"
#include "das3d/rng.hpp"
#include "das3d/skew_filter.hpp"
#include "json.hpp"

namespace das3d {

namespace fs = std::filesystem;
using nlohmann::json;

/// Every sampling range used during synthesis. Skew widths are expressed in
/// pixels at `sigma_reference_size` and scaled with the image.
struct SynthesisConfig {
  DepthAugParams depth;
  double alpha_min = -0.5;
  double alpha_max = 0.5;
  double sigma_min = 4.0;
  double sigma_max = 16.0;
  double sigma_reference_size = 256.0;
  int perlin_scale_min = 0;  ///< lattice frequency is 2^k, k uniform in [min, max]
  int perlin_scale_max = 4;
  double beta_min = 0.0;
  double beta_max = 0.8;
  double p_d = 0.25;
  std::uint64_t seed = 0;
  int samples_per_pair = 1;
  int max_attempts = 10;
  std::optional<std::string> textures_root;

  void validate() const {
    using detail::require;
    depth.validate();
    require(alpha_min <= alpha_max, Errc::invalid_argument, "alpha range is not ordered");
    require(sigma_min > 0.0 && sigma_min <= sigma_max, Errc::invalid_argument, "sigma range must satisfy 0 < min <= max");
    require(sigma_reference_size > 0.0, Errc::invalid_argument, "sigma_reference_size must be positive");
    require(perlin_scale_min >= 0 && perlin_scale_min <= perlin_scale_max && perlin_scale_max <= 5,
            Errc::invalid_argument, "perlin scale range must satisfy 0 <= min <= max <= 5");
    require(beta_min >= 0.0 && beta_min <= beta_max && beta_max <= 0.8, Errc::invalid_argument,
            "beta range must lie within [0, 0.8]");
    require(p_d >= 0.0 && p_d <= 1.0, Errc::invalid_argument, "p_d must lie in [0, 1]");
    require(samples_per_pair >= 1, Errc::invalid_argument, "samples_per_pair must be >= 1");
    require(max_attempts >= 1, Errc::invalid_argument, "max_attempts must be >= 1");
  }
};

inline json to_json(const SynthesisConfig& c) {
  json depth{{"t_p", c.depth.t_p}, {"t_h", c.depth.t_h}, {"p_min", c.depth.p_min}, {"p_max", c.depth.p_max}};
  depth["t_f"] = c.depth.t_f ? json(*c.depth.t_f) : json(nullptr);
  return {
      {"depth", depth},
      {"skew",
       {{"alpha_min", c.alpha_min},
        {"alpha_max", c.alpha_max},
        {"sigma_min", c.sigma_min},
        {"sigma_max", c.sigma_max},
        {"sigma_reference_size", c.sigma_reference_size}}},
      {"perlin", {{"scale_min", c.perlin_scale_min}, {"scale_max", c.perlin_scale_max}}},
      {"beta", {{"min", c.beta_min}, {"max", c.beta_max}}},
      {"p_d", c.p_d},
      {"seed", c.seed},
      {"samples_per_pair", c.samples_per_pair},
      {"max_attempts", c.max_attempts},
      {"textures", {{"root", c.textures_root ? json(*c.textures_root) : json(nullptr)}}},
  };
}

namespace detail {

inline void reject_unknown_keys(const json& obj, std::initializer_list<const char*> keys, const std::string& where) {
  require(obj.is_object(), Errc::invalid_argument, where + " must be a JSON object");
  std::set<std::string> allowed(keys.begin(), keys.end());
  for (const auto& [key, _] : obj.items()) {
    require(allowed.count(key) == 1, Errc::invalid_argument, "unknown config key '" + where + key + "'");
  }
}

template <typename T>
void read_key(const json& obj, const char* key, T& out) {
  if (auto it = obj.find(key); it != obj.end() && !it->is_null()) out = it->get<T>();
}

}  // namespace detail

/// Overlays the keys present in `j` onto `base`; unknown keys are rejected.
inline SynthesisConfig apply_config_json(SynthesisConfig base, const json& j) {
  using detail::read_key;
  try {
    detail::reject_unknown_keys(
        j, {"depth", "skew", "perlin", "beta", "p_d", "seed", "samples_per_pair", "max_attempts", "textures"}, "");
    if (auto it = j.find("depth"); it != j.end()) {
      detail::reject_unknown_keys(*it, {"t_f", "t_p", "t_h", "p_min", "p_max"}, "depth.");
      if (auto tf = it->find("t_f"); tf != it->end()) {
        base.depth.t_f = tf->is_null() ? std::nullopt : std::optional<double>(tf->get<double>());
      }
      read_key(*it, "t_p", base.depth.t_p);
      read_key(*it, "t_h", base.depth.t_h);
      read_key(*it, "p_min", base.depth.p_min);
      read_key(*it, "p_max", base.depth.p_max);
    }
    if (auto it = j.find("skew"); it != j.end()) {
      detail::reject_unknown_keys(*it, {"alpha_min", "alpha_max", "sigma_min", "sigma_max", "sigma_reference_size"},
                                  "skew.");
      read_key(*it, "alpha_min", base.alpha_min);
      read_key(*it, "alpha_max", base.alpha_max);
      read_key(*it, "sigma_min", base.sigma_min);
      read_key(*it, "sigma_max", base.sigma_max);
      read_key(*it, "sigma_reference_size", base.sigma_reference_size);
    }
    if (auto it = j.find("perlin"); it != j.end()) {
      detail::reject_unknown_keys(*it, {"scale_min", "scale_max"}, "perlin.");
      read_key(*it, "scale_min", base.perlin_scale_min);
      read_key(*it, "scale_max", base.perlin_scale_max);
    }
    if (auto it = j.find("beta"); it != j.end()) {
      detail::reject_unknown_keys(*it, {"min", "max"}, "beta.");
      read_key(*it, "min", base.beta_min);
      read_key(*it, "max", base.beta_max);
    }
    read_key(j, "p_d", base.p_d);
    read_key(j, "seed", base.seed);
    read_key(j, "samples_per_pair", base.samples_per_pair);
    read_key(j, "max_attempts", base.max_attempts);
    if (auto it = j.find("textures"); it != j.end()) {
      detail::reject_unknown_keys(*it, {"root"}, "textures.");
      if (auto root = it->find("root"); root != it->end()) {
        base.textures_root = root->is_null() ? std::nullopt : std::optional<std::string>(root->get<std::string>());
      }
    }
  } catch (const json::exception& e) {
    throw Error(Errc::invalid_argument, std::string("config: ") + e.what());
  }
  return base;
}

// ---------------------------------------------------------------------------
// Samples

/// Every random draw behind one sample. Replaying it through the individual
/// module operations regenerates the sample exactly.
struct SampleMeta {
  PerlinConfig perlin;
  SkewParams skew;
  std::size_t kernel_size = 0;
  double p_z = 0.0;
  double beta = 0.0;
  double t_p = 0.5;
  double t_h = 0.005;
  bool d_rgb = false;    ///< RGB augmentation dropped
  bool d_depth = false;  ///< depth augmentation dropped
  std::string texture;
  int attempts = 0;
  bool fallback = false;  ///< no usable defect after max_attempts; sample is normal

  friend bool operator==(const SampleMeta&, const SampleMeta&) = default;
};

inline json to_json(const SampleMeta& m) {
  return {
      {"perlin", {{"freq_x", m.perlin.freq_x}, {"freq_y", m.perlin.freq_y}, {"seed", m.perlin.seed}}},
      {"alpha", m.skew.alpha},
      {"sigma", m.skew.sigma},
      {"kernel_size", m.kernel_size},
      {"p_z", m.p_z},
      {"beta", m.beta},
      {"t_p", m.t_p},
      {"t_h", m.t_h},
      {"d_I", m.d_rgb ? 1 : 0},
      {"d_Z", m.d_depth ? 1 : 0},
      {"texture", m.texture},
      {"attempts", m.attempts},
      {"fallback", m.fallback},
  };
}

inline SampleMeta meta_from_json(const json& j) {
  try {
    SampleMeta m;
    const auto& p = j.at("perlin");
    m.perlin = {p.at("freq_x").get<int>(), p.at("freq_y").get<int>(), p.at("seed").get<std::uint64_t>()};
    m.skew.alpha = j.at("alpha").get<std::array<double, 2>>();
    m.skew.sigma = j.at("sigma").get<std::array<std::array<double, 2>, 2>>();
    m.kernel_size = j.at("kernel_size").get<std::size_t>();
    m.p_z = j.at("p_z").get<double>();
    m.beta = j.at("beta").get<double>();
    m.t_p = j.at("t_p").get<double>();
    m.t_h = j.at("t_h").get<double>();
    m.d_rgb = j.at("d_I").get<int>() != 0;
    m.d_depth = j.at("d_Z").get<int>() != 0;
    m.texture = j.at("texture").get<std::string>();
    m.attempts = j.at("attempts").get<int>();
    m.fallback = j.at("fallback").get<bool>();
    return m;
  } catch (const json::exception& e) {
    throw Error(Errc::corrupt_header, std::string("sample meta: ") + e.what());
  }
}

struct AnomalySample {
  RgbImage rgb;       ///< after dropout
  DepthImage depth;   ///< after dropout
  BinaryMask mask;    ///< after dropout
  FloatMap delta;     ///< p_z * delta before clamping, independent of dropout
  SampleMeta meta;
};

struct DropoutResult {
  RgbImage rgb;
  DepthImage depth;
  BinaryMask mask;
};

/// Reverts dropped modalities to their normal version; the label survives
/// unless both modalities are dropped.
inline DropoutResult apply_dropout(const RgbImage& rgb, const RgbImage& rgb_aug, const DepthImage& depth,
                                   const DepthImage& depth_aug, const BinaryMask& mask, bool d_rgb, bool d_depth) {
  require_same_shape(rgb, rgb_aug, "apply_dropout rgb");
  require_same_shape(depth, depth_aug, "apply_dropout depth");
  DropoutResult out{d_rgb ? rgb : rgb_aug, d_depth ? depth : depth_aug, mask};
  if (d_rgb && d_depth) std::fill(out.mask.data().begin(), out.mask.data().end(), std::uint8_t{0});
  return out;
}

namespace detail {

/// Runs the deterministic part of the pipeline for the draws in `meta`.
inline AnomalySample render(const RgbImage& rgb, const DepthImage& depth, const BinaryMask& fg, const RgbImage& texture,
                            const SampleMeta& meta) {
  const FloatMap noise = perlin2d(depth.height(), depth.width(), meta.perlin);
  const TernaryMask placement = ternarize(noise, meta.t_p);
  const TernaryMask defects = compose_mask(fg, placement);
  const SkewKernel kernel = build_kernel(meta.skew, std::min(depth.height(), depth.width()));
  const FloatMap unit_delta = delta_depth(defects, kernel);
  const DepthImage depth_aug = augment_depth(depth, unit_delta, meta.p_z);
  const BinaryMask refined = refine_mask(unit_delta, meta.p_z, meta.t_h);
  const RgbImage rgb_aug = augment_rgb(rgb, texture, refined, meta.beta);
  auto dropped = apply_dropout(rgb, rgb_aug, depth, depth_aug, refined, meta.d_rgb, meta.d_depth);
  return {std::move(dropped.rgb), std::move(dropped.depth), std::move(dropped.mask), scaled_delta(unit_delta, meta.p_z),
          meta};
}

/// A labelled sample must differ from its normal counterpart somewhere in the
/// mask for at least one modality.
inline bool label_is_sound(const AnomalySample& s, const RgbImage& rgb, const DepthImage& depth) {
  for (std::size_t y = 0; y < s.mask.height(); ++y) {
    for (std::size_t x = 0; x < s.mask.width(); ++x) {
      if (!s.mask(y, x)) continue;
      if (s.depth(y, x) != depth(y, x)) return true;
      for (std::size_t c = 0; c < 3; ++c) {
        if (s.rgb(y, x, c) != rgb(y, x, c)) return true;
      }
    }
  }
  return false;
}

/// Largest std (px) whose kernel still fits a min_dim-sized image.
inline double clamp_sigma_to_fit(double std_px, std::size_t min_dim) {
  auto fits = [&](double s) { return kernel_size_for(SkewParams::isotropic(s)) <= min_dim; };
  if (fits(std_px)) return std_px;
  const std::size_t limit = (min_dim % 2 == 1) ? min_dim : min_dim - 1;
  double s = static_cast<double>(limit) / 6.0;
  while (!fits(s)) s = std::nextafter(s, 0.0);
  return s;
}

}  // namespace detail

/// Replays a recorded sample. `texture` must be the image named by meta.texture.
inline AnomalySample replay_sample(const RgbImage& rgb, const DepthImage& depth, const BinaryMask& fg,
                                   const RgbImage& texture, const SampleMeta& meta) {
  if (meta.fallback) {
    return {rgb, depth, BinaryMask(depth.height(), depth.width()), FloatMap(depth.height(), depth.width()), meta};
  }
  return detail::render(rgb, depth, fg, texture, meta);
}

/// One synthetic anomaly sample: Perlin placement, ternary mask restricted to
/// the foreground, skew-smoothed depth change, refined label, texture-mixed
/// RGB, then augmentation dropout. Placement and shape are redrawn when the
/// refined mask comes out empty; after `max_attempts` the normal pair is
/// returned with an empty mask.
inline AnomalySample synthesize_one(const RgbImage& rgb, const DepthImage& depth, const BinaryMask& fg,
                                    const SynthesisConfig& cfg, Rng& rng, const TextureSource& textures) {
  cfg.validate();
  require_same_shape(rgb, depth, "synthesize_one rgb/depth");
  require_same_shape(fg, depth, "synthesize_one foreground/depth");
  detail::require(count_nonzero(fg) > 0, Errc::no_foreground, "foreground mask is empty");
  detail::require(depth.height() >= 2 && depth.width() >= 2, Errc::invalid_argument, "images must be at least 2x2");
  const std::size_t h = depth.height();
  const std::size_t w = depth.width();
  const std::size_t min_dim = std::min(h, w);

  SampleMeta meta;
  meta.t_p = cfg.depth.t_p;
  meta.t_h = cfg.depth.t_h;
  meta.beta = rng.uniform(cfg.beta_min, cfg.beta_max);
  meta.d_rgb = rng.bernoulli(cfg.p_d);
  meta.d_depth = rng.bernoulli(cfg.p_d);
  TextureDraw texture = sample_texture(textures, rng, h, w);
  meta.texture = texture.id;

  const auto freq_limit = static_cast<int>(min_dim);
  for (int attempt = 1; attempt <= cfg.max_attempts; ++attempt) {
    meta.attempts = attempt;
    meta.perlin.freq_x = std::min(1 << rng.uniform_int(cfg.perlin_scale_min, cfg.perlin_scale_max), freq_limit);
    meta.perlin.freq_y = std::min(1 << rng.uniform_int(cfg.perlin_scale_min, cfg.perlin_scale_max), freq_limit);
    meta.perlin.seed = rng.next_u64();
    const double a0 = rng.uniform(cfg.alpha_min, cfg.alpha_max);
    const double a1 = rng.uniform(cfg.alpha_min, cfg.alpha_max);
    const double scale = static_cast<double>(min_dim) / cfg.sigma_reference_size;
    const double std_px = detail::clamp_sigma_to_fit(rng.uniform(cfg.sigma_min, cfg.sigma_max) * scale, min_dim);
    meta.skew = SkewParams::isotropic(std_px, {a0, a1});
    meta.kernel_size = kernel_size_for(meta.skew);
    meta.p_z = rng.uniform(cfg.depth.p_min, cfg.depth.p_max);

    AnomalySample sample = detail::render(rgb, depth, fg, texture.image, meta);
    const bool dropped_both = meta.d_rgb && meta.d_depth;
    const bool has_defect = std::any_of(sample.delta.data().begin(), sample.delta.data().end(),
                                        [&](double d) { return std::abs(d) >= meta.t_h; });
    if (has_defect && (dropped_both || detail::label_is_sound(sample, rgb, depth))) return sample;
  }
  meta.fallback = true;
  return replay_sample(rgb, depth, fg, texture.image, meta);
}

/// Variant that derives the foreground from the depth threshold t_f.
inline AnomalySample synthesize_one(const RgbImage& rgb, const DepthImage& depth, const SynthesisConfig& cfg, Rng& rng,
                                    const TextureSource& textures) {
  const double t_f = cfg.depth.t_f.value_or(default_foreground_threshold(depth));
  return synthesize_one(rgb, depth, foreground_mask(depth, t_f), cfg, rng, textures);
}

// ---------------------------------------------------------------------------
// Dataset layout

/// One normal pair: <root>/<group>/{rgb/<stem>.png, depth/<stem>.pfm, fg/<stem>.png}.
struct NormalPair {
  std::string group;  ///< generic relative path of the directory holding rgb/, depth/, fg/ ("." for the root)
  std::string stem;

  fs::path rgb(const fs::path& root) const { return root / group / "rgb" / (stem + ".png"); }
  fs::path depth(const fs::path& root) const { return root / group / "depth" / (stem + ".pfm"); }
  fs::path fg(const fs::path& root) const { return root / group / "fg" / (stem + ".png"); }
};

/// Finds every directory under `root` (including root) that has an rgb/
/// subdirectory; pairs are ordered by (group, stem). Missing depth or fg
/// members raise file_not_found.
inline std::vector<NormalPair> discover_pairs(const fs::path& root) {
  std::error_code ec;
  detail::require(fs::is_directory(root, ec), Errc::file_not_found, "input directory " + root.string());
  std::vector<fs::path> groups;
  if (fs::is_directory(root / "rgb", ec)) groups.push_back(root);
  for (const auto& entry : fs::recursive_directory_iterator(root)) {
    if (entry.is_directory() && fs::is_directory(entry.path() / "rgb", ec)) groups.push_back(entry.path());
  }
  std::vector<NormalPair> pairs;
  for (const auto& dir : groups) {
    const std::string group = fs::relative(dir, root).generic_string();
    std::vector<std::string> stems;
    for (const auto& f : fs::directory_iterator(dir / "rgb")) {
      if (f.is_regular_file() && f.path().extension() == ".png") stems.push_back(f.path().stem().string());
    }
    std::sort(stems.begin(), stems.end());
    for (auto& stem : stems) {
      NormalPair pair{group, std::move(stem)};
      for (const auto& member : {pair.depth(root), pair.fg(root)}) {
        detail::require(fs::is_regular_file(member, ec), Errc::file_not_found,
                        "missing pair member " + member.string());
      }
      pairs.push_back(std::move(pair));
    }
  }
  std::sort(pairs.begin(), pairs.end(),
            [](const auto& a, const auto& b) { return std::tie(a.group, a.stem) < std::tie(b.group, b.stem); });
  return pairs;
}

namespace detail {

inline std::string sample_name(const std::string& stem, int k) {
  char suffix[16];
  std::snprintf(suffix, sizeof suffix, "_%02d", k);
  return stem + suffix;
}

inline std::string join_rel(const std::string& group, const std::string& leaf) {
  return group == "." ? leaf : group + "/" + leaf;
}

}  // namespace detail

struct NormalRecord {
  NormalPair pair;
  RgbImage rgb;
  DepthImage depth;
  BinaryMask fg;
};

inline NormalRecord load_normal_pair(const fs::path& root, const NormalPair& pair) {
  NormalRecord rec{pair, io::load_rgb(pair.rgb(root)), io::load_depth(pair.depth(root)), io::load_mask(pair.fg(root))};
  require_same_shape(rec.rgb, rec.depth, "rgb/depth of " + pair.stem);
  require_same_shape(rec.fg, rec.depth, "fg/depth of " + pair.stem);
  detail::require(is_unit_range(rec.depth.data()), Errc::invalid_argument,
                  pair.depth(root).string() + ": depth must be normalized to [0, 1]");
  return rec;
}

inline TextureSource make_texture_source(const SynthesisConfig& cfg) {
  return cfg.textures_root ? TextureSource::scan(*cfg.textures_root) : TextureSource::procedural();
}

/// Writes one synthetic sample per (pair, k) and a manifest.json. Each sample
/// uses its own stream derived from (seed, pair index, k), so the output tree
/// does not depend on `workers`.
inline json synthesize_dataset(const fs::path& normal_dir, const SynthesisConfig& cfg, const fs::path& out_dir,
                               std::size_t workers = 1, const Log& log = Log()) {
  cfg.validate();
  const auto pairs = discover_pairs(normal_dir);
  const TextureSource textures = make_texture_source(cfg);
  const std::size_t per_pair = static_cast<std::size_t>(cfg.samples_per_pair);
  std::vector<json> entries(pairs.size() * per_pair);
  if (pairs.empty()) log.warn("no normal pairs found under " + normal_dir.string());
  fs::create_directories(out_dir);

  parallel_for(entries.size(), workers, [&](std::size_t job) {
    const std::size_t i = job / per_pair;
    const int k = static_cast<int>(job % per_pair);
    const NormalPair& pair = pairs[i];
    const NormalRecord normal = load_normal_pair(normal_dir, pair);
    Rng rng = Rng::derive(cfg.seed, i, static_cast<std::uint64_t>(k));
    const AnomalySample s = synthesize_one(normal.rgb, normal.depth, normal.fg, cfg, rng, textures);

    const std::string name = detail::sample_name(pair.stem, k);
    auto rel = [&](const char* dir, const char* ext) { return detail::join_rel(pair.group, std::string(dir) + "/" + name + ext); };
    json entry{
        {"id", detail::join_rel(pair.group, name)},
        {"group", pair.group},
        {"pair_index", i},
        {"k", k},
        {"source",
         {{"rgb", detail::join_rel(pair.group, "rgb/" + pair.stem + ".png")},
          {"depth", detail::join_rel(pair.group, "depth/" + pair.stem + ".pfm")},
          {"fg", detail::join_rel(pair.group, "fg/" + pair.stem + ".png")}}},
        {"rgb", rel("rgb", ".png")},
        {"depth", rel("depth", ".pfm")},
        {"mask", rel("mask", ".png")},
        {"delta", rel("delta", ".pfm")},
        {"meta_file", rel("meta", ".json")},
        {"anomalous", count_nonzero(s.mask) > 0},
        {"meta", to_json(s.meta)},
    };
    io::save_rgb(out_dir / entry["rgb"].get<std::string>(), s.rgb);
    io::save_depth(out_dir / entry["depth"].get<std::string>(), s.depth);
    io::save_mask(out_dir / entry["mask"].get<std::string>(), s.mask);
    io::save_float_map(out_dir / entry["delta"].get<std::string>(), s.delta);
    io::save_json(out_dir / entry["meta_file"].get<std::string>(), to_json(s.meta));
    log.debug("wrote " + entry["id"].get<std::string>());
    entries[job] = std::move(entry);
  });

  json manifest{{"version", 1}, {"config", to_json(cfg)}, {"samples", json::array()}};
  for (auto& e : entries) manifest["samples"].push_back(std::move(e));
  io::save_json(out_dir / "manifest.json", manifest);
  log.info("synthesized " + std::to_string(entries.size()) + " samples from " + std::to_string(pairs.size()) +
           " normal pairs");
  return manifest;
}

// ---------------------------------------------------------------------------
// Validation of an emitted dataset

struct ValidationReport {
  std::size_t samples = 0;
  std::vector<std::string> failures;
  bool ok() const noexcept { return failures.empty(); }
};

inline json to_json(const ValidationReport& r) {
  return {{"samples", r.samples}, {"ok", r.ok()}, {"failures", r.failures}};
}

/// Re-checks sample invariants on disk. With `normal_dir` (the synthesis
/// input), also checks each sample against its normal pair: unmasked RGB is
/// untouched, depth equals clamp(Z + delta) or Z when dropped, and every
/// labelled sample differs from the normal pair inside its mask.
inline ValidationReport validate_dataset(const fs::path& out_dir, const std::optional<fs::path>& normal_dir = std::nullopt) {
  ValidationReport report;
  json manifest;
  try {
    manifest = io::load_json(out_dir / "manifest.json");
  } catch (const Error& e) {
    report.failures.push_back(e.what());
    return report;
  }
  if (!manifest.contains("samples") || !manifest["samples"].is_array()) {
    report.failures.push_back("manifest.json: missing samples array");
    return report;
  }
  for (const auto& entry : manifest["samples"]) {
    ++report.samples;
    const std::string id = entry.value("id", std::string("<unnamed>"));
    auto fail = [&](const std::string& why) { report.failures.push_back(id + ": " + why); };
    try {
      const SampleMeta meta = meta_from_json(io::load_json(out_dir / entry.at("meta_file").get<std::string>()));
      if (!(meta == meta_from_json(entry.at("meta")))) fail("meta file differs from manifest");
      const RgbImage rgb = io::load_rgb(out_dir / entry.at("rgb").get<std::string>());
      const DepthImage depth = io::load_depth(out_dir / entry.at("depth").get<std::string>());
      const BinaryMask mask = io::load_mask(out_dir / entry.at("mask").get<std::string>(), true);
      const FloatMap delta = io::load_float_map(out_dir / entry.at("delta").get<std::string>());
      if (!rgb.same_shape(depth) || !mask.same_shape(depth) || !delta.same_shape(depth)) {
        fail("image dimensions differ");
        continue;
      }
      if (!is_unit_range(depth.data())) fail("depth outside [0, 1]");
      if (!is_finite(delta.data())) fail("delta has non-finite values");
      const bool both_dropped = meta.d_rgb && meta.d_depth;
      if (entry.at("anomalous").get<bool>() != (count_nonzero(mask) > 0)) fail("anomalous flag does not match mask");
      // The label is |delta| >= t_h unless both modalities were dropped. Delta
      // is stored as float32, so pixels within rounding of t_h are not judged.
      std::size_t mismatched = 0;
      for (std::size_t i = 0; i < mask.pixels(); ++i) {
        const double mag = std::abs(delta.data()[i]);
        const bool expected = !both_dropped && mag >= meta.t_h;
        const bool ambiguous = std::abs(mag - meta.t_h) <= 1e-6 * meta.t_h;
        if (!ambiguous && (mask.data()[i] != 0) != expected) ++mismatched;
      }
      if (mismatched) fail(std::to_string(mismatched) + " mask pixels disagree with delta and t_h");

      if (normal_dir) {
        const NormalPair pair{entry.at("group").get<std::string>(),
                              fs::path(entry.at("source").at("rgb").get<std::string>()).stem().string()};
        const NormalRecord normal = load_normal_pair(*normal_dir, pair);
        if (!normal.depth.same_shape(depth)) {
          fail("normal pair has different dimensions");
          continue;
        }
        std::size_t rgb_outside = 0, depth_bad = 0;
        bool differs = false;
        for (std::size_t y = 0; y < depth.height(); ++y) {
          for (std::size_t x = 0; x < depth.width(); ++x) {
            bool rgb_changed = false;
            for (std::size_t c = 0; c < 3; ++c) rgb_changed |= rgb(y, x, c) != normal.rgb(y, x, c);
            if (rgb_changed && (!mask(y, x) || meta.d_rgb)) ++rgb_outside;
            const double expected = meta.d_depth ? normal.depth(y, x)
                                                 : std::clamp(normal.depth(y, x) + delta(y, x), 0.0, 1.0);
            if (std::abs(depth(y, x) - expected) > 1e-6) ++depth_bad;
            if (mask(y, x) && (rgb_changed || depth(y, x) != normal.depth(y, x))) differs = true;
          }
        }
        if (rgb_outside) fail(std::to_string(rgb_outside) + " RGB pixels changed outside the mask");
        if (depth_bad) fail(std::to_string(depth_bad) + " depth pixels inconsistent with delta");
        if (count_nonzero(mask) > 0 && !differs) fail("labelled anomalous but identical to the normal pair");
      }
    } catch (const std::exception& e) {
      fail(e.what());
    }
  }
  return report;
}

}  // namespace das3d
