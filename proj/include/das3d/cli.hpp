#pragma once

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "das3d/error.hpp"
#include "das3d/evaluate.hpp"
#include "das3d/io.hpp"
#include "das3d/log.hpp"
#include "das3d/pipeline.hpp"
#include "das3d/preprocess.hpp"
#include "das3d/skew_filter.hpp"
#include "json.hpp"

namespace das3d::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

inline std::optional<std::uint64_t> env_seed() {
  const char* v = std::getenv("DAS3D_SEED");
  if (v == nullptr || *v == '\0') return std::nullopt;
  try {
    std::size_t used = 0;
    const auto seed = std::stoull(v, &used);
    if (v[used] == '\0') return seed;
  } catch (const std::exception&) {
  }
  throw Error(Errc::invalid_argument, std::string("DAS3D_SEED is not an unsigned integer: ") + v);
}

/// Parsed command line.
struct CliConfig {
  std::string subcommand;
  std::optional<std::string> config_file;
  std::size_t workers = 1;
  std::string log_level = "warn";

  // preprocess / synthesize
  std::string input;
  std::string output;
  std::optional<std::uint64_t> seed;
  double ransac_dist = 0.005;
  std::size_t ransac_iters = 500;
  std::size_t size = 256;
  bool dataset_normalization = false;

  // synthesize overrides
  std::optional<int> samples_per_pair;
  std::optional<std::string> textures;
  std::optional<double> p_d, p_min, p_max, t_h, t_p, sigma_min, sigma_max;

  // evaluate
  std::string pred;
  std::string gt;
  std::string metrics = "iauroc,pauroc,aupro";
  double fpr_limit = 0.3;
  std::size_t bins = 0;
  int connectivity = 8;
  std::optional<std::string> report_out;

  // validate
  std::string dataset;
  std::optional<std::string> normal;

  // kernel
  double alpha_x = 0.0;
  double alpha_y = 0.0;
  double sigma = 4.0;
  std::string kernel_out = "kernel.pfm";
};

namespace detail {

inline std::vector<std::string> split_list(const std::string& csv) {
  std::vector<std::string> out;
  std::stringstream ss(csv);
  for (std::string item; std::getline(ss, item, ',');) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

inline int run_preprocess(const CliConfig& c, std::ostream& out, const Log& log) {
  PreprocessOptions opt;
  opt.ransac_dist = c.ransac_dist;
  opt.ransac_iters = c.ransac_iters;
  opt.size = c.size;
  opt.seed = c.seed.value_or(env_seed().value_or(0));
  opt.dataset_normalization = c.dataset_normalization;
  const auto summary = preprocess_directory(c.input, c.output, opt, c.workers, log);
  io::save_json(std::filesystem::path(c.output) / "preprocess.json", summary);
  out << nlohmann::json{{"pairs", summary["pairs"].size()}, {"output", c.output}}.dump() << '\n';
  return kExitOk;
}

/// defaults < DAS3D_SEED < config file < flags.
inline SynthesisConfig synthesis_config(const CliConfig& c) {
  SynthesisConfig cfg;
  if (auto s = env_seed()) cfg.seed = *s;
  if (c.config_file) cfg = apply_config_json(cfg, io::load_json(*c.config_file));
  if (c.seed) cfg.seed = *c.seed;
  if (c.samples_per_pair) cfg.samples_per_pair = *c.samples_per_pair;
  if (c.textures) cfg.textures_root = *c.textures;
  if (c.p_d) cfg.p_d = *c.p_d;
  if (c.p_min) cfg.depth.p_min = *c.p_min;
  if (c.p_max) cfg.depth.p_max = *c.p_max;
  if (c.t_h) cfg.depth.t_h = *c.t_h;
  if (c.t_p) cfg.depth.t_p = *c.t_p;
  if (c.sigma_min) cfg.sigma_min = *c.sigma_min;
  if (c.sigma_max) cfg.sigma_max = *c.sigma_max;
  cfg.validate();
  return cfg;
}

inline int run_synthesize(const CliConfig& c, std::ostream& out, const Log& log) {
  const SynthesisConfig cfg = synthesis_config(c);
  const auto manifest = synthesize_dataset(c.input, cfg, c.output, c.workers, log);
  std::size_t anomalous = 0;
  for (const auto& s : manifest["samples"]) anomalous += s["anomalous"].get<bool>() ? 1 : 0;
  out << nlohmann::json{{"samples", manifest["samples"].size()}, {"anomalous", anomalous}, {"output", c.output}}.dump()
      << '\n';
  return kExitOk;
}

inline int run_evaluate(const CliConfig& c, std::ostream& out, const Log& log) {
  EvaluateOptions opt;
  opt.metrics = split_list(c.metrics);
  opt.aupro.fpr_limit = c.fpr_limit;
  opt.aupro.bins = c.bins;
  opt.aupro.connectivity = c.connectivity;
  const auto report = evaluate(load_eval_set(c.pred, c.gt, log), opt, log);
  if (c.report_out) io::save_json(*c.report_out, report);
  out << report.dump(2) << '\n';
  return kExitOk;
}

inline int run_validate(const CliConfig& c, std::ostream& out, const Log& log) {
  std::optional<std::filesystem::path> normal;
  if (c.normal) normal = *c.normal;
  const auto report = validate_dataset(c.dataset, normal);
  for (const auto& f : report.failures) log.warn(f);
  out << to_json(report).dump(2) << '\n';
  return report.ok() ? kExitOk : kExitFailure;
}

inline int run_kernel(const CliConfig& c, std::ostream& out, const Log&) {
  const SkewKernel kernel = build_kernel(SkewParams::isotropic(c.sigma, {c.alpha_y, c.alpha_x}));
  FloatMap map(kernel.size(), kernel.size());
  double com_row = 0.0, com_col = 0.0;
  const auto r = static_cast<double>(kernel.radius());
  for (std::size_t i = 0; i < kernel.size(); ++i) {
    for (std::size_t j = 0; j < kernel.size(); ++j) {
      map(i, j) = kernel(i, j);
      com_row += kernel(i, j) * (static_cast<double>(i) - r);
      com_col += kernel(i, j) * (static_cast<double>(j) - r);
    }
  }
  io::save_float_map(c.kernel_out, map);
  out << nlohmann::json{{"size", kernel.size()},
                        {"sum", kernel.sum()},
                        {"center_of_mass", {com_row, com_col}},
                        {"output", c.kernel_out}}
             .dump()
      << '\n';
  return kExitOk;
}

}  // namespace detail

/// Runs one subcommand. Exit codes: 0 success, 1 failure (including failed
/// validation), 2 usage error. Machine-readable JSON goes to `out`.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CliConfig c;
  CLI::App app{"Dual-modality (depth + RGB) 3D anomaly synthesis, preprocessing and evaluation", "das3d"};
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();
  app.add_option("--log-level", c.log_level, "quiet, warn, info or debug")
      ->check(CLI::IsMember({"quiet", "warn", "info", "debug"}));

  auto add_seed = [&](CLI::App* sub) {
    sub->add_option("--seed", c.seed, "master seed (falls back to DAS3D_SEED)");
  };
  auto add_workers = [&](CLI::App* sub) {
    sub->add_option("--workers", c.workers, "worker threads")->check(CLI::PositiveNumber);
  };

  auto* pre = app.add_subcommand("preprocess", "remove the background plane, resize and normalize raw scans");
  pre->add_option("--input", c.input, "directory tree with xyz/ and rgb/ folders")->required();
  pre->add_option("--output", c.output, "output directory")->required();
  pre->add_option("--ransac-dist", c.ransac_dist, "plane inlier distance")->check(CLI::PositiveNumber);
  pre->add_option("--ransac-iters", c.ransac_iters, "RANSAC hypotheses")->check(CLI::PositiveNumber);
  pre->add_option("--size", c.size, "output side length")->check(CLI::PositiveNumber);
  pre->add_flag("--dataset-normalization", c.dataset_normalization, "one depth range per directory group");
  add_seed(pre);
  add_workers(pre);

  auto* syn = app.add_subcommand("synthesize", "generate synthetic anomaly samples from normal pairs");
  syn->add_option("--input", c.input, "preprocessed normal data (rgb/, depth/, fg/)")->required();
  syn->add_option("--output", c.output, "output directory")->required();
  syn->add_option("--config", c.config_file, "JSON config file");
  syn->add_option("--samples-per-pair", c.samples_per_pair, "samples per normal pair");
  syn->add_option("--textures", c.textures, "texture image directory (procedural textures if omitted)");
  syn->add_option("--p-d", c.p_d, "augmentation dropout probability");
  syn->add_option("--p-min", c.p_min, "minimum defect magnitude");
  syn->add_option("--p-max", c.p_max, "maximum defect magnitude");
  syn->add_option("--t-h", c.t_h, "mask refinement threshold");
  syn->add_option("--t-p", c.t_p, "noise ternarization threshold");
  syn->add_option("--sigma-min", c.sigma_min, "minimum skew kernel std (px at 256)");
  syn->add_option("--sigma-max", c.sigma_max, "maximum skew kernel std (px at 256)");
  add_seed(syn);
  add_workers(syn);

  auto* eval = app.add_subcommand("evaluate", "compute I-AUROC, P-AUROC and AUPRO");
  eval->add_option("--pred", c.pred, "directory of PFM anomaly maps")->required();
  eval->add_option("--gt", c.gt, "directory of ground-truth PNG masks")->required();
  eval->add_option("--metrics", c.metrics, "comma-separated subset of iauroc,pauroc,aupro");
  eval->add_option("--fpr-limit", c.fpr_limit, "AUPRO integration limit")->check(CLI::Range(0.0, 1.0));
  eval->add_option("--bins", c.bins, "AUPRO threshold bins (0 = exact)");
  eval->add_option("--connectivity", c.connectivity, "4 or 8")->check(CLI::IsMember({4, 8}));
  eval->add_option("--out", c.report_out, "also write the report to this file");

  auto* val = app.add_subcommand("validate", "re-check the invariants of a synthesized dataset");
  val->add_option("dataset", c.dataset, "synthesize output directory")->required();
  val->add_option("--normal", c.normal, "synthesis input, enables checks against the normal pairs");

  auto* ker = app.add_subcommand("kernel", "dump a skew Gaussian kernel as PFM");
  ker->add_option("--alpha-x", c.alpha_x, "skew along columns");
  ker->add_option("--alpha-y", c.alpha_y, "skew along rows");
  ker->add_option("--sigma", c.sigma, "isotropic std in px")->check(CLI::PositiveNumber);
  ker->add_option("--out", c.kernel_out, "output PFM path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    app.exit(e, out, err);
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    app.exit(e, out, err);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitUsage;
  }

  const Log log(parse_log_level(c.log_level), &err);
  try {
    if (pre->parsed()) return detail::run_preprocess(c, out, log);
    if (syn->parsed()) return detail::run_synthesize(c, out, log);
    if (eval->parsed()) return detail::run_evaluate(c, out, log);
    if (val->parsed()) return detail::run_validate(c, out, log);
    if (ker->parsed()) return detail::run_kernel(c, out, log);
  } catch (const Error& e) {
    err << "das3d: " << e.what() << '\n';
    return e.code() == Errc::invalid_argument ? kExitUsage : kExitFailure;
  } catch (const std::exception& e) {
    err << "das3d: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace das3d::cli
