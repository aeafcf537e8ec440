// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <string>

#include "das3d/das3d.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace das3d;

namespace {

int failures = 0;

void report(const char* name, bool ok, const std::string& detail) {
  std::printf("%s  %-28s %s\n", ok ? "PASS" : "FAIL", name, detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

template <class F>
void guarded(const char* name, F&& body) {
  try {
    body();
  } catch (const std::exception& e) {
    report(name, false, std::string("exception: ") + e.what());
  }
}

void kernel_symmetry() {
  const auto t0 = std::chrono::steady_clock::now();
  double worst = 0.0;
  for (double sigma : {1.0, 2.0, 4.0}) {
    const auto k = build_kernel(SkewParams::isotropic(sigma));
    const auto ref = oracle::gaussian_kernel(sigma, k.size());
    for (std::size_t i = 0; i < ref.size(); ++i) worst = std::max(worst, std::abs(k.weights()[i] - ref[i]));
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  report("kernel_symmetry", worst < 1e-9 && secs < 1.0, fmt("max err %.3g (< 1e-9), %.3f s (< 1 s)", worst, secs));
}

void kernel_normalization() {
  std::mt19937_64 gen(101);
  std::uniform_real_distribution<double> alpha(-5.0, 5.0), ev(0.25, 16.0), angle(0.0, std::numbers::pi);
  double worst = 0.0;
  bool nonneg = true;
  for (int n = 0; n < 1000; ++n) {
    const double l0 = ev(gen), l1 = ev(gen), th = angle(gen);
    const double c = std::cos(th), s = std::sin(th);
    const double s01 = (l0 - l1) * c * s;
    const SkewParams p{{alpha(gen), alpha(gen)}, {{{l0 * c * c + l1 * s * s, s01}, {s01, l0 * s * s + l1 * c * c}}}};
    const auto k = build_kernel(p);
    long double total = 0.0L;
    for (double w : k.weights()) {
      nonneg = nonneg && w >= 0.0;
      total += w;
    }
    worst = std::max(worst, static_cast<double>(std::abs(total - 1.0L)));
  }
  report("kernel_normalization", nonneg && worst <= 1e-12,
         fmt("1000 kernels, max |sum - 1| %.3g (<= 1e-12), non-negative ", worst) + (nonneg ? "yes" : "no"));
}

void oracle_equivalence() {
  Rng rng(202);
  double worst = 0.0;
  std::size_t mask_mismatch = 0;
  for (int n = 0; n < 200; ++n) {
    const auto h = static_cast<std::size_t>(rng.uniform_int(2, 16)), w = static_cast<std::size_t>(rng.uniform_int(2, 16));
    const std::size_t px = h * w;
    FloatMap noise(h, w), unit(h, w);
    BinaryMask fg(h, w), m(h, w);
    DepthImage z(h, w), za(h, w);
    RgbImage i(h, w), u(h, w);
    for (auto& v : noise.data()) v = rng.uniform(-1.0, 1.0);
    for (auto& v : unit.data()) v = rng.uniform(-1.0, 1.0);
    for (auto& v : fg.data()) v = rng.bernoulli(0.6);
    for (auto& v : m.data()) v = rng.bernoulli(0.5);
    for (auto& v : z.data()) v = rng.uniform();
    for (auto& v : za.data()) v = rng.uniform();
    for (auto& v : i.data()) v = rng.uniform();
    for (auto& v : u.data()) v = rng.uniform();
    const double t_p = rng.uniform(0.05, 0.95), p_z = rng.uniform(0.0, 0.5), t_h = rng.uniform(0.001, 0.05);
    const double beta = rng.uniform(0.0, 0.8);
    const bool d_i = rng.bernoulli(0.5), d_z = rng.bernoulli(0.5);

    const auto ternary = ternarize(noise, t_p);
    const auto defects = compose_mask(fg, ternary);
    const std::size_t fit = std::min(h, w) % 2 ? std::min(h, w) : std::min(h, w) - 1;  // largest odd size that fits
    const double sigma = rng.uniform(0.1, static_cast<double>(fit) / 6.0);
    const auto kernel = build_kernel(SkewParams::isotropic(sigma, {rng.uniform(-3, 3), rng.uniform(-3, 3)}));
    const auto delta = delta_depth(defects, kernel);
    const auto depth = augment_depth(z, unit, p_z);
    const auto refined = refine_mask(unit, p_z, t_h);
    const auto rgb = augment_rgb(i, u, m, beta);
    const auto dropped = apply_dropout(i, u, z, za, m, d_i, d_z);

    std::vector<double> def(px);
    for (std::size_t p = 0; p < px; ++p) {
      const int t = oracle::ternary(noise.data()[p], t_p);
      const int c = oracle::compose(fg.data()[p], t);
      def[p] = c;
      mask_mismatch += ternary.data()[p] != t;
      mask_mismatch += defects.data()[p] != c;
      mask_mismatch += refined.data()[p] != oracle::refined(unit.data()[p], p_z, t_h);
      worst = std::max(worst, std::abs(depth.data()[p] - oracle::augmented_depth(z.data()[p], unit.data()[p], p_z)));
      for (std::size_t ch = 0; ch < 3; ++ch) {
        const std::size_t q = p * 3 + ch;
        worst = std::max(worst, std::abs(rgb.data()[q] - oracle::augmented_rgb(i.data()[q], u.data()[q], m.data()[p], beta)));
        const auto o = oracle::dropout(i.data()[q], u.data()[q], z.data()[p], za.data()[p], m.data()[p], d_i, d_z);
        worst = std::max(worst, std::abs(dropped.rgb.data()[q] - o.rgb));
        if (ch == 0) {
          worst = std::max(worst, std::abs(dropped.depth.data()[p] - o.depth));
          mask_mismatch += dropped.mask.data()[p] != o.mask;
        }
      }
    }
    const auto ref = oracle::convolve(def, h, w, {kernel.weights().begin(), kernel.weights().end()}, kernel.size());
    for (std::size_t p = 0; p < px; ++p) worst = std::max(worst, std::abs(delta.data()[p] - ref[p]));
  }
  report("oracle_equivalence", mask_mismatch == 0 && worst <= 1e-12,
         fmt("200 instances, %.0f integer mismatches (0), max real err %.3g (<= 1e-12)", static_cast<double>(mask_mismatch),
             worst));
}

void impulse_and_plateau() {
  std::mt19937_64 gen(303);
  std::uniform_real_distribution<double> a(-3.0, 3.0), s(0.5, 3.0);
  double worst = 0.0;
  std::size_t off_plateau = 0;
  for (int n = 0; n < 50; ++n) {
    const auto k = build_kernel(SkewParams::isotropic(s(gen), {a(gen), a(gen)}));
    const std::size_t r = k.radius(), side = 4 * r + 9, c = side / 2;
    for (std::int8_t sign : {std::int8_t{1}, std::int8_t{-1}}) {
      TernaryMask imp(side, side);
      imp(c, c) = sign;
      const auto out = delta_depth(imp, k);
      for (std::size_t y = 0; y < side; ++y) {
        for (std::size_t x = 0; x < side; ++x) {
          const bool inside = y + r >= c && y <= c + r && x + r >= c && x <= c + r;
          const double expected = inside ? sign * k(y + r - c, x + r - c) : 0.0;
          worst = std::max(worst, std::abs(out(y, x) - expected));
        }
      }
      const auto flat = delta_depth(TernaryMask(side, side, sign), k);
      for (std::size_t y = r; y + r < side; ++y) {
        for (std::size_t x = r; x + r < side; ++x) off_plateau += flat(y, x) != static_cast<double>(sign);
      }
    }
  }
  report("impulse_and_plateau", worst <= 1e-12 && off_plateau == 0,
         fmt("impulse max err %.3g (<= 1e-12), %.0f interior pixels off exact +-1 (0)", worst,
             static_cast<double>(off_plateau)));
}

void cross_modal_alignment() {
  SynthesisConfig cfg;
  cfg.seed = 404;
  std::size_t samples = 0, set_mismatch = 0, rgb_outside = 0, labelled = 0;
  for (std::uint64_t pair = 0; pair < 5; ++pair) {
    ToySceneOptions o;
    o.height = o.width = 56;
    o.seed = pair;
    const auto scene = make_toy_scene(o);
    PreprocessOptions opt;
    opt.size = 48;
    const auto n = preprocess_grid(scene.grid, scene.rgb, opt, pair);
    for (std::uint64_t k = 0; k < 20; ++k, ++samples) {
      Rng rng = Rng::derive(cfg.seed, pair, k);
      const auto s = synthesize_one(n.rgb, n.depth, n.fg, cfg, rng, TextureSource::procedural());
      const bool both = s.meta.d_rgb && s.meta.d_depth;
      labelled += count_nonzero(s.mask) > 0;
      for (std::size_t p = 0; p < s.mask.pixels(); ++p) {
        const bool over = std::abs(s.delta.data()[p]) >= s.meta.t_h;
        set_mismatch += over != (s.mask.data()[p] != 0 || (both && over));
        if (both) set_mismatch += s.mask.data()[p] != 0;
        for (std::size_t c = 0; c < 3; ++c) {
          rgb_outside += s.rgb.data()[p * 3 + c] != n.rgb.data()[p * 3 + c] && !s.mask.data()[p];
        }
      }
    }
  }
  report("cross_modal_alignment", set_mismatch == 0 && rgb_outside == 0,
         fmt("%.0f samples (%.0f labelled), %.0f set mismatches (0), ", static_cast<double>(samples),
             static_cast<double>(labelled), static_cast<double>(set_mismatch)) +
             fmt("%.0f RGB changes outside mask (0)", static_cast<double>(rgb_outside)));
}

void determinism() {
  oracle::TempDir normal("acc_normal"), a("acc_w1"), b("acc_w8");
  fixture::write_normal_dataset(normal.path(), 4, 48, 7);
  SynthesisConfig cfg;
  cfg.seed = 505;
  cfg.samples_per_pair = 4;
  synthesize_dataset(normal.path(), cfg, a.path(), 1);
  synthesize_dataset(normal.path(), cfg, b.path(), 8);
  const auto ta = oracle::tree(a.path()), tb = oracle::tree(b.path());
  report("determinism", !ta.empty() && ta == tb,
         fmt("%.0f files, workers 1 vs 8 byte-identical: ", static_cast<double>(ta.size())) + (ta == tb ? "yes" : "no"));
}

void auroc_correctness() {
  std::mt19937_64 gen(606);
  double worst = 0.0;
  for (int n = 0; n < 500; ++n) {
    const std::size_t size = 2 + gen() % 49, levels = 2 + gen() % 8;
    std::vector<double> s(size);
    std::vector<std::uint8_t> l(size);
    for (std::size_t i = 0; i < size; ++i) {
      s[i] = static_cast<double>(gen() % levels) / static_cast<double>(levels);
      l[i] = gen() % 2;
    }
    l[0] = 0;
    l[1] = 1;
    worst = std::max(worst, std::abs(auroc(s, l) - oracle::auroc_pairs(s, l)));
  }
  const double fixture_value = auroc(std::vector<double>{0.1, 0.4, 0.4, 0.8}, std::vector<std::uint8_t>{0, 0, 1, 1});
  report("auroc_correctness", worst <= 1e-12 && fixture_value == 0.875,
         fmt("500 sets, max err %.3g (<= 1e-12), fixture %.6g (0.875)", worst, fixture_value));
}

void aupro_correctness() {
  std::mt19937_64 gen(707);
  double worst = 0.0;
  std::size_t max_components = 0;
  for (int n = 0; n < 100; ++n) {
    const std::size_t h = 3 + gen() % 6, w = 3 + gen() % 6, blobs = 1 + gen() % 3, levels = 2 + gen() % 10;
    FloatMap m(h, w);
    BinaryMask g(h, w);
    for (std::size_t b = 0; b < blobs; ++b) {
      const std::size_t y = gen() % h, x = gen() % w;
      g(y, x) = 1;
      if (x + 1 < w && gen() % 2) g(y, x + 1) = 1;
    }
    for (std::size_t i = 0; i < m.pixels(); ++i) {
      m.data()[i] = static_cast<double>(gen() % (levels + 1)) / static_cast<double>(levels) + (g.data()[i] ? 0.3 : 0.0);
    }
    max_components = std::max(max_components, connected_components(g).count);
    const oracle::Instance inst{h, w, {m.data().begin(), m.data().end()}, {g.data().begin(), g.data().end()}};
    for (double limit : {0.3, 1.0}) {
      worst = std::max(worst, std::abs(aupro(PixelEval{{m}, {g}}, limit) - oracle::aupro_sweep({inst}, limit)));
    }
  }
  report("aupro_correctness", worst <= 1e-6 && max_components <= 3,
         fmt("100 instances (<= %.0f components), max err %.3g (<= 1e-6) at limits 0.3 and 1.0",
             static_cast<double>(max_components), worst));
}

void ransac_recovery() {
  double min_recall = 1.0, max_angle = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto planted = fixture::planted_plane(seed, 64, 0.001);
    const auto r = ransac_fit(planted.grid, 0.005, 500, seed);
    std::size_t truth = 0, recalled = 0;
    for (std::size_t i = 0; i < planted.on_plane.size(); ++i) {
      if (!planted.on_plane[i]) continue;
      ++truth;
      recalled += std::abs(r.plane.signed_distance(planted.grid.xyz[i])) <= 0.005;
    }
    min_recall = std::min(min_recall, static_cast<double>(recalled) / static_cast<double>(truth));
    max_angle = std::max(max_angle, oracle::angle_deg(r.plane.normal, planted.normal));
  }
  report("ransac_recovery", min_recall >= 0.99 && max_angle < 0.5,
         fmt("20 seeds, min recall %.4f (>= 0.99), max normal error %.4f deg (< 0.5)", min_recall, max_angle));
}

}  // namespace

int main() {
  guarded("kernel_symmetry", kernel_symmetry);
  guarded("kernel_normalization", kernel_normalization);
  guarded("oracle_equivalence", oracle_equivalence);
  guarded("impulse_and_plateau", impulse_and_plateau);
  guarded("cross_modal_alignment", cross_modal_alignment);
  guarded("determinism", determinism);
  guarded("auroc_correctness", auroc_correctness);
  guarded("aupro_correctness", aupro_correctness);
  guarded("ransac_recovery", ransac_recovery);
  std::printf("SKIP  %-28s benchmark detection scores need full datasets and a trained detector; out of scope\n",
              "benchmark_scores");
  std::printf("%d failure(s)\n", failures);
  return failures == 0 ? 0 : 1;
}
