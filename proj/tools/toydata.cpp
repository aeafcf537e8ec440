// Writes a small raw-scan tree (xyz/, rgb/, gt/) for trying the pipeline
// without a real dataset.
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "das3d/io.hpp"
#include "das3d/toy_scene.hpp"

int main(int argc, char** argv) {
  std::string output;
  std::size_t count = 4, size = 96;
  std::uint64_t seed = 0;
  std::string format = "tiff";
  bool defects = false;
  double noise = 0.0005;

  CLI::App app{"Generate toy scans for das3d", "das3d_toydata"};
  app.add_option("--output", output, "output directory")->required();
  app.add_option("--count", count, "number of scans")->check(CLI::PositiveNumber);
  app.add_option("--size", size, "side length in pixels")->check(CLI::Range(16, 4096));
  app.add_option("--seed", seed, "seed");
  app.add_option("--format", format, "xyz file format")->check(CLI::IsMember({"tiff", "raw"}));
  app.add_option("--noise", noise, "uniform depth noise half-width");
  app.add_flag("--defects", defects, "add a dent to every scan and write gt/ masks");
  CLI11_PARSE(app, argc, argv);

  namespace fs = std::filesystem;
  try {
    for (std::size_t i = 0; i < count; ++i) {
      das3d::ToySceneOptions opt;
      opt.height = opt.width = size;
      opt.noise = noise;
      opt.defect = defects;
      opt.seed = das3d::hash_words({seed, i});
      const auto scene = das3d::make_toy_scene(opt);
      char stem[16];
      std::snprintf(stem, sizeof stem, "%03zu", i);
      const fs::path root(output);
      if (format == "tiff") {
        das3d::save_xyz_tiff(root / "xyz" / (std::string(stem) + ".tiff"), scene.grid);
      } else {
        das3d::save_xyz_raw(root / "xyz" / (std::string(stem) + ".raw"), scene.grid);
      }
      das3d::io::save_rgb(root / "rgb" / (std::string(stem) + ".png"), scene.rgb);
      if (defects) das3d::io::save_mask(root / "gt" / (std::string(stem) + ".png"), scene.gt);
    }
  } catch (const std::exception& e) {
    std::cerr << "das3d_toydata: " << e.what() << '\n';
    return 1;
  }
  std::cout << "{\"scans\": " << count << ", \"output\": \"" << output << "\"}\n";
  return 0;
}
