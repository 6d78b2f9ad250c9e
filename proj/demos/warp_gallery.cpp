// Renders one bundled synthetic image under increasing homography strength,
// with and without the bounded crop, and reports the inscribed-rectangle area.
//
//   warp_gallery [OUT_DIR] [SEED]

#include <cstdio>
#include <filesystem>
#include <string>

#include "vpb/geometry.hpp"
#include "vpb/image.hpp"
#include "vpb/png_io.hpp"
#include "vpb/protocols.hpp"

using namespace vpb;
namespace fs = std::filesystem;

int main(int argc, char** argv) {
  const fs::path out = argc > 1 ? argv[1] : "warp_gallery";
  const std::uint64_t seed = argc > 2 ? std::stoull(argv[2]) : 0;
  fs::create_directories(out);
  const Image base = rcc(load_png(fs::path(VPB_DATA_DIR) / "synthetic3/images/img_040.png"), 224);
  std::printf("alpha  fill_px  bounded_area_frac\n");
  for (double alpha : {0.0, 0.2, 0.4, 0.6, 0.8}) {
    Rng rng(derive_seed(seed, "gallery/alpha=" + format_number(alpha)));
    const auto w = sample_warp(224, 224, alpha, rng);
    const Image warped = warp_image(base, w.homography);
    const Image bounded = bounded_view(base, w.homography, 224);
    std::size_t fill = 0;
    for (int y = 0; y < 224; ++y) {
      for (int x = 0; x < 224; ++x) fill += warped.at(x, y, 0) == 0 && warped.at(x, y, 1) == 0 && warped.at(x, y, 2) == 0;
    }
    const auto quad = ConvexPolygon::from_vertices({w.displaced.begin(), w.displaced.end()});
    const double frac = alpha == 0.0 ? 1.0 : max_inscribed_rect(clip_to_rect(quad, {0, 0, 224, 224})).area() / (224.0 * 224.0);
    const std::string tag = "alpha_" + format_number(alpha);
    save_png(warped, out / (tag + "_default.png"));
    save_png(bounded, out / (tag + "_bounded.png"));
    std::printf("%-5s  %7zu  %.3f\n", format_number(alpha).c_str(), fill, frac);
  }
  std::printf("wrote %s\n", out.string().c_str());
}
