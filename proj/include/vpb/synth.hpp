#pragma once

// Deterministic 3-class synthetic image dataset used by the end-to-end tests
// and demos. Classes are chosen to be linearly separable in raw pixel space:
//   0 gradient_h  brightness falls from left to right
//   1 gradient_v  brightness falls from top to bottom
//   2 disc        bright disc on a dark background
// Every image gets random slope/offset/position jitter, a per-channel tint and
// uniform pixel noise.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <string>

#include "vpb/image.hpp"
#include "vpb/manifest.hpp"
#include "vpb/png_io.hpp"
#include "vpb/rng.hpp"

namespace vpb {

struct SynthOptions {
  std::uint64_t seed = 7;
  int per_class = 20;
  int train_per_class = 10;
  int width = 96;
  int height = 80;
};

inline constexpr const char* kSynthClasses[] = {"gradient_h", "gradient_v", "disc"};

inline Image synth_image(int cls, int w, int h, Rng& rng) {
  const double slope = rng.uniform(0.7, 1.0);
  const double offset = rng.uniform(-0.1, 0.1);
  const double cx = w / 2.0 + rng.uniform(-w / 10.0, w / 10.0);
  const double cy = h / 2.0 + rng.uniform(-h / 10.0, h / 10.0);
  const double radius = rng.uniform(0.2, 0.35) * std::min(w, h);
  double tint[3];
  for (double& t : tint) t = rng.uniform(0.8, 1.0);

  Image img = Image::make(w, h, 3);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double u = (x + 0.5) / w, v = (y + 0.5) / h;
      double f = 0.0;
      if (cls == 0) f = 0.5 + slope * (0.5 - u) + offset;
      if (cls == 1) f = 0.5 + slope * (0.5 - v) + offset;
      if (cls == 2) {
        const double d = std::hypot(x + 0.5 - cx, y + 0.5 - cy);
        f = (d < radius ? 0.85 : 0.2) + offset;
      }
      for (int c = 0; c < 3; ++c) {
        img.at(x, y, c) = round_to_u8(std::clamp(f, 0.0, 1.0) * 255.0 * tint[c] + rng.uniform(-12.0, 12.0));
      }
    }
  }
  return img;
}

/// Writes images/<id>.png and manifest.json under `dir` and returns the manifest.
inline DatasetManifest write_synthetic_dataset(const std::filesystem::path& dir, const SynthOptions& opt = {}) {
  if (opt.per_class < 2 || opt.train_per_class < 1 || opt.train_per_class >= opt.per_class) {
    throw Error(ErrorCode::InvalidArgument, "need 1 <= train_per_class < per_class");
  }
  DatasetManifest m;
  m.dataset = "synthetic3";
  m.classes.assign(std::begin(kSynthClasses), std::end(kSynthClasses));
  m.splits = {"train", "test"};
  Rng rng(opt.seed);
  int index = 0;
  for (int cls = 0; cls < 3; ++cls) {
    for (int k = 0; k < opt.per_class; ++k, ++index) {
      char id[32];
      std::snprintf(id, sizeof(id), "img_%03d", index);
      const std::string path = std::string("images/") + id + ".png";
      save_png(synth_image(cls, opt.width, opt.height, rng), dir / path);
      m.images.push_back({id, path, static_cast<std::uint32_t>(cls), k < opt.train_per_class ? "train" : "test",
                          std::nullopt, std::nullopt, std::nullopt});
    }
  }
  std::filesystem::create_directories(dir);
  std::ofstream out(dir / "manifest.json", std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + (dir / "manifest.json").string());
  out << to_json(m).dump(2) << "\n";
  return m;
}

}  // namespace vpb
