#pragma once

// Raster operations: bilinear sampling, resizing, homography warps, the
// bounded (inscribed-crop) view and the resize + centre-crop transform.
//
// Sampling convention: pixel (i, j) has its centre at (i + 0.5, j + 0.5) in
// continuous coordinates and the image covers [0, W] x [0, H]. A sample
// position outside that extent is fill-black; inside it, neighbours beyond the
// border are clamped to the edge.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "vpb/error.hpp"
#include "vpb/geometry.hpp"

namespace vpb {

struct Image {
  int width = 0;
  int height = 0;
  int channels = 0;
  std::vector<std::uint8_t> pixels;  // row-major, interleaved channels

  static Image make(int width, int height, int channels, std::uint8_t fill = 0) {
    if (width < 1 || height < 1) throw Error(ErrorCode::InvalidArgument, "image must be at least 1x1");
    if (channels != 1 && channels != 3) {
      throw Error(ErrorCode::InvalidArgument, "channels must be 1 or 3");
    }
    return Image{width, height, channels,
                 std::vector<std::uint8_t>(static_cast<std::size_t>(width) * height * channels, fill)};
  }

  std::size_t index(int x, int y, int c = 0) const {
    return (static_cast<std::size_t>(y) * width + x) * channels + c;
  }
  std::uint8_t at(int x, int y, int c = 0) const { return pixels[index(x, y, c)]; }
  std::uint8_t& at(int x, int y, int c = 0) { return pixels[index(x, y, c)]; }

  friend bool operator==(const Image&, const Image&) = default;
};

enum class WarpMode { Default, Bounded };

inline constexpr std::string_view to_string(WarpMode m) {
  return m == WarpMode::Default ? "Default" : "Bounded";
}

inline WarpMode parse_warp_mode(std::string_view s) {
  if (s == "Default") return WarpMode::Default;
  if (s == "Bounded") return WarpMode::Bounded;
  throw Error(ErrorCode::InvalidConfig, "unknown warp mode '" + std::string(s) + "'");
}

inline std::uint8_t round_to_u8(double v) {
  return static_cast<std::uint8_t>(std::clamp(std::floor(v + 0.5), 0.0, 255.0));
}

/// Bilinear sample at continuous position (sx, sy). Writes `channels` values
/// to `out` and returns false (leaving zeros) when the position is outside.
inline bool sample_bilinear(const Image& img, double sx, double sy, double* out) {
  for (int c = 0; c < img.channels; ++c) out[c] = 0.0;
  if (!(sx >= 0.0 && sx <= img.width && sy >= 0.0 && sy <= img.height)) return false;
  const double fx = sx - 0.5;
  const double fy = sy - 0.5;
  const double flx = std::floor(fx);
  const double fly = std::floor(fy);
  const double tx = fx - flx;
  const double ty = fy - fly;
  const int ix = static_cast<int>(flx);
  const int iy = static_cast<int>(fly);
  const int x0 = std::clamp(ix, 0, img.width - 1);
  const int x1 = std::clamp(ix + 1, 0, img.width - 1);
  const int y0 = std::clamp(iy, 0, img.height - 1);
  const int y1 = std::clamp(iy + 1, 0, img.height - 1);
  const double w00 = (1.0 - tx) * (1.0 - ty);
  const double w10 = tx * (1.0 - ty);
  const double w01 = (1.0 - tx) * ty;
  const double w11 = tx * ty;
  for (int c = 0; c < img.channels; ++c) {
    const double v = w00 * img.at(x0, y0, c) + w10 * img.at(x1, y0, c) +
                     w01 * img.at(x0, y1, c) + w11 * img.at(x1, y1, c);
    out[c] = v;
  }
  return true;
}

inline Image resize_bilinear(const Image& img, int out_width, int out_height) {
  if (out_width == img.width && out_height == img.height) return img;
  Image out = Image::make(out_width, out_height, img.channels);
  const double sx = static_cast<double>(img.width) / out_width;
  const double sy = static_cast<double>(img.height) / out_height;
  std::array<double, 3> v{};
  for (int y = 0; y < out_height; ++y) {
    for (int x = 0; x < out_width; ++x) {
      sample_bilinear(img, (x + 0.5) * sx, (y + 0.5) * sy, v.data());
      for (int c = 0; c < img.channels; ++c) out.at(x, y, c) = round_to_u8(v[c]);
    }
  }
  return out;
}

/// Copies pixels [x0, x1) x [y0, y1).
inline Image crop(const Image& img, int x0, int y0, int x1, int y1) {
  if (x0 < 0 || y0 < 0 || x1 > img.width || y1 > img.height || x1 <= x0 || y1 <= y0) {
    throw Error(ErrorCode::InvalidArgument, "crop window outside image");
  }
  Image out = Image::make(x1 - x0, y1 - y0, img.channels);
  for (int y = y0; y < y1; ++y) {
    std::copy_n(img.pixels.begin() + static_cast<std::ptrdiff_t>(img.index(x0, y)),
                static_cast<std::size_t>(x1 - x0) * img.channels,
                out.pixels.begin() + static_cast<std::ptrdiff_t>(out.index(0, y - y0)));
  }
  return out;
}

/// Inverse-mapped bilinear warp; content mapped from outside the source is black.
inline Image warp_image(const Image& img, const Homography& h) {
  const Homography inv = invert(h);
  const auto& m = inv.matrix();
  Image out = Image::make(img.width, img.height, img.channels);
  std::array<double, 3> v{};
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      const double px = x + 0.5;
      const double py = y + 0.5;
      const double w = m[6] * px + m[7] * py + m[8];
      if (std::abs(w) <= tol::kPointAtInfinity) continue;
      const double sx = (m[0] * px + m[1] * py + m[2]) / w;
      const double sy = (m[3] * px + m[4] * py + m[5]) / w;
      if (!sample_bilinear(img, sx, sy, v.data())) continue;
      for (int c = 0; c < img.channels; ++c) out.at(x, y, c) = round_to_u8(v[c]);
    }
  }
  return out;
}

inline constexpr int kMinCropSide = 8;
inline constexpr double kCropRoundingSlack = 1e-6;

/// Integer crop window of the bounded view, [x0, x1) x [y0, y1).
struct CropWindow {
  int x0, y0, x1, y1;
};

/// The crop window used by bounded_view: the maximum inscribed axis-aligned
/// rectangle of the warped canvas, clipped to the canvas, rounded inward.
inline CropWindow bounded_crop_window(int width, int height, const Homography& h) {
  const auto corners = canvas_corners(width, height);
  std::vector<Point2> quad;
  quad.reserve(4);
  try {
    for (const auto& c : corners) quad.push_back(apply_point(h, c));
  } catch (const Error&) {
    throw Error(ErrorCode::EmptyIntersection, "canvas corner maps to infinity");
  }
  if (shoelace_area(quad) < 0) std::reverse(quad.begin(), quad.end());
  ConvexPolygon footprint = [&] {
    try {
      return ConvexPolygon::from_vertices(quad);
    } catch (const Error& e) {
      throw Error(ErrorCode::EmptyIntersection, std::string("warped canvas is degenerate: ") + e.what());
    }
  }();
  const ConvexPolygon visible = clip_to_rect(footprint, RectAA::make(0, 0, width, height));
  const RectAA r = max_inscribed_rect(visible);
  CropWindow win{
      std::max(0, static_cast<int>(std::ceil(r.x0 - kCropRoundingSlack))),
      std::max(0, static_cast<int>(std::ceil(r.y0 - kCropRoundingSlack))),
      std::min(width, static_cast<int>(std::floor(r.x1 + kCropRoundingSlack))),
      std::min(height, static_cast<int>(std::floor(r.y1 + kCropRoundingSlack))),
  };
  if (win.x1 - win.x0 < kMinCropSide || win.y1 - win.y0 < kMinCropSide) {
    throw Error(ErrorCode::CropTooSmall, "inscribed rectangle is smaller than 8x8 px");
  }
  return win;
}

/// Warp, crop the maximum inscribed axis-aligned rectangle of the visible
/// warped canvas, and resize it to out_side x out_side.
inline Image bounded_view(const Image& img, const Homography& h, int out_side) {
  if (out_side < kMinCropSide) throw Error(ErrorCode::InvalidArgument, "out_side must be >= 8");
  const CropWindow win = bounded_crop_window(img.width, img.height, h);
  const Image warped = warp_image(img, h);
  return resize_bilinear(crop(warped, win.x0, win.y0, win.x1, win.y1), out_side, out_side);
}

/// Resize so the shorter side equals `side` (other side scaled, rounded half
/// away from zero), then take the centred side x side crop.
inline Image rcc(const Image& img, int side) {
  if (side < 1) throw Error(ErrorCode::InvalidArgument, "side must be >= 1");
  int rw, rh;
  if (img.width <= img.height) {
    rw = side;
    rh = static_cast<int>(std::lround(static_cast<double>(img.height) * side / img.width));
  } else {
    rh = side;
    rw = static_cast<int>(std::lround(static_cast<double>(img.width) * side / img.height));
  }
  const Image resized = resize_bilinear(img, rw, rh);
  const int x0 = (rw - side) / 2;
  const int y0 = (rh - side) / 2;
  return crop(resized, x0, y0, x0 + side, y0 + side);
}

}  // namespace vpb
