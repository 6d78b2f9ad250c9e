#include <gtest/gtest.h>
#include <png.h>

#include <cstring>
#include <filesystem>

#include "vpb/image.hpp"
#include "vpb/parallel.hpp"
#include "vpb/png_io.hpp"

#include "oracles.hpp"

using namespace vpb;
namespace fs = std::filesystem;

namespace {

Image random_image(int w, int h, int c, std::uint64_t seed) {
  Image img = Image::make(w, h, c);
  Rng rng(seed);
  for (auto& p : img.pixels) p = static_cast<std::uint8_t>(rng.below(256));
  return img;
}

using oracle::count_black;

Image transpose(const Image& img) {
  Image t = Image::make(img.height, img.width, img.channels);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      for (int c = 0; c < img.channels; ++c) t.at(y, x, c) = img.at(x, y, c);
    }
  }
  return t;
}

fs::path temp_dir() {
  auto dir = fs::temp_directory_path() / ("vpb_imageops_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST(WarpImage, IdentityIsBitExact) {
  const Image img = random_image(31, 17, 3, 1);
  EXPECT_EQ(warp_image(img, Homography::identity()), img);
  Rng rng(2);
  EXPECT_EQ(warp_image(img, sample_homography(31, 17, 0.0, rng)), img);
}

TEST(WarpImage, TranslationShiftsContent) {
  const Image img = random_image(32, 32, 1, 3);
  const Image out = warp_image(img, Homography::translation(10, 0));
  for (int y = 0; y < 32; ++y) {
    for (int x = 0; x < 32; ++x) {
      const int expected = x < 10 ? 0 : img.at(x - 10, y);
      ASSERT_EQ(out.at(x, y), expected) << x << "," << y;
    }
  }
}

TEST(WarpImage, StrongWarpIntroducesFill) {
  const Image white = Image::make(224, 224, 3, 255);
  Rng rng(3);
  const auto w = sample_warp(224, 224, 0.8, rng);
  // some corner must move inward by at least a pixel for fill to be guaranteed
  bool inward = false;
  for (int i = 0; i < 4; ++i) {
    const double dx = w.displaced[i].x - w.corners[i].x;
    const double dy = w.displaced[i].y - w.corners[i].y;
    const double ix = w.corners[i].x == 0 ? dx : -dx;
    const double iy = w.corners[i].y == 0 ? dy : -dy;
    inward = inward || (ix > 1 && iy > 1);
  }
  ASSERT_TRUE(inward);
  EXPECT_GT(count_black(warp_image(white, w.homography)), 0u);
}

TEST(BoundedView, IdentityEqualsFullResize) {
  const Image img = random_image(64, 48, 3, 4);
  EXPECT_EQ(bounded_view(img, Homography::identity(), 224), resize_bilinear(img, 224, 224));
}

TEST(BoundedView, TranslationExcludesFillColumns) {
  const Image img = random_image(40, 40, 1, 5);
  const auto win = bounded_crop_window(40, 40, Homography::translation(10, 0));
  EXPECT_EQ(win.x0, 10);
  EXPECT_EQ(win.x1, 40);
  EXPECT_EQ(win.y0, 0);
  EXPECT_EQ(win.y1, 40);
  const Image shifted = warp_image(img, Homography::translation(10, 0));
  EXPECT_EQ(bounded_view(img, Homography::translation(10, 0), 32),
            resize_bilinear(crop(shifted, 10, 0, 40, 40), 32, 32));
}

TEST(BoundedView, NoFillOnWhiteImage) {
  const Image white = Image::make(224, 224, 3, 255);
  Rng rng(3);
  const auto h = sample_homography(224, 224, 0.6, rng);
  EXPECT_GT(count_black(warp_image(white, h)), 0u);
  EXPECT_EQ(count_black(bounded_view(white, h, 224)), 0u);
}

TEST(BoundedView, CroppedPixelsMapInsideSource) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    const double alpha = 0.8 * rng.uniform01();
    const auto h = sample_homography(224, 224, alpha, rng);
    const auto win = bounded_crop_window(224, 224, h);
    const auto inv = invert(h);
    for (int y = win.y0; y < win.y1; ++y) {
      for (int x = win.x0; x < win.x1; ++x) {
        const Point2 s = apply_point(inv, {x + 0.5, y + 0.5});
        ASSERT_GE(s.x, -0.5);
        ASSERT_LE(s.x, 224.5);
        ASSERT_GE(s.y, -0.5);
        ASSERT_LE(s.y, 224.5);
      }
    }
  }
}

TEST(BoundedView, CropTooSmall) {
  // shrink the canvas into a 5x5 corner patch
  const auto h = Homography::from_matrix({0.05, 0, 0, 0, 0.05, 0, 0, 0, 1});
  try {
    bounded_crop_window(100, 100, h);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::CropTooSmall);
  }
}

TEST(BoundedView, EmptyIntersection) {
  try {
    bounded_crop_window(100, 100, Homography::translation(500, 0));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyIntersection);
  }
}

TEST(Rcc, SquareInputUnchanged) {
  const Image img = random_image(224, 224, 3, 6);
  EXPECT_EQ(rcc(img, 224), img);
}

TEST(Rcc, LandscapeResizeThenCentreCrop) {
  const Image img = random_image(448, 300, 3, 7);
  // 448 * 224 / 300 = 334.51 -> 335; crop origin floor((335 - 224) / 2) = 55
  const Image expected = crop(resize_bilinear(img, 335, 224), 55, 0, 279, 224);
  EXPECT_EQ(rcc(img, 224), expected);
}

TEST(Rcc, PortraitIsTransposeOfLandscape) {
  const Image img = random_image(448, 300, 1, 8);
  const Image a = transpose(rcc(img, 224));
  const Image b = rcc(transpose(img), 224);
  ASSERT_EQ(a.width, b.width);
  ASSERT_EQ(a.height, b.height);
  for (std::size_t i = 0; i < a.pixels.size(); ++i) {
    ASSERT_LE(std::abs(int(a.pixels[i]) - int(b.pixels[i])), 1);
  }
}

TEST(Rcc, AlwaysSideBySide) {
  Rng rng(9);
  for (int i = 0; i < 25; ++i) {
    const int w = 1 + static_cast<int>(rng.below(300));
    const int h = 1 + static_cast<int>(rng.below(300));
    const int side = 1 + static_cast<int>(rng.below(64));
    const Image out = rcc(Image::make(w, h, 1, 7), side);
    EXPECT_EQ(out.width, side);
    EXPECT_EQ(out.height, side);
  }
}

TEST(Warp, ParallelMapMatchesSequential) {
  std::vector<Image> imgs;
  std::vector<Homography> hs;
  for (std::uint64_t i = 0; i < 6; ++i) {
    imgs.push_back(random_image(48, 48, 3, 100 + i));
    Rng rng(i);
    hs.push_back(sample_homography(48, 48, 0.5, rng));
  }
  std::vector<Image> seq(imgs.size()), par(imgs.size());
  for (std::size_t i = 0; i < imgs.size(); ++i) seq[i] = warp_image(imgs[i], hs[i]);
  parallel_for(imgs.size(), 4, [&](std::size_t i) { par[i] = warp_image(imgs[i], hs[i]); });
  EXPECT_EQ(seq, par);
}

TEST(Png, RgbRoundTrip) {
  const auto dir = temp_dir();
  const Image img = random_image(17, 13, 3, 10);
  save_png(img, dir / "rgb.png");
  EXPECT_EQ(load_png(dir / "rgb.png"), img);
  const Image gray = random_image(5, 9, 1, 11);
  save_png(gray, dir / "gray.png");
  EXPECT_EQ(load_png(dir / "gray.png"), gray);
}

TEST(Png, OneBlackPixel) {
  const auto dir = temp_dir();
  save_png(Image::make(1, 1, 1, 0), dir / "one.png");
  const Image img = load_png(dir / "one.png");
  EXPECT_EQ(img.width, 1);
  EXPECT_EQ(img.height, 1);
  EXPECT_EQ(img.at(0, 0), 0);
}

TEST(Png, SixteenBitAndAlphaRejected) {
  const auto dir = temp_dir();
  {
    png_image png;
    std::memset(&png, 0, sizeof(png));
    png.version = PNG_IMAGE_VERSION;
    png.width = 4;
    png.height = 4;
    png.format = PNG_FORMAT_LINEAR_Y;
    std::vector<png_uint_16> data(16, 1000);
    ASSERT_TRUE(png_image_write_to_file(&png, (dir / "deep.png").c_str(), 0, data.data(), 0, nullptr));
  }
  {
    png_image png;
    std::memset(&png, 0, sizeof(png));
    png.version = PNG_IMAGE_VERSION;
    png.width = 2;
    png.height = 2;
    png.format = PNG_FORMAT_RGBA;
    std::vector<png_byte> data(16, 128);
    ASSERT_TRUE(png_image_write_to_file(&png, (dir / "alpha.png").c_str(), 0, data.data(), 0, nullptr));
  }
  for (const char* name : {"deep.png", "alpha.png"}) {
    try {
      load_png(dir / name);
      FAIL() << name;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::UnsupportedPngVariant) << name;
    }
  }
}

TEST(Png, MissingFileIsIoError) {
  try {
    load_png("/nonexistent/definitely/not/here.png");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::IoError);
  }
}
