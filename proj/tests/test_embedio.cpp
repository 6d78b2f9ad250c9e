#include <gtest/gtest.h>

#include <filesystem>
#include <string>

#include "vpb/embedding.hpp"
#include "vpb/manifest.hpp"
#include "vpb/rng.hpp"

using namespace vpb;
namespace fs = std::filesystem;

namespace {

EmbeddingSet small_set() {
  EmbeddingSet s;
  s.meta = {"toy", ModelType::SSL_ID, "unit", 3, 4};
  s.matrix = {0.5f, -1.0f, 2.0f, 0.0f, 1.0f, 1.0f, 1.0f, 1.0f, -3.25f, 0.125f, 7.0f, 8.0f};
  s.labels = {0, 1, 2};
  return s;
}

EmbeddingSet random_set(Rng& rng) {
  EmbeddingSet s;
  const auto n = 1 + rng.below(20);
  const auto d = 1 + rng.below(12);
  const auto c = 1 + rng.below(5);
  s.meta = {"m" + std::to_string(rng.below(100)), static_cast<ModelType>(rng.below(3)),
            "ds", static_cast<std::uint32_t>(c), static_cast<std::uint32_t>(d)};
  for (std::uint64_t i = 0; i < n * d; ++i) s.matrix.push_back(static_cast<float>(rng.uniform(-10, 10)));
  for (std::uint64_t i = 0; i < n; ++i) s.labels.push_back(static_cast<std::uint32_t>(rng.below(c)));
  if (rng.below(2)) {
    s.object_id.emplace();
    for (std::uint64_t i = 0; i < n; ++i) s.object_id->push_back(static_cast<std::uint32_t>(rng.below(50)));
  }
  if (rng.below(2)) {
    s.azimuth_deg.emplace();
    for (std::uint64_t i = 0; i < n; ++i) s.azimuth_deg->push_back(static_cast<float>(rng.uniform(0, 359.9)));
  }
  if (rng.below(2)) {
    s.view_id.emplace();
    for (std::uint64_t i = 0; i < n; ++i) s.view_id->push_back(static_cast<std::uint32_t>(rng.below(9)));
  }
  return s;
}

fs::path temp_dir() {
  auto dir = fs::temp_directory_path() / ("vpb_embedio_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  return dir;
}

template <typename F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::Internal;
}

}  // namespace

TEST(Emb1, RoundTripSmallSet) {
  const auto path = temp_dir() / "small.emb1";
  write_embedding_set(small_set(), path);
  EXPECT_EQ(read_embedding_set(path), small_set());
}

TEST(Emb1, CanonicalLayout) {
  const auto bytes = encode_emb1(small_set());
  ASSERT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "EMB1");
  EXPECT_EQ(bytes[4], 1);
  const std::string meta =
      R"({"count":3,"dataset":"unit","dim":4,"model_name":"toy","model_type":"SSL_ID","num_classes":3,"per_sample":[]})";
  std::uint64_t meta_len = 0;
  for (int i = 0; i < 8; ++i) meta_len |= std::uint64_t(bytes[8 + i]) << (8 * i);
  ASSERT_EQ(meta_len, meta.size());
  EXPECT_EQ(std::string(bytes.begin() + 16, bytes.begin() + 16 + meta.size()), meta);
  // crc + 12 floats + 3 labels
  EXPECT_EQ(bytes.size(), 16 + meta.size() + 4 + 12 * 4 + 3 * 4);
  // first matrix value 0.5f = 0x3F000000, little-endian
  const std::size_t m0 = 16 + meta.size() + 4;
  EXPECT_EQ(bytes[m0 + 3], 0x3F);
  EXPECT_EQ(bytes[m0 + 0], 0x00);
  // last label = 2
  EXPECT_EQ(bytes[bytes.size() - 4], 2);
}

TEST(Emb1, BadMagic) {
  auto bytes = encode_emb1(small_set());
  bytes[0] = 'X';
  bytes[1] = 'X';
  bytes[2] = 'X';
  bytes[3] = 'X';
  EXPECT_EQ(code_of([&] { decode_emb1(bytes); }), ErrorCode::FormatError);
}

TEST(Emb1, BadVersion) {
  auto bytes = encode_emb1(small_set());
  bytes[4] = 2;
  EXPECT_EQ(code_of([&] { decode_emb1(bytes); }), ErrorCode::FormatError);
}

TEST(Emb1, TruncatedMidMatrixReportsOffset) {
  auto bytes = encode_emb1(small_set());
  std::uint64_t meta_len = 0;
  for (int i = 0; i < 8; ++i) meta_len |= std::uint64_t(bytes[8 + i]) << (8 * i);
  const std::size_t matrix_start = 16 + meta_len + 4;
  const std::size_t cut = matrix_start + 10;
  bytes.resize(cut);
  try {
    decode_emb1(bytes);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::FormatError);
    const std::string msg = e.what();
    EXPECT_NE(msg.find("byte offset " + std::to_string(cut)), std::string::npos) << msg;
    EXPECT_NE(msg.find("matrix"), std::string::npos) << msg;
  }
}

TEST(Emb1, ChecksumMismatch) {
  auto bytes = encode_emb1(small_set());
  bytes[bytes.size() - 3 * 4 - 1] ^= 0x01;  // last matrix byte
  EXPECT_EQ(code_of([&] { decode_emb1(bytes); }), ErrorCode::ChecksumMismatch);
}

TEST(Emb1, TrailingBytesRejected) {
  auto bytes = encode_emb1(small_set());
  bytes.push_back(0);
  EXPECT_EQ(code_of([&] { decode_emb1(bytes); }), ErrorCode::FormatError);
}

TEST(Emb1, InvariantsEnforced) {
  auto s = small_set();
  s.labels[0] = 3;
  EXPECT_EQ(code_of([&] { encode_emb1(s); }), ErrorCode::FormatError);
  s = small_set();
  s.matrix[2] = std::numeric_limits<float>::quiet_NaN();
  EXPECT_EQ(code_of([&] { encode_emb1(s); }), ErrorCode::FormatError);
  s = small_set();
  s.azimuth_deg = std::vector<float>{10.0f, 360.0f, 5.0f};
  EXPECT_EQ(code_of([&] { encode_emb1(s); }), ErrorCode::FormatError);
}

TEST(Emb1, MissingFileIsIoError) {
  EXPECT_EQ(code_of([&] { read_embedding_set("/nonexistent/x.emb1"); }), ErrorCode::IoError);
}

TEST(Emb1, RandomisedRoundTripProperty) {
  Rng rng(2024);
  for (int i = 0; i < 200; ++i) {
    const EmbeddingSet s = random_set(rng);
    const auto bytes = encode_emb1(s);
    const EmbeddingSet back = decode_emb1(bytes);
    ASSERT_EQ(back, s) << "case " << i;
    ASSERT_EQ(encode_emb1(back), bytes) << "case " << i;
  }
}

TEST(PixelEmbedder, ConstantImageIsZero) {
  const auto v = pixel_embedder(Image::make(40, 30, 3, 117));
  ASSERT_EQ(v.size(), 256u);
  for (float x : v) EXPECT_NEAR(x, 0.0f, 1e-7);
}

TEST(PixelEmbedder, HalfBlackHalfWhiteIsAntisymmetric) {
  Image img = Image::make(32, 32, 3, 0);
  for (int y = 0; y < 32; ++y) {
    for (int x = 16; x < 32; ++x) {
      for (int c = 0; c < 3; ++c) img.at(x, y, c) = 255;
    }
  }
  const auto v = pixel_embedder(img);
  double sum = 0;
  for (int r = 0; r < 16; ++r) {
    for (int c = 0; c < 16; ++c) {
      EXPECT_NEAR(v[r * 16 + c], -v[r * 16 + (15 - c)], 1e-6);
      sum += v[r * 16 + c];
    }
  }
  EXPECT_NEAR(sum, 0.0, 1e-5);
  EXPECT_NEAR(v[0], -0.5f, 1e-6);
}

TEST(PixelEmbedder, IdenticalImagesIdenticalVectors) {
  Image img = Image::make(50, 70, 3);
  Rng rng(4);
  for (auto& p : img.pixels) p = static_cast<std::uint8_t>(rng.below(256));
  EXPECT_EQ(pixel_embedder(img), pixel_embedder(Image(img)));
}

TEST(PixelEmbedder, OnePixelPerturbationIsBounded) {
  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    Image img = Image::make(20 + static_cast<int>(rng.below(40)), 20 + static_cast<int>(rng.below(40)), 3);
    for (auto& p : img.pixels) p = static_cast<std::uint8_t>(rng.below(200));
    const auto before = pixel_embedder(img);
    const int x = static_cast<int>(rng.below(img.width));
    const int y = static_cast<int>(rng.below(img.height));
    const int c = static_cast<int>(rng.below(3));
    const int delta = 1 + static_cast<int>(rng.below(55));
    img.at(x, y, c) = static_cast<std::uint8_t>(img.at(x, y, c) + delta);
    const auto after = pixel_embedder(img);
    double sup = 0;
    for (std::size_t i = 0; i < before.size(); ++i) sup = std::max(sup, double(std::abs(after[i] - before[i])));
    EXPECT_LE(sup, delta / 255.0 + 1e-6);
  }
}

TEST(Manifest, ValidAndViolations) {
  const auto dir = temp_dir() / "manifest";
  fs::create_directories(dir / "img");
  save_png(Image::make(4, 4, 3, 10), dir / "img" / "a.png");
  save_png(Image::make(4, 4, 3, 20), dir / "img" / "b.png");

  DatasetManifest m;
  m.dataset = "toy";
  m.classes = {"x", "y"};
  m.splits = {"train", "test"};
  m.images = {{"a", "img/a.png", 0, "train", std::nullopt, std::nullopt, std::nullopt},
              {"b", "img/b.png", 1, "test", std::nullopt, std::nullopt, std::nullopt}};
  EXPECT_TRUE(validate_manifest(m, dir).empty());

  auto dup = m;
  dup.images[1].id = "a";
  const auto v1 = validate_manifest(dup, dir);
  ASSERT_EQ(v1.size(), 1u);
  EXPECT_EQ(v1[0].kind, ViolationKind::DuplicateId);

  auto az = m;
  az.images[0].azimuth_deg = 380.0;
  az.images[1].azimuth_deg = 10.0;
  const auto v2 = validate_manifest(az, dir);
  ASSERT_EQ(v2.size(), 1u);
  EXPECT_EQ(v2[0].kind, ViolationKind::RangeViolation);

  auto missing = m;
  missing.images[0].path = "img/nope.png";
  missing.images[1].label = 5;
  const auto v3 = validate_manifest(missing, dir);
  ASSERT_EQ(v3.size(), 2u);
  EXPECT_EQ(v3[0].kind, ViolationKind::MissingFile);
  EXPECT_EQ(v3[1].kind, ViolationKind::LabelOutOfRange);
}

TEST(Manifest, JsonRoundTrip) {
  DatasetManifest m;
  m.dataset = "mv";
  m.classes = {"car"};
  m.splits = {"all"};
  m.images = {{"v0", "a.png", 0, "all", 7u, 30.0, 2u}};
  const auto back = manifest_from_json(to_json(m));
  EXPECT_EQ(to_json(back), to_json(m));
  EXPECT_EQ(code_of([] { manifest_from_json(nlohmann::json{{"dataset", "x"}}); }),
            ErrorCode::InvalidManifest);
}
