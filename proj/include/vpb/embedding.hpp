#pragma once

// EmbeddingSet and its EMB1 container.
//
// EMB1 layout, all integers little-endian:
//   "EMB1" | u32 version (=1) | u64 meta_len | canonical JSON metadata
//   | u32 CRC-32 of the matrix payload | f32 matrix[count * dim]
//   | u32 labels[count] | per-sample blocks in descriptor order
// The JSON is serialised with sorted keys and no whitespace, so identical
// sets produce identical bytes.

#include <zlib.h>

#include <bit>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "vpb/error.hpp"
#include "vpb/image.hpp"

namespace vpb {

enum class ModelType { SSL_ID, SSL_PT, Supervised };

inline constexpr std::string_view to_string(ModelType t) {
  switch (t) {
    case ModelType::SSL_ID: return "SSL_ID";
    case ModelType::SSL_PT: return "SSL_PT";
    case ModelType::Supervised: return "Supervised";
  }
  return "Supervised";
}

/// Accepts the canonical tags and the table spellings "SSL (ID)" / "SSL (PT)".
inline ModelType parse_model_type(std::string_view s) {
  if (s == "SSL_ID" || s == "SSL (ID)") return ModelType::SSL_ID;
  if (s == "SSL_PT" || s == "SSL (PT)") return ModelType::SSL_PT;
  if (s == "Supervised") return ModelType::Supervised;
  throw Error(ErrorCode::FormatError, "unknown model type '" + std::string(s) + "'");
}

struct ModelMeta {
  std::string model_name;
  ModelType model_type = ModelType::Supervised;
  std::string dataset;
  std::uint32_t num_classes = 0;
  std::uint32_t dim = 0;

  friend bool operator==(const ModelMeta&, const ModelMeta&) = default;
};

struct EmbeddingSet {
  ModelMeta meta;
  std::vector<float> matrix;  // count x dim, row-major
  std::vector<std::uint32_t> labels;
  std::optional<std::vector<std::uint32_t>> object_id;
  std::optional<std::vector<float>> azimuth_deg;
  std::optional<std::vector<std::uint32_t>> view_id;

  std::size_t count() const { return labels.size(); }
  std::size_t dim() const { return meta.dim; }
  std::span<const float> row(std::size_t i) const {
    return std::span<const float>(matrix).subspan(i * meta.dim, meta.dim);
  }

  /// Throws FormatError naming the first violated invariant.
  void validate() const {
    const auto fail = [](const std::string& m) { throw Error(ErrorCode::FormatError, m); };
    if (labels.empty()) fail("embedding set must have at least one sample");
    if (meta.dim == 0) fail("dim must be >= 1");
    if (matrix.size() != labels.size() * meta.dim) fail("matrix size != count * dim");
    for (float v : matrix) {
      if (!std::isfinite(v)) fail("matrix contains NaN or Inf");
    }
    for (auto l : labels) {
      if (l >= meta.num_classes) fail("label " + std::to_string(l) + " >= num_classes");
    }
    if (object_id && object_id->size() != count()) fail("object_id length != count");
    if (view_id && view_id->size() != count()) fail("view_id length != count");
    if (azimuth_deg) {
      if (azimuth_deg->size() != count()) fail("azimuth_deg length != count");
      for (float a : *azimuth_deg) {
        if (!(a >= 0.0f && a < 360.0f)) fail("azimuth_deg outside [0, 360)");
      }
    }
  }

  friend bool operator==(const EmbeddingSet&, const EmbeddingSet&) = default;
};

/// Rows [indices] of `set`, preserving all per-sample metadata.
inline EmbeddingSet select_rows(const EmbeddingSet& set, std::span<const std::size_t> indices) {
  EmbeddingSet out;
  out.meta = set.meta;
  out.matrix.reserve(indices.size() * set.dim());
  for (auto i : indices) {
    const auto r = set.row(i);
    out.matrix.insert(out.matrix.end(), r.begin(), r.end());
    out.labels.push_back(set.labels[i]);
  }
  const auto pick = [&](const auto& src, auto& dst) {
    if (!src) return;
    dst.emplace();
    for (auto i : indices) dst->push_back((*src)[i]);
  };
  pick(set.object_id, out.object_id);
  pick(set.azimuth_deg, out.azimuth_deg);
  pick(set.view_id, out.view_id);
  return out;
}

namespace emb1 {

inline constexpr char kMagic[4] = {'E', 'M', 'B', '1'};
inline constexpr std::uint32_t kVersion = 1;

inline std::uint32_t crc32_of(std::span<const std::uint8_t> bytes) {
  uLong crc = ::crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed in chunks
  std::size_t off = 0;
  while (off < bytes.size()) {
    const auto n = static_cast<uInt>(std::min<std::size_t>(bytes.size() - off, 1u << 30));
    crc = ::crc32(crc, bytes.data() + off, n);
    off += n;
  }
  return static_cast<std::uint32_t>(crc);
}

class Writer {
 public:
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void raw(std::string_view s) { bytes_.insert(bytes_.end(), s.begin(), s.end()); }
  std::vector<std::uint8_t>& bytes() { return bytes_; }

 private:
  std::vector<std::uint8_t> bytes_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  void need(std::size_t n, std::string_view what) const {
    if (bytes_.size() - pos_ < n) {
      throw Error(ErrorCode::FormatError,
                  "truncated at byte offset " + std::to_string(bytes_.size()) + " while reading " +
                      std::string(what) + " (needed " + std::to_string(n) + " bytes at offset " +
                      std::to_string(pos_) + ")");
    }
  }
  std::uint32_t u32(std::string_view what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  std::uint64_t u64(std::string_view what) {
    need(8, what);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += 8;
    return v;
  }
  float f32(std::string_view what) { return std::bit_cast<float>(u32(what)); }
  std::span<const std::uint8_t> take(std::size_t n, std::string_view what) {
    need(n, what);
    auto s = bytes_.subspan(pos_, n);
    pos_ += n;
    return s;
  }
  std::size_t pos() const { return pos_; }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

struct Field {
  const char* name;
  const char* dtype;
};
inline constexpr Field kPerSampleFields[] = {
    {"object_id", "u32"}, {"azimuth_deg", "f32"}, {"view_id", "u32"}};

}  // namespace emb1

inline nlohmann::json embedding_meta_json(const EmbeddingSet& set) {
  nlohmann::json per_sample = nlohmann::json::array();
  if (set.object_id) per_sample.push_back({{"name", "object_id"}, {"dtype", "u32"}});
  if (set.azimuth_deg) per_sample.push_back({{"name", "azimuth_deg"}, {"dtype", "f32"}});
  if (set.view_id) per_sample.push_back({{"name", "view_id"}, {"dtype", "u32"}});
  return nlohmann::json{
      {"model_name", set.meta.model_name},
      {"model_type", std::string(to_string(set.meta.model_type))},
      {"dataset", set.meta.dataset},
      {"num_classes", set.meta.num_classes},
      {"dim", set.meta.dim},
      {"count", set.count()},
      {"per_sample", per_sample},
  };
}

inline std::vector<std::uint8_t> encode_emb1(const EmbeddingSet& set) {
  set.validate();
  emb1::Writer w;
  w.raw(std::string_view(emb1::kMagic, 4));
  w.u32(emb1::kVersion);
  const std::string meta = embedding_meta_json(set).dump();
  w.u64(meta.size());
  w.raw(meta);

  emb1::Writer payload;
  for (float v : set.matrix) payload.f32(v);
  w.u32(emb1::crc32_of(payload.bytes()));
  w.bytes().insert(w.bytes().end(), payload.bytes().begin(), payload.bytes().end());

  for (auto l : set.labels) w.u32(l);
  if (set.object_id) for (auto v : *set.object_id) w.u32(v);
  if (set.azimuth_deg) for (auto v : *set.azimuth_deg) w.f32(v);
  if (set.view_id) for (auto v : *set.view_id) w.u32(v);
  return std::move(w.bytes());
}

inline EmbeddingSet decode_emb1(std::span<const std::uint8_t> bytes) {
  emb1::Reader r(bytes);
  const auto magic = r.take(4, "magic");
  if (!std::equal(magic.begin(), magic.end(), emb1::kMagic)) {
    throw Error(ErrorCode::FormatError, "bad magic (expected EMB1)");
  }
  const auto version = r.u32("version");
  if (version != emb1::kVersion) {
    throw Error(ErrorCode::FormatError, "unsupported EMB1 version " + std::to_string(version));
  }
  const auto meta_len = r.u64("meta_len");
  if (meta_len > r.remaining()) r.need(static_cast<std::size_t>(meta_len), "metadata");
  const auto meta_bytes = r.take(static_cast<std::size_t>(meta_len), "metadata");

  EmbeddingSet set;
  std::vector<std::string> fields;
  std::size_t count = 0;
  try {
    const auto j = nlohmann::json::parse(meta_bytes.begin(), meta_bytes.end());
    set.meta.model_name = j.at("model_name").get<std::string>();
    set.meta.model_type = parse_model_type(j.at("model_type").get<std::string>());
    set.meta.dataset = j.at("dataset").get<std::string>();
    set.meta.num_classes = j.at("num_classes").get<std::uint32_t>();
    set.meta.dim = j.at("dim").get<std::uint32_t>();
    count = j.at("count").get<std::size_t>();
    for (const auto& f : j.at("per_sample")) {
      const auto name = f.at("name").get<std::string>();
      const auto dtype = f.at("dtype").get<std::string>();
      bool known = false;
      for (const auto& k : emb1::kPerSampleFields) {
        if (name == k.name && dtype == k.dtype) known = true;
      }
      if (!known) throw Error(ErrorCode::FormatError, "unknown per-sample field " + name + ":" + dtype);
      if (std::find(fields.begin(), fields.end(), name) != fields.end()) {
        throw Error(ErrorCode::FormatError, "duplicate per-sample field " + name);
      }
      fields.push_back(name);
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::FormatError, std::string("bad metadata JSON: ") + e.what());
  }

  const std::uint32_t stored_crc = r.u32("matrix checksum");
  const std::size_t n_values = count * set.meta.dim;
  if (set.meta.dim != 0 && n_values / set.meta.dim != count) {
    throw Error(ErrorCode::FormatError, "count * dim overflows");
  }
  const auto payload = r.take(n_values * 4, "matrix");
  if (emb1::crc32_of(payload) != stored_crc) {
    throw Error(ErrorCode::ChecksumMismatch, "matrix payload CRC-32 mismatch");
  }
  {
    emb1::Reader pr(payload);
    set.matrix.resize(n_values);
    for (auto& v : set.matrix) v = pr.f32("matrix");
  }
  set.labels.resize(count);
  for (auto& l : set.labels) l = r.u32("labels");
  for (const auto& name : fields) {
    if (name == "azimuth_deg") {
      set.azimuth_deg.emplace(count);
      for (auto& v : *set.azimuth_deg) v = r.f32("azimuth_deg");
    } else {
      auto& dst = name == "object_id" ? set.object_id : set.view_id;
      dst.emplace(count);
      for (auto& v : *dst) v = r.u32(name);
    }
  }
  if (r.remaining() != 0) {
    throw Error(ErrorCode::FormatError,
                "trailing bytes after offset " + std::to_string(r.pos()));
  }
  // the per-sample descriptor order is fixed on write; enforce it on read
  std::vector<std::string> canonical;
  for (const auto& k : emb1::kPerSampleFields) {
    if (std::find(fields.begin(), fields.end(), k.name) != fields.end()) canonical.push_back(k.name);
  }
  if (canonical != fields) throw Error(ErrorCode::FormatError, "per-sample fields out of order");
  set.validate();
  return set;
}

inline void write_embedding_set(const EmbeddingSet& set, const std::filesystem::path& path) {
  const auto bytes = encode_emb1(set);
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  // write then rename so readers never observe a partial file
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoError, "cannot open " + tmp.string() + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(ErrorCode::IoError, "write failed: " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(ErrorCode::IoError, "rename failed: " + path.string() + ": " + ec.message());
}

inline std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

inline EmbeddingSet read_embedding_set(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  try {
    return decode_emb1(bytes);
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Built-in pixel embedder
// ---------------------------------------------------------------------------

inline constexpr int kPixelEmbedSide = 16;
inline constexpr std::uint32_t kPixelEmbedDim = kPixelEmbedSide * kPixelEmbedSide;
inline constexpr std::string_view kPixelEmbedderName = "pixel16";

/// Grayscale, bilinear 16x16 thumbnail scaled to [0, 1], then mean-subtracted.
inline std::vector<float> pixel_embedder(const Image& img) {
  std::vector<double> gray(static_cast<std::size_t>(img.width) * img.height);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * img.width + x;
      gray[i] = img.channels == 3
                    ? 0.299 * img.at(x, y, 0) + 0.587 * img.at(x, y, 1) + 0.114 * img.at(x, y, 2)
                    : static_cast<double>(img.at(x, y));
    }
  }
  const auto g = [&](int x, int y) {
    x = std::clamp(x, 0, img.width - 1);
    y = std::clamp(y, 0, img.height - 1);
    return gray[static_cast<std::size_t>(y) * img.width + x];
  };
  std::vector<double> thumb(kPixelEmbedDim);
  const double sx = static_cast<double>(img.width) / kPixelEmbedSide;
  const double sy = static_cast<double>(img.height) / kPixelEmbedSide;
  for (int y = 0; y < kPixelEmbedSide; ++y) {
    for (int x = 0; x < kPixelEmbedSide; ++x) {
      const double fx = (x + 0.5) * sx - 0.5;
      const double fy = (y + 0.5) * sy - 0.5;
      const double flx = std::floor(fx), fly = std::floor(fy);
      const double tx = fx - flx, ty = fy - fly;
      const int ix = static_cast<int>(flx), iy = static_cast<int>(fly);
      const double v = (1 - tx) * (1 - ty) * g(ix, iy) + tx * (1 - ty) * g(ix + 1, iy) +
                       (1 - tx) * ty * g(ix, iy + 1) + tx * ty * g(ix + 1, iy + 1);
      thumb[static_cast<std::size_t>(y) * kPixelEmbedSide + x] = v / 255.0;
    }
  }
  double mean = 0.0;
  for (double v : thumb) mean += v;
  mean /= kPixelEmbedDim;
  std::vector<float> out(kPixelEmbedDim);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<float>(thumb[i] - mean);
  return out;
}

}  // namespace vpb
