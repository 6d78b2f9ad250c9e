#pragma once

// Dataset manifests: a JSON document listing every image with its label,
// split and optional multi-view metadata.
//
//   {
//     "dataset": "synthetic3",
//     "classes": ["stripes_h", "stripes_v", "disc"],
//     "splits": ["train", "test"],
//     "images": [
//       {"id": "img_000", "path": "images/img_000.png", "label": 0, "split": "train",
//        "object_id": 3, "azimuth_deg": 30.0, "view_id": 1}
//     ]
//   }
//
// Paths are relative to the manifest's root directory. object_id, azimuth_deg
// and view_id are optional, but azimuth_deg must appear on all images or none.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "vpb/error.hpp"
#include "vpb/png_io.hpp"

namespace vpb {

struct ImageRecord {
  std::string id;
  std::string path;
  std::uint32_t label = 0;
  std::string split;
  std::optional<std::uint32_t> object_id;
  std::optional<double> azimuth_deg;
  std::optional<std::uint32_t> view_id;
};

struct DatasetManifest {
  std::string dataset;
  std::vector<std::string> classes;
  std::vector<std::string> splits;
  std::vector<ImageRecord> images;
};

inline nlohmann::json to_json(const DatasetManifest& m) {
  nlohmann::json images = nlohmann::json::array();
  for (const auto& r : m.images) {
    nlohmann::json j{{"id", r.id}, {"path", r.path}, {"label", r.label}, {"split", r.split}};
    if (r.object_id) j["object_id"] = *r.object_id;
    if (r.azimuth_deg) j["azimuth_deg"] = *r.azimuth_deg;
    if (r.view_id) j["view_id"] = *r.view_id;
    images.push_back(std::move(j));
  }
  return {{"dataset", m.dataset}, {"classes", m.classes}, {"splits", m.splits}, {"images", images}};
}

inline DatasetManifest manifest_from_json(const nlohmann::json& j) {
  try {
    DatasetManifest m;
    m.dataset = j.at("dataset").get<std::string>();
    m.classes = j.at("classes").get<std::vector<std::string>>();
    m.splits = j.value("splits", std::vector<std::string>{"train", "test"});
    for (const auto& r : j.at("images")) {
      ImageRecord rec;
      rec.id = r.at("id").get<std::string>();
      rec.path = r.at("path").get<std::string>();
      rec.label = r.at("label").get<std::uint32_t>();
      rec.split = r.value("split", std::string("train"));
      if (r.contains("object_id")) rec.object_id = r.at("object_id").get<std::uint32_t>();
      if (r.contains("azimuth_deg")) rec.azimuth_deg = r.at("azimuth_deg").get<double>();
      if (r.contains("view_id")) rec.view_id = r.at("view_id").get<std::uint32_t>();
      m.images.push_back(std::move(rec));
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidManifest, std::string("malformed manifest: ") + e.what());
  }
}

inline DatasetManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open manifest " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidManifest, path.string() + ": " + e.what());
  }
  return manifest_from_json(j);
}

enum class ViolationKind { MissingFile, DecodeError, DuplicateId, LabelOutOfRange, RangeViolation, UnknownSplit, InconsistentFields };

inline constexpr std::string_view to_string(ViolationKind k) {
  switch (k) {
    case ViolationKind::MissingFile: return "MissingFile";
    case ViolationKind::DecodeError: return "DecodeError";
    case ViolationKind::DuplicateId: return "DuplicateId";
    case ViolationKind::LabelOutOfRange: return "LabelOutOfRange";
    case ViolationKind::RangeViolation: return "RangeViolation";
    case ViolationKind::UnknownSplit: return "UnknownSplit";
    case ViolationKind::InconsistentFields: return "InconsistentFields";
  }
  return "Unknown";
}

struct Violation {
  ViolationKind kind;
  std::string image_id;
  std::string detail;
};

/// Every problem found; an empty result means the manifest is usable.
/// With check_files=false only the document itself is inspected.
inline std::vector<Violation> validate_manifest(const DatasetManifest& m,
                                                const std::filesystem::path& root,
                                                bool check_files = true) {
  std::vector<Violation> out;
  std::set<std::string> seen;
  std::size_t with_azimuth = 0;
  for (const auto& r : m.images) {
    if (!seen.insert(r.id).second) out.push_back({ViolationKind::DuplicateId, r.id, "id appears more than once"});
    if (r.label >= m.classes.size()) {
      out.push_back({ViolationKind::LabelOutOfRange, r.id, "label " + std::to_string(r.label)});
    }
    if (std::find(m.splits.begin(), m.splits.end(), r.split) == m.splits.end()) {
      out.push_back({ViolationKind::UnknownSplit, r.id, "split '" + r.split + "'"});
    }
    if (r.azimuth_deg) {
      ++with_azimuth;
      if (!(*r.azimuth_deg >= 0.0 && *r.azimuth_deg < 360.0)) {
        out.push_back({ViolationKind::RangeViolation, r.id,
                       "azimuth_deg " + std::to_string(*r.azimuth_deg) + " outside [0, 360)"});
      }
    }
    if (check_files) {
      const auto file = root / r.path;
      if (!std::filesystem::exists(file)) {
        out.push_back({ViolationKind::MissingFile, r.id, file.string()});
      } else {
        try {
          (void)load_png(file);
        } catch (const Error& e) {
          out.push_back({ViolationKind::DecodeError, r.id, e.what()});
        }
      }
    }
  }
  if (with_azimuth != 0 && with_azimuth != m.images.size()) {
    out.push_back({ViolationKind::InconsistentFields, "", "azimuth_deg present on some images only"});
  }
  return out;
}

}  // namespace vpb
