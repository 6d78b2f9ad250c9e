#pragma once

// On-disk stages that execute a JobPlan inside a run directory:
//   warp   plan jobs -> PNG tree under images/
//   embed  PNG tree  -> EMB1 files under embeddings/ (built-in pixel embedder)
//   eval   EMB1 files -> results/trials.csv + results/results.json
// Any other embedder can replace `embed` by writing the same EMB1 files.

#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "vpb/embedding.hpp"
#include "vpb/image.hpp"
#include "vpb/parallel.hpp"
#include "vpb/png_io.hpp"
#include "vpb/protocols.hpp"

namespace vpb {

inline void write_text_file(const std::filesystem::path& path, std::string_view text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw Error(ErrorCode::IoError, "write failed for " + path.string());
  }
  std::filesystem::rename(tmp, path);
}

inline std::string read_text_file(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  return std::string(bytes.begin(), bytes.end());
}

inline nlohmann::json read_json_file(const std::filesystem::path& path) {
  const auto text = read_text_file(path);
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::FormatError, path.string() + ": " + e.what());
  }
}

inline void write_json_file(const std::filesystem::path& path, const nlohmann::json& j) {
  write_text_file(path, j.dump(2) + "\n");
}

/// Produces the image for one job: resize + centre crop to the configured
/// side, then the warp. Bounded mode crops the fill-free inscribed rectangle
/// of the warped footprint and resizes it back to the full side.
inline Image render_job(const WarpJob& job, const JobPlan& plan) {
  const Image src = load_png(std::filesystem::path(plan.manifest_root) / job.source);
  const int side = plan.config.image_side;
  const Image base = rcc(src, side);
  if (job.homography == Homography::identity(job.homography.alpha())) return base;
  if (plan.config.warp_mode == WarpMode::Bounded) return bounded_view(base, job.homography, side);
  return warp_image(base, job.homography);
}

inline void run_warp_stage(const JobPlan& plan, const std::filesystem::path& run_dir, unsigned threads) {
  parallel_for(plan.jobs.size(), threads, [&](std::size_t i) {
    save_png(render_job(plan.jobs[i], plan), run_dir / plan.jobs[i].output);
  });
}

inline EmbeddingSet assemble_embedding_set(const JobPlan& plan, const EmbeddingSpec& spec,
                                           const std::vector<std::vector<float>>& rows, const ModelMeta& meta) {
  EmbeddingSet set;
  set.meta = meta;
  bool has_object = !spec.rows.empty(), has_azimuth = !spec.rows.empty(), has_view = !spec.rows.empty();
  for (auto r : spec.rows) {
    const auto& job = plan.jobs[r];
    has_object = has_object && job.object_id.has_value();
    has_azimuth = has_azimuth && job.azimuth_deg.has_value();
    has_view = has_view && job.view_id.has_value();
  }
  if (has_object) set.object_id.emplace();
  if (has_azimuth) set.azimuth_deg.emplace();
  if (has_view) set.view_id.emplace();
  for (auto r : spec.rows) {
    const auto& job = plan.jobs[r];
    if (rows[r].size() != meta.dim) throw Error(ErrorCode::ShapeMismatch, "embedding dim mismatch for " + job.output);
    set.matrix.insert(set.matrix.end(), rows[r].begin(), rows[r].end());
    set.labels.push_back(job.label);
    if (has_object) set.object_id->push_back(*job.object_id);
    if (has_azimuth) set.azimuth_deg->push_back(static_cast<float>(*job.azimuth_deg));
    if (has_view) set.view_id->push_back(*job.view_id);
  }
  return set;
}

/// Embeds every warped image with the pixel embedder and writes one EMB1 file
/// per embedding spec of the plan.
inline void run_embed_stage(const JobPlan& plan, const std::filesystem::path& run_dir, ModelType model_type,
                            unsigned threads) {
  std::vector<std::vector<float>> rows(plan.jobs.size());
  parallel_for(plan.jobs.size(), threads, [&](std::size_t i) {
    rows[i] = pixel_embedder(load_png(run_dir / plan.jobs[i].output));
  });
  const ModelMeta meta{std::string(kPixelEmbedderName), model_type, plan.dataset, plan.num_classes, kPixelEmbedDim};
  for (const auto& spec : plan.embeddings) {
    write_embedding_set(assemble_embedding_set(plan, spec, rows, meta), run_dir / spec.path);
  }
}

inline EmbeddingSet load_planned_embedding(const JobPlan& plan, const EmbeddingSpec& spec,
                                           const std::filesystem::path& run_dir) {
  const auto path = run_dir / spec.path;
  if (!std::filesystem::exists(path)) {
    throw Error(ErrorCode::MissingEmbedding, spec.key + " (" + path.string() + ")");
  }
  EmbeddingSet set = read_embedding_set(path);
  if (set.count() != spec.rows.size()) {
    throw Error(ErrorCode::ShapeMismatch, spec.path + " has " + std::to_string(set.count()) + " rows, plan expects " +
                                              std::to_string(spec.rows.size()));
  }
  for (std::size_t i = 0; i < spec.rows.size(); ++i) {
    if (set.labels[i] != plan.jobs[spec.rows[i]].label) {
      throw Error(ErrorCode::ShapeMismatch, spec.path + ": label of row " + std::to_string(i) + " disagrees with plan");
    }
  }
  return set;
}

struct EvalOutput {
  ModelMeta meta;
  std::vector<TrialResult> results;
};

inline EvalOutput run_eval_stage(const JobPlan& plan, const std::filesystem::path& run_dir, unsigned threads) {
  const auto& cfg = plan.config;
  if (cfg.protocol == Protocol::HomographyLinearEval) {
    const auto* tr = plan.find_embedding("train");
    if (!tr) throw Error(ErrorCode::InvalidManifest, "plan has no train embedding");
    const EmbeddingSet train = load_planned_embedding(plan, *tr, run_dir);
    std::map<AlphaTrial, EmbeddingSet> tests;
    for (const auto& spec : plan.embeddings) {
      if (!spec.alpha || !spec.trial) continue;
      tests.emplace(AlphaTrial{*spec.alpha, *spec.trial}, load_planned_embedding(plan, spec, run_dir));
    }
    return {train.meta, run_linear_eval(train, tests, cfg, threads)};
  }
  const auto* all = plan.find_embedding("all");
  if (!all) throw Error(ErrorCode::InvalidManifest, "plan has no 'all' embedding");
  const EmbeddingSet set = load_planned_embedding(plan, *all, run_dir);
  switch (cfg.protocol) {
    case Protocol::MvcAzimuth: return {set.meta, run_mvc(set, cfg, threads)};
    case Protocol::SupportSweep: return {set.meta, run_support_sweep(set, cfg, threads)};
    case Protocol::SplitSweep: return {set.meta, run_split_sweep(set, cfg, threads)};
    case Protocol::HomographyLinearEval: break;
  }
  throw Error(ErrorCode::Internal, "unhandled protocol");
}

inline void write_results(const JobPlan& plan, const EvalOutput& out, const std::filesystem::path& results_dir) {
  write_text_file(results_dir / "trials.csv", trials_to_csv(to_records(out.results, plan.config.protocol, out.meta)));
  write_json_file(results_dir / "results.json", results_bundle(plan.config, out.meta, out.results));
}

}  // namespace vpb
