#pragma once

// Command-line front end. Each stage is a subcommand working inside a run
// directory:
//
//   vpb plan     --manifest M [--config C] --out RUN   -> RUN/config.json, RUN/plan.json
//   vpb warp     --out RUN                             -> RUN/images/...
//   vpb embed    --backend pixel --out RUN             -> RUN/embeddings/...
//   vpb eval     --out RUN                             -> RUN/results/trials.csv, results.json
//   vpb report   --out RUN                             -> RUN/results/table.csv, table.json, plot.svg
//   vpb inscribe --polygon FILE                        (debug: largest inscribed rectangle)
//   vpb validate --manifest M | --emb FILE... | --run RUN
//   vpb synth    --out DIR                             (bundled synthetic dataset)
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 internal error.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "vpb/embedding.hpp"
#include "vpb/error.hpp"
#include "vpb/geometry.hpp"
#include "vpb/manifest.hpp"
#include "vpb/parallel.hpp"
#include "vpb/pipeline.hpp"
#include "vpb/protocols.hpp"
#include "vpb/report.hpp"
#include "vpb/synth.hpp"

namespace vpb::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kData = 2, kInternal = 3 };

inline int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::UsageError:
    case ErrorCode::AlreadyExists:
      return kUsage;
    case ErrorCode::Internal:
      return kInternal;
    default:
      return kData;
  }
}

namespace fs = std::filesystem;

struct RunDirectory {
  fs::path root;

  fs::path config() const { return root / "config.json"; }
  fs::path plan() const { return root / "plan.json"; }
  fs::path images() const { return root / "images"; }
  fs::path embeddings() const { return root / "embeddings"; }
  fs::path results() const { return root / "results"; }

  void require_config() const {
    if (!fs::exists(config())) {
      throw Error(ErrorCode::UsageError, root.string() + " has no config.json; run `vpb plan` first");
    }
  }
  JobPlan load_plan() const {
    require_config();
    if (!fs::exists(plan())) throw Error(ErrorCode::UsageError, root.string() + " has no plan.json; run `vpb plan` first");
    return plan_from_json(read_json_file(plan()));
  }
  /// Refuses to touch existing output unless forced; forced outputs are
  /// removed first so stale files never survive a rerun.
  static void claim(const fs::path& p, bool force) {
    if (!fs::exists(p)) return;
    if (!force) throw Error(ErrorCode::AlreadyExists, p.string() + " already exists (use --force to overwrite)");
    fs::remove_all(p);
  }
};

struct Options {
  bool json_errors = false;
  unsigned threads = 0;
  bool force = false;
  std::string out;
  std::string manifest;
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string backend = "pixel";
  std::string model_type = "Supervised";
  std::string polygon;
  int grid = 0;
  std::vector<std::string> emb_files;
  std::string run;
  std::string root;
  SynthOptions synth;
};

inline void cmd_plan(const Options& o, std::ostream& out) {
  const RunDirectory run{o.out};
  ProtocolConfig cfg;
  if (!o.config.empty()) cfg = config_from_json(read_json_file(o.config));
  if (o.seed) cfg.master_seed = *o.seed;
  cfg.validate();
  const fs::path manifest_path(o.manifest);
  const DatasetManifest manifest = load_manifest(manifest_path);
  const fs::path root = o.root.empty() ? manifest_path.parent_path() : fs::path(o.root);
  const JobPlan plan = plan_jobs(manifest, root, cfg);
  if (!o.force && (fs::exists(run.config()) || fs::exists(run.plan()))) {
    throw Error(ErrorCode::AlreadyExists, run.root.string() + " already holds a plan (use --force to overwrite)");
  }
  write_json_file(run.config(), to_json(cfg));
  write_json_file(run.plan(), to_json(plan));
  out << "planned " << plan.jobs.size() << " jobs, " << plan.embeddings.size() << " embedding files -> "
      << run.plan().string() << "\n";
}

inline void cmd_warp(const Options& o, std::ostream& out) {
  const RunDirectory run{o.out};
  const JobPlan plan = run.load_plan();
  RunDirectory::claim(run.images(), o.force);
  run_warp_stage(plan, run.root, resolve_threads(o.threads));
  out << "wrote " << plan.jobs.size() << " images under " << run.images().string() << "\n";
}

inline void cmd_embed(const Options& o, std::ostream& out) {
  if (o.backend != "pixel") {
    throw Error(ErrorCode::UsageError, "backend '" + o.backend + "' is not built in; external extractors write the "
                                       "EMB1 files listed in plan.json directly");
  }
  const RunDirectory run{o.out};
  const JobPlan plan = run.load_plan();
  const ModelType type = parse_model_type(o.model_type);
  RunDirectory::claim(run.embeddings(), o.force);
  run_embed_stage(plan, run.root, type, resolve_threads(o.threads));
  out << "wrote " << plan.embeddings.size() << " embedding files under " << run.embeddings().string() << "\n";
}

inline void cmd_eval(const Options& o, std::ostream& out) {
  const RunDirectory run{o.out};
  const JobPlan plan = run.load_plan();
  RunDirectory::claim(run.results() / "trials.csv", o.force);
  RunDirectory::claim(run.results() / "results.json", o.force);
  const EvalOutput res = run_eval_stage(plan, run.root, resolve_threads(o.threads));
  write_results(plan, res, run.results());
  out << "wrote " << res.results.size() << " trial results to " << (run.results() / "trials.csv").string() << "\n";
}

inline void cmd_report(const Options& o, std::ostream& out) {
  const RunDirectory run{o.out};
  run.require_config();
  const ProtocolConfig cfg = config_from_json(read_json_file(run.config()));
  const auto trials = trials_from_csv(read_text_file(run.results() / "trials.csv"));
  const ResultTable table = aggregate(trials);
  for (const char* name : {"table.csv", "table.json", "plot.svg"}) RunDirectory::claim(run.results() / name, o.force);
  write_text_file(run.results() / "table.csv", table_to_csv(table));
  write_json_file(run.results() / "table.json", table_to_json(table));
  write_text_file(run.results() / "plot.svg", table_to_svg(table, condition_name(cfg.protocol)));
  out << condition_name(cfg.protocol) << ",model,mean_pct,stddev_pct,trials\n";
  for (const auto& r : table.rows) {
    out << format_number(r.condition) << "," << r.model << "," << detail::fixed(100 * r.mean) << ","
        << detail::fixed(100 * r.stddev) << "," << r.trials << "\n";
  }
}

inline void cmd_inscribe(const Options& o, std::ostream& out) {
  nlohmann::json j;
  if (o.polygon == "-") {
    j = nlohmann::json::parse(std::cin);
  } else {
    j = read_json_file(o.polygon);
  }
  std::vector<Point2> pts;
  try {
    for (const auto& v : j.at("vertices")) pts.push_back({v.at(0).get<double>(), v.at(1).get<double>()});
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::FormatError, std::string("polygon JSON needs \"vertices\": [[x, y], ...]: ") + e.what());
  }
  const auto poly = ConvexPolygon::from_vertices(pts);
  const RectAA r = o.grid > 0 ? grid_inscribed_rect(poly, o.grid) : max_inscribed_rect(poly);
  out << nlohmann::json{{"x0", r.x0}, {"y0", r.y0}, {"x1", r.x1}, {"y1", r.y1}, {"area", r.area()}}.dump() << "\n";
}

/// Returns the number of problems found.
inline std::size_t cmd_validate(const Options& o, std::ostream& out) {
  std::size_t problems = 0;
  if (!o.manifest.empty()) {
    const fs::path mp(o.manifest);
    const auto m = load_manifest(mp);
    const auto v = validate_manifest(m, o.root.empty() ? mp.parent_path() : fs::path(o.root));
    for (const auto& x : v) out << to_string(x.kind) << "\t" << x.image_id << "\t" << x.detail << "\n";
    problems += v.size();
    out << o.manifest << ": " << m.images.size() << " images, " << v.size() << " problems\n";
  }
  std::vector<std::string> files = o.emb_files;
  std::optional<JobPlan> plan;
  if (!o.run.empty()) {
    plan = RunDirectory{o.run}.load_plan();
  }
  const auto check_file = [&](const fs::path& path, const EmbeddingSpec* spec) {
    try {
      const EmbeddingSet s = spec ? load_planned_embedding(*plan, *spec, o.run) : read_embedding_set(path);
      out << path.string() << ": ok (" << s.count() << " x " << s.dim() << ", " << s.meta.model_name << ")\n";
    } catch (const Error& e) {
      ++problems;
      const std::string msg = e.what();
      out << (msg.find(path.string()) == std::string::npos ? path.string() + ": " + msg : msg) << "\n";
    }
  };
  for (const auto& f : files) check_file(f, nullptr);
  if (plan) {
    for (const auto& spec : plan->embeddings) check_file(fs::path(o.run) / spec.path, &spec);
  }
  return problems;
}

inline void cmd_synth(const Options& o, std::ostream& out) {
  const fs::path dir(o.out);
  RunDirectory::claim(dir / "manifest.json", o.force);
  RunDirectory::claim(dir / "images", o.force);
  const auto m = write_synthetic_dataset(dir, o.synth);
  out << "wrote " << m.images.size() << " images and manifest.json under " << dir.string() << "\n";
}

inline void report_error(const Options& o, std::ostream& err, std::string_view code, const std::string& msg,
                         int exit_code) {
  if (o.json_errors) {
    err << nlohmann::json{{"error", std::string(code)}, {"message", msg}, {"exit_code", exit_code}}.dump() << "\n";
  } else {
    err << "vpb: " << msg << "\n";
  }
}

inline int dispatch(const std::vector<std::string>& args, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  Options o;
  CLI::App app{"Viewpoint-robustness benchmark harness", "vpb"};
  app.require_subcommand(1);
  app.add_flag("--json-errors", o.json_errors, "Machine-readable JSON diagnostics on stderr");

  const auto add_common = [&](CLI::App* sub, bool out_required = true) {
    auto* opt = sub->add_option("--out", o.out, "Run directory");
    if (out_required) opt->required();
    sub->add_flag("--force", o.force, "Overwrite existing outputs");
    sub->add_option("--threads", o.threads, "Worker threads (default: VPB_THREADS or all cores)");
    sub->fallthrough();
  };

  auto* plan = app.add_subcommand("plan", "Manifest + config -> plan.json");
  add_common(plan);
  plan->add_option("--manifest", o.manifest, "Dataset manifest JSON")->required();
  plan->add_option("--config", o.config, "Protocol config JSON (defaults when omitted)");
  plan->add_option("--seed", o.seed, "Master seed (overrides the config)");
  plan->add_option("--root", o.root, "Image root (default: the manifest's directory)");

  auto* warp = app.add_subcommand("warp", "Execute warp jobs into a PNG tree");
  add_common(warp);

  auto* embed = app.add_subcommand("embed", "Embed warped images into EMB1 files");
  add_common(embed);
  embed->add_option("--backend", o.backend, "Embedding backend (built in: pixel)");
  embed->add_option("--model-type", o.model_type, "Model type tag: SSL_ID, SSL_PT or Supervised");

  auto* eval = app.add_subcommand("eval", "Run the configured protocol on EMB1 files");
  add_common(eval);

  auto* report = app.add_subcommand("report", "Aggregate trial results into tables and a chart");
  add_common(report);

  auto* inscribe = app.add_subcommand("inscribe", "Largest inscribed axis-aligned rectangle of a convex polygon");
  inscribe->add_option("--polygon", o.polygon, "Polygon JSON file or - for stdin")->required();
  inscribe->add_option("--grid", o.grid, "Use the brute-force grid search at this resolution");
  inscribe->fallthrough();

  auto* validate = app.add_subcommand("validate", "Check a manifest, EMB1 files or a run directory");
  validate->add_option("--manifest", o.manifest, "Dataset manifest JSON");
  validate->add_option("--root", o.root, "Image root (default: the manifest's directory)");
  validate->add_option("--emb", o.emb_files, "EMB1 files");
  validate->add_option("--run", o.run, "Run directory: checks every planned embedding file");
  validate->fallthrough();

  auto* synth = app.add_subcommand("synth", "Write the synthetic 3-class dataset");
  add_common(synth);
  synth->add_option("--seed", o.synth.seed, "Generator seed");
  synth->add_option("--per-class", o.synth.per_class, "Images per class");
  synth->add_option("--train-per-class", o.synth.train_per_class, "Train images per class");

  std::vector<const char*> argv{"vpb"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    report_error(o, err, "UsageError", e.what(), kUsage);
    return kUsage;
  }

  try {
    if (plan->parsed()) cmd_plan(o, out);
    if (warp->parsed()) cmd_warp(o, out);
    if (embed->parsed()) cmd_embed(o, out);
    if (eval->parsed()) cmd_eval(o, out);
    if (report->parsed()) cmd_report(o, out);
    if (inscribe->parsed()) cmd_inscribe(o, out);
    if (synth->parsed()) cmd_synth(o, out);
    if (validate->parsed()) {
      if (o.manifest.empty() && o.emb_files.empty() && o.run.empty()) {
        throw Error(ErrorCode::UsageError, "validate needs --manifest, --emb or --run");
      }
      const std::size_t problems = cmd_validate(o, out);
      if (problems > 0) {
        report_error(o, err, "FormatError", std::to_string(problems) + " problem(s) found", kData);
        return kData;
      }
    }
    return kOk;
  } catch (const Error& e) {
    const int code = exit_code_for(e.code());
    report_error(o, err, to_string(e.code()), e.what(), code);
    return code;
  } catch (const fs::filesystem_error& e) {
    report_error(o, err, "IoError", e.what(), kData);
    return kData;
  } catch (const std::exception& e) {
    report_error(o, err, "Internal", e.what(), kInternal);
    return kInternal;
  }
}

inline int main(int argc, char** argv) {
  return dispatch(std::vector<std::string>(argv + 1, argv + argc));
}

}  // namespace vpb::cli
