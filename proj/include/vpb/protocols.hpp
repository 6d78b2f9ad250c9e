#pragma once

// Seeded, trial-based evaluation procedures and the job plans that feed them.
//
// Every random choice comes from Rng(derive_seed(master_seed, label)) with a
// label naming the stream, e.g. "trial=3/alpha=0.4/image=img_007". Work items
// are independent, so they run in parallel and results are assembled in
// (condition, trial) order.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "vpb/embedding.hpp"
#include "vpb/error.hpp"
#include "vpb/format.hpp"
#include "vpb/geometry.hpp"
#include "vpb/image.hpp"
#include "vpb/knn.hpp"
#include "vpb/manifest.hpp"
#include "vpb/parallel.hpp"
#include "vpb/probe.hpp"
#include "vpb/rng.hpp"

namespace vpb {

inline std::uint64_t derive_seed(std::uint64_t master, std::string_view label) {
  return splitmix64(master ^ fnv1a64(label));
}

/// Derives seeds and fails loudly if two labels of one run collide.
class SeedRegistry {
 public:
  explicit SeedRegistry(std::uint64_t master) : master_(master) {}

  std::uint64_t seed(const std::string& label) {
    const std::uint64_t s = derive_seed(master_, label);
    const auto [it, inserted] = owners_.emplace(s, label);
    if (!inserted && it->second != label) {
      throw Error(ErrorCode::Internal, "seed collision between '" + it->second + "' and '" + label + "'");
    }
    return s;
  }

 private:
  std::uint64_t master_;
  std::map<std::uint64_t, std::string> owners_;
};

enum class Protocol { HomographyLinearEval, MvcAzimuth, SupportSweep, SplitSweep };

inline constexpr std::string_view to_string(Protocol p) {
  switch (p) {
    case Protocol::HomographyLinearEval: return "HomographyLinearEval";
    case Protocol::MvcAzimuth: return "MvcAzimuth";
    case Protocol::SupportSweep: return "SupportSweep";
    case Protocol::SplitSweep: return "SplitSweep";
  }
  return "HomographyLinearEval";
}

inline Protocol parse_protocol(std::string_view s) {
  for (Protocol p : {Protocol::HomographyLinearEval, Protocol::MvcAzimuth, Protocol::SupportSweep, Protocol::SplitSweep}) {
    if (s == to_string(p)) return p;
  }
  throw Error(ErrorCode::InvalidConfig, "unknown protocol '" + std::string(s) + "'");
}

/// Name of the condition column for a protocol's results.
inline constexpr std::string_view condition_name(Protocol p) {
  switch (p) {
    case Protocol::HomographyLinearEval: return "alpha";
    case Protocol::MvcAzimuth: return "angle_diff_deg";
    case Protocol::SupportSweep: return "support_count";
    case Protocol::SplitSweep: return "test_fraction";
  }
  return "alpha";
}

inline constexpr double kAzimuthToleranceDeg = 5.0;
inline constexpr double kMaxSkippedObjectFraction = 0.10;

struct ProtocolConfig {
  Protocol protocol = Protocol::HomographyLinearEval;
  std::vector<double> alphas{0.0, 0.2, 0.4, 0.6, 0.8};
  WarpMode warp_mode = WarpMode::Default;
  std::uint32_t trials = 10;
  std::uint64_t master_seed = 0;
  int image_side = 224;
  Metric metric = Metric::Cosine;
  bool normalize = true;
  double lambda = kDefaultLambda;
  LbfgsOptions lbfgs;
  std::vector<std::uint32_t> support_counts{1, 2, 3, 4, 5};
  std::vector<double> test_fractions{0.5, 0.6, 0.7, 0.8, 0.9, 0.95};

  void validate() const {
    const auto fail = [](const std::string& m) { throw Error(ErrorCode::InvalidConfig, m); };
    if (trials < 1) fail("trials must be >= 1");
    if (image_side < 8) fail("image_side must be >= 8");
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) fail("lambda must be a finite value >= 0");
    lbfgs.check();
    if (protocol == Protocol::HomographyLinearEval) {
      if (alphas.empty()) fail("alphas must not be empty");
      for (double a : alphas) {
        if (!(a >= 0.0 && a <= 1.0)) fail("alpha " + format_number(a) + " outside [0, 1]");
      }
      if (std::set<double>(alphas.begin(), alphas.end()).size() != alphas.size()) fail("duplicate alpha");
    }
    if (protocol == Protocol::SupportSweep) {
      if (support_counts.empty()) fail("support_counts must not be empty");
      for (auto s : support_counts) {
        if (s < 1) fail("support counts must be >= 1");
      }
    }
    if (protocol == Protocol::SplitSweep) {
      if (test_fractions.empty()) fail("test_fractions must not be empty");
      for (double p : test_fractions) {
        if (!(p > 0.0 && p <= 0.95)) fail("test fraction " + format_number(p) + " outside (0, 0.95]");
      }
    }
  }
};

inline nlohmann::json to_json(const ProtocolConfig& c) {
  return {
      {"protocol", std::string(to_string(c.protocol))},
      {"alphas", c.alphas},
      {"warp_mode", std::string(to_string(c.warp_mode))},
      {"trials", c.trials},
      {"master_seed", c.master_seed},
      {"image_side", c.image_side},
      {"metric", std::string(to_string(c.metric))},
      {"normalize", c.normalize},
      {"lambda", c.lambda},
      {"lbfgs", {{"memory", c.lbfgs.memory}, {"max_iters", c.lbfgs.max_iters}, {"grad_tol", c.lbfgs.grad_tol}}},
      {"support_counts", c.support_counts},
      {"test_fractions", c.test_fractions},
  };
}

/// Missing keys take their defaults; unknown keys are rejected so typos do
/// not silently fall back to defaults.
inline ProtocolConfig config_from_json(const nlohmann::json& j) {
  static const std::set<std::string> known{"protocol", "alphas", "warp_mode", "trials", "master_seed", "image_side",
                                           "metric", "normalize", "lambda", "lbfgs", "support_counts",
                                           "test_fractions"};
  if (!j.is_object()) throw Error(ErrorCode::InvalidConfig, "config must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (!known.contains(key)) throw Error(ErrorCode::InvalidConfig, "unknown config key '" + key + "'");
  }
  ProtocolConfig c;
  try {
    if (j.contains("protocol")) c.protocol = parse_protocol(j["protocol"].get<std::string>());
    if (j.contains("alphas")) c.alphas = j["alphas"].get<std::vector<double>>();
    if (j.contains("warp_mode")) c.warp_mode = parse_warp_mode(j["warp_mode"].get<std::string>());
    if (j.contains("trials")) c.trials = j["trials"].get<std::uint32_t>();
    if (j.contains("master_seed")) c.master_seed = j["master_seed"].get<std::uint64_t>();
    if (j.contains("image_side")) c.image_side = j["image_side"].get<int>();
    if (j.contains("metric")) c.metric = parse_metric(j["metric"].get<std::string>());
    if (j.contains("normalize")) c.normalize = j["normalize"].get<bool>();
    if (j.contains("lambda")) c.lambda = j["lambda"].get<double>();
    if (j.contains("lbfgs")) {
      const auto& l = j["lbfgs"];
      c.lbfgs.memory = l.value("memory", c.lbfgs.memory);
      c.lbfgs.max_iters = l.value("max_iters", c.lbfgs.max_iters);
      c.lbfgs.grad_tol = l.value("grad_tol", c.lbfgs.grad_tol);
    }
    if (j.contains("support_counts")) c.support_counts = j["support_counts"].get<std::vector<std::uint32_t>>();
    if (j.contains("test_fractions")) c.test_fractions = j["test_fractions"].get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, e.what());
  }
  c.validate();
  return c;
}

// ---------------------------------------------------------------------------
// Job plans

struct WarpJob {
  std::string image_id;
  std::string source;  // relative to the manifest root
  std::uint32_t label = 0;
  std::string group;  // "train", "test" or "all"
  double alpha = 0.0;
  std::uint32_t trial = 0;
  Homography homography = Homography::identity();
  std::string output;  // relative to the run directory
  std::optional<std::uint32_t> object_id;
  std::optional<double> azimuth_deg;
  std::optional<std::uint32_t> view_id;
};

/// One embedding file the plan expects, with its rows given as job indices.
struct EmbeddingSpec {
  std::string key;  // "train", "all", or "alpha=A/trial=T"
  std::string path;
  std::optional<double> alpha;
  std::optional<std::uint32_t> trial;
  std::vector<std::size_t> rows;
};

struct JobPlan {
  ProtocolConfig config;
  std::string dataset;
  std::uint32_t num_classes = 0;
  std::string manifest_root;
  std::vector<WarpJob> jobs;
  std::vector<EmbeddingSpec> embeddings;

  const EmbeddingSpec* find_embedding(const std::string& key) const {
    for (const auto& e : embeddings) {
      if (e.key == key) return &e;
    }
    return nullptr;
  }
};

inline std::string alpha_trial_key(double alpha, std::uint32_t trial) {
  return "alpha=" + format_number(alpha) + "/trial=" + std::to_string(trial);
}

inline nlohmann::json homography_to_json(const Homography& h) {
  nlohmann::json a = nlohmann::json::array();
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) a.push_back(h(r, c));
  }
  a.push_back(h.alpha().value_or(0.0));
  return a;
}

inline Homography homography_from_json(const nlohmann::json& a) {
  if (!a.is_array() || a.size() != 10) throw Error(ErrorCode::FormatError, "homography must be 10 numbers");
  Mat3 m{};
  for (int k = 0; k < 9; ++k) m[k] = a[k].get<double>();
  return Homography::from_matrix(m, a[9].get<double>());
}

inline nlohmann::json to_json(const JobPlan& p) {
  nlohmann::json jobs = nlohmann::json::array();
  for (const auto& j : p.jobs) {
    nlohmann::json o{{"image_id", j.image_id}, {"source", j.source},   {"label", j.label},
                     {"group", j.group},       {"alpha", j.alpha},     {"trial", j.trial},
                     {"homography", homography_to_json(j.homography)}, {"output", j.output}};
    if (j.object_id) o["object_id"] = *j.object_id;
    if (j.azimuth_deg) o["azimuth_deg"] = *j.azimuth_deg;
    if (j.view_id) o["view_id"] = *j.view_id;
    jobs.push_back(std::move(o));
  }
  nlohmann::json embs = nlohmann::json::array();
  for (const auto& e : p.embeddings) {
    nlohmann::json o{{"key", e.key}, {"path", e.path}, {"rows", e.rows}};
    if (e.alpha) o["alpha"] = *e.alpha;
    if (e.trial) o["trial"] = *e.trial;
    embs.push_back(std::move(o));
  }
  return {{"config", to_json(p.config)},
          {"dataset", p.dataset},
          {"num_classes", p.num_classes},
          {"manifest_root", p.manifest_root},
          {"warp_mode", std::string(to_string(p.config.warp_mode))},
          {"jobs", jobs},
          {"embeddings", embs}};
}

inline JobPlan plan_from_json(const nlohmann::json& j) {
  try {
    JobPlan p;
    p.config = config_from_json(j.at("config"));
    p.dataset = j.at("dataset").get<std::string>();
    p.num_classes = j.at("num_classes").get<std::uint32_t>();
    p.manifest_root = j.at("manifest_root").get<std::string>();
    for (const auto& o : j.at("jobs")) {
      WarpJob w;
      w.image_id = o.at("image_id").get<std::string>();
      w.source = o.at("source").get<std::string>();
      w.label = o.at("label").get<std::uint32_t>();
      w.group = o.at("group").get<std::string>();
      w.alpha = o.at("alpha").get<double>();
      w.trial = o.at("trial").get<std::uint32_t>();
      w.homography = homography_from_json(o.at("homography"));
      w.output = o.at("output").get<std::string>();
      if (o.contains("object_id")) w.object_id = o["object_id"].get<std::uint32_t>();
      if (o.contains("azimuth_deg")) w.azimuth_deg = o["azimuth_deg"].get<double>();
      if (o.contains("view_id")) w.view_id = o["view_id"].get<std::uint32_t>();
      p.jobs.push_back(std::move(w));
    }
    for (const auto& o : j.at("embeddings")) {
      EmbeddingSpec e;
      e.key = o.at("key").get<std::string>();
      e.path = o.at("path").get<std::string>();
      e.rows = o.at("rows").get<std::vector<std::size_t>>();
      if (o.contains("alpha")) e.alpha = o["alpha"].get<double>();
      if (o.contains("trial")) e.trial = o["trial"].get<std::uint32_t>();
      for (auto r : e.rows) {
        if (r >= p.jobs.size()) throw Error(ErrorCode::FormatError, "embedding row index out of range");
      }
      p.embeddings.push_back(std::move(e));
    }
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::FormatError, std::string("malformed plan: ") + e.what());
  }
}

namespace detail {

inline WarpJob job_for(const ImageRecord& r, std::string group, double alpha, std::uint32_t trial, Homography h,
                       std::string output) {
  return WarpJob{r.id, r.path, r.label, std::move(group), alpha, trial, h, std::move(output), r.object_id,
                 r.azimuth_deg, r.view_id};
}

}  // namespace detail

/// Homography protocol: clean train images, and one warped copy of every test
/// image per (alpha, trial). Nearest-neighbour protocols: every image once,
/// unwarped, into a single "all" embedding file.
inline JobPlan plan_jobs(const DatasetManifest& manifest, const std::filesystem::path& manifest_root,
                         const ProtocolConfig& config) {
  config.validate();
  const auto violations = validate_manifest(manifest, manifest_root, false);
  if (!violations.empty()) {
    throw Error(ErrorCode::InvalidManifest,
                std::string(to_string(violations[0].kind)) + " at '" + violations[0].image_id + "': " + violations[0].detail);
  }
  JobPlan plan;
  plan.config = config;
  plan.dataset = manifest.dataset;
  plan.num_classes = static_cast<std::uint32_t>(manifest.classes.size());
  plan.manifest_root = std::filesystem::absolute(manifest_root).lexically_normal().string();

  if (config.protocol != Protocol::HomographyLinearEval) {
    EmbeddingSpec all{"all", "embeddings/all.emb1", std::nullopt, std::nullopt, {}};
    for (const auto& r : manifest.images) {
      all.rows.push_back(plan.jobs.size());
      plan.jobs.push_back(detail::job_for(r, "all", 0.0, 0, Homography::identity(0.0), "images/all/" + r.id + ".png"));
    }
    plan.embeddings.push_back(std::move(all));
    return plan;
  }

  std::vector<const ImageRecord*> train, test;
  for (const auto& r : manifest.images) {
    if (r.split == "train") train.push_back(&r);
    if (r.split == "test") test.push_back(&r);
  }
  if (train.empty() || test.empty()) {
    throw Error(ErrorCode::InvalidManifest, "homography protocol needs both 'train' and 'test' images");
  }

  EmbeddingSpec tr{"train", "embeddings/train.emb1", std::nullopt, std::nullopt, {}};
  for (const auto* r : train) {
    tr.rows.push_back(plan.jobs.size());
    plan.jobs.push_back(detail::job_for(*r, "train", 0.0, 0, Homography::identity(0.0), "images/train/" + r->id + ".png"));
  }
  plan.embeddings.push_back(std::move(tr));

  SeedRegistry seeds(config.master_seed);
  const int side = config.image_side;
  for (double alpha : config.alphas) {
    for (std::uint32_t t = 0; t < config.trials; ++t) {
      const std::string key = alpha_trial_key(alpha, t);
      EmbeddingSpec spec{key, "embeddings/test/" + key + ".emb1", alpha, t, {}};
      for (const auto* r : test) {
        const std::string label = "trial=" + std::to_string(t) + "/alpha=" + format_number(alpha) + "/image=" + r->id;
        Rng rng(seeds.seed(label));
        spec.rows.push_back(plan.jobs.size());
        plan.jobs.push_back(detail::job_for(*r, "test", alpha, t, sample_homography(side, side, alpha, rng),
                                            "images/test/" + key + "/" + r->id + ".png"));
      }
      plan.embeddings.push_back(std::move(spec));
    }
  }
  return plan;
}

// ---------------------------------------------------------------------------
// Procedures

struct TrialResult {
  double condition = 0.0;
  std::uint32_t trial = 0;
  double accuracy = 0.0;
  std::size_t skipped = 0;  // MVC objects without a matching view pair

  friend bool operator==(const TrialResult&, const TrialResult&) = default;
};

struct AlphaTrial {
  double alpha;
  std::uint32_t trial;
  auto operator<=>(const AlphaTrial&) const = default;
};

/// Trains one probe on the clean train set and scores every warped test set.
/// Initialisation and optimisation are deterministic, so one probe serves
/// every trial.
inline std::vector<TrialResult> run_linear_eval(const EmbeddingSet& train,
                                                const std::map<AlphaTrial, EmbeddingSet>& test_sets,
                                                const ProtocolConfig& config, unsigned threads = 1) {
  std::vector<AlphaTrial> keys;
  for (double a : config.alphas) {
    for (std::uint32_t t = 0; t < config.trials; ++t) {
      const AlphaTrial k{a, t};
      if (!test_sets.contains(k)) throw Error(ErrorCode::MissingEmbedding, alpha_trial_key(a, t));
      const auto& s = test_sets.at(k);
      if (s.dim() != train.dim()) throw Error(ErrorCode::ShapeMismatch, "test dim != train dim for " + alpha_trial_key(a, t));
      if (s.meta.num_classes != train.meta.num_classes) {
        throw Error(ErrorCode::ShapeMismatch, "label space differs for " + alpha_trial_key(a, t));
      }
      keys.push_back(k);
    }
  }
  std::sort(keys.begin(), keys.end());
  const ProbeModel model = train_probe(train, config.lambda, config.lbfgs);
  std::vector<TrialResult> out(keys.size());
  parallel_for(keys.size(), threads, [&](std::size_t i) {
    out[i] = {keys[i].alpha, keys[i].trial, probe_accuracy(model, test_sets.at(keys[i])), 0};
  });
  return out;
}

namespace detail {

inline double circular_diff_deg(double a, double b) {
  const double d = std::fmod(std::abs(a - b), 360.0);
  return std::min(d, 360.0 - d);
}

/// Rows gathered into a matrix, L2-normalised on request.
inline Matrix gather(const EmbeddingSet& set, const std::vector<std::size_t>& rows, bool normalize) {
  Matrix m = Matrix::zeros(rows.size(), set.dim());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto r = set.row(rows[i]);
    std::copy(r.begin(), r.end(), m.row(i).begin());
  }
  if (normalize) l2_normalize_rows(m);
  return m;
}

/// 1-NN label-transfer accuracy between two row subsets of one set.
inline double subset_nn_accuracy(const EmbeddingSet& set, const std::vector<std::size_t>& train,
                                 const std::vector<std::size_t>& test, const std::vector<std::uint32_t>& train_labels,
                                 const std::vector<std::uint32_t>& test_labels, const ProtocolConfig& config) {
  if (test.empty()) throw Error(ErrorCode::EmptyInput, "empty test split");
  const auto nn = nearest(gather(set, test, config.normalize), gather(set, train, config.normalize), 1, config.metric);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < test.size(); ++i) hits += train_labels[nn[i][0]] == test_labels[i] ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(test.size());
}

inline std::map<std::uint32_t, std::vector<std::size_t>> rows_by_class(const EmbeddingSet& set) {
  std::map<std::uint32_t, std::vector<std::size_t>> by;
  for (std::size_t i = 0; i < set.count(); ++i) by[set.labels[i]].push_back(i);
  return by;
}

}  // namespace detail

using ClassRows = std::map<std::uint32_t, std::vector<std::size_t>>;

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

/// s random items of every class for training, the rest for testing. Classes
/// are visited in ascending label order, each shuffled with the same stream.
inline Split support_split(const ClassRows& by_class, std::size_t s, Rng& rng) {
  Split out;
  for (const auto& [c, rows] : by_class) {
    std::vector<std::size_t> shuffled(rows);
    shuffle(shuffled, rng);
    const std::size_t k = std::min(s, shuffled.size());
    out.train.insert(out.train.end(), shuffled.begin(), shuffled.begin() + k);
    out.test.insert(out.test.end(), shuffled.begin() + k, shuffled.end());
  }
  return out;
}

/// Per class n_test = min(n_c - 1, round(p * n_c)), so every class keeps at
/// least one training item.
inline Split stratified_split(const ClassRows& by_class, double p, Rng& rng) {
  Split out;
  for (const auto& [c, rows] : by_class) {
    const auto n = static_cast<long long>(rows.size());
    const auto n_test = static_cast<std::size_t>(
        std::max(0LL, std::min(n - 1, round_half_away(p * static_cast<double>(n)))));
    std::vector<std::size_t> shuffled(rows);
    shuffle(shuffled, rng);
    out.test.insert(out.test.end(), shuffled.begin(), shuffled.begin() + n_test);
    out.train.insert(out.train.end(), shuffled.begin() + n_test, shuffled.end());
  }
  return out;
}

namespace detail {

inline double split_nn_accuracy(const EmbeddingSet& set, const Split& split, const ProtocolConfig& config) {
  std::vector<std::uint32_t> lt, ls;
  for (auto r : split.train) lt.push_back(set.labels[r]);
  for (auto r : split.test) ls.push_back(set.labels[r]);
  return subset_nn_accuracy(set, split.train, split.test, lt, ls, config);
}

}  // namespace detail

inline constexpr int kMvcSteps = 11;  // angle differences 30, 60, ..., 330 degrees

/// Multi-view azimuth protocol. Each object is its own class: per trial one
/// train view per object at a random azimuth a, and the test view nearest to
/// (a + delta) mod 360 within the azimuth tolerance.
inline std::vector<TrialResult> run_mvc(const EmbeddingSet& set, const ProtocolConfig& config, unsigned threads = 1) {
  if (!set.object_id || !set.azimuth_deg) {
    throw Error(ErrorCode::InvalidArgument, "multi-view protocol needs object_id and azimuth_deg");
  }
  std::map<std::uint32_t, std::vector<std::size_t>> objects;
  for (std::size_t i = 0; i < set.count(); ++i) objects[(*set.object_id)[i]].push_back(i);
  const std::size_t n_objects = objects.size();
  if (n_objects < 2) throw Error(ErrorCode::InsufficientViews, "need at least 2 objects");
  const auto& az = *set.azimuth_deg;

  struct Item {
    int delta;
    std::uint32_t trial;
  };
  std::vector<Item> items;
  for (int n = 1; n <= kMvcSteps; ++n) {
    for (std::uint32_t t = 0; t < config.trials; ++t) items.push_back({30 * n, t});
  }
  SeedRegistry seeds(config.master_seed);
  std::vector<std::uint64_t> item_seeds;
  for (const auto& it : items) {
    item_seeds.push_back(seeds.seed("mvc/delta=" + std::to_string(it.delta) + "/trial=" + std::to_string(it.trial)));
  }

  std::vector<TrialResult> out(items.size());
  parallel_for(items.size(), threads, [&](std::size_t k) {
    const double delta = items[k].delta;
    Rng rng(item_seeds[k]);
    std::vector<std::size_t> train, test;
    std::vector<std::uint32_t> labels;
    std::size_t skipped = 0;
    std::uint32_t object_index = 0;
    for (const auto& [oid, views] : objects) {
      // candidate (train, test) pairs: best partner for each view that has one
      std::vector<std::pair<std::size_t, std::size_t>> pairs;
      for (std::size_t v : views) {
        const double target = std::fmod(az[v] + delta, 360.0);
        std::size_t best = views.size();
        double best_diff = kAzimuthToleranceDeg;
        for (std::size_t w_i = 0; w_i < views.size(); ++w_i) {
          const std::size_t w = views[w_i];
          if (w == v) continue;
          const double d = detail::circular_diff_deg(az[w], target);
          if (d <= best_diff && (best == views.size() || d < best_diff)) {
            best = w_i;
            best_diff = d;
          }
        }
        if (best != views.size()) pairs.emplace_back(v, views[best]);
      }
      if (pairs.empty()) {
        ++skipped;
      } else {
        const auto& pick = pairs[rng.below(pairs.size())];
        train.push_back(pick.first);
        test.push_back(pick.second);
        labels.push_back(object_index);
      }
      ++object_index;
    }
    if (static_cast<double>(skipped) > kMaxSkippedObjectFraction * static_cast<double>(n_objects)) {
      throw Error(ErrorCode::InsufficientViews, std::to_string(skipped) + " of " + std::to_string(n_objects) +
                                                    " objects lack a view pair at " + format_number(delta) + " degrees");
    }
    out[k] = {delta, items[k].trial, detail::subset_nn_accuracy(set, train, test, labels, labels, config), skipped};
  });
  return out;
}

/// Support-sample sweep: s random train items per class, the rest are test.
inline std::vector<TrialResult> run_support_sweep(const EmbeddingSet& set, const ProtocolConfig& config,
                                                  unsigned threads = 1) {
  const auto by_class = detail::rows_by_class(set);
  const auto max_s = *std::max_element(config.support_counts.begin(), config.support_counts.end());
  for (const auto& [c, rows] : by_class) {
    if (rows.size() <= max_s) {
      throw Error(ErrorCode::ClassTooSmall, "class " + std::to_string(c) + " has " + std::to_string(rows.size()) +
                                                " samples, need more than " + std::to_string(max_s));
    }
  }
  std::vector<std::uint32_t> counts(config.support_counts);
  std::sort(counts.begin(), counts.end());
  counts.erase(std::unique(counts.begin(), counts.end()), counts.end());
  struct Item {
    std::uint32_t s;
    std::uint32_t trial;
  };
  std::vector<Item> items;
  for (auto s : counts) {
    for (std::uint32_t t = 0; t < config.trials; ++t) items.push_back({s, t});
  }
  SeedRegistry seeds(config.master_seed);
  std::vector<std::uint64_t> item_seeds;
  for (const auto& it : items) {
    item_seeds.push_back(seeds.seed("support/s=" + std::to_string(it.s) + "/trial=" + std::to_string(it.trial)));
  }
  std::vector<TrialResult> out(items.size());
  parallel_for(items.size(), threads, [&](std::size_t k) {
    Rng rng(item_seeds[k]);
    const Split split = support_split(by_class, items[k].s, rng);
    out[k] = {static_cast<double>(items[k].s), items[k].trial, detail::split_nn_accuracy(set, split, config), 0};
  });
  return out;
}

/// Stratified test-split sweep (see stratified_split).
inline std::vector<TrialResult> run_split_sweep(const EmbeddingSet& set, const ProtocolConfig& config,
                                                unsigned threads = 1) {
  const auto by_class = detail::rows_by_class(set);
  for (const auto& [c, rows] : by_class) {
    if (rows.size() < 2) throw Error(ErrorCode::ClassTooSmall, "class " + std::to_string(c) + " has fewer than 2 samples");
  }
  std::vector<double> fractions(config.test_fractions);
  std::sort(fractions.begin(), fractions.end());
  fractions.erase(std::unique(fractions.begin(), fractions.end()), fractions.end());
  struct Item {
    double p;
    std::uint32_t trial;
  };
  std::vector<Item> items;
  for (double p : fractions) {
    for (std::uint32_t t = 0; t < config.trials; ++t) items.push_back({p, t});
  }
  SeedRegistry seeds(config.master_seed);
  std::vector<std::uint64_t> item_seeds;
  for (const auto& it : items) {
    item_seeds.push_back(seeds.seed("split/p=" + format_number(it.p) + "/trial=" + std::to_string(it.trial)));
  }
  std::vector<TrialResult> out(items.size());
  parallel_for(items.size(), threads, [&](std::size_t k) {
    Rng rng(item_seeds[k]);
    const Split split = stratified_split(by_class, items[k].p, rng);
    out[k] = {items[k].p, items[k].trial, detail::split_nn_accuracy(set, split, config), 0};
  });
  return out;
}

// ---------------------------------------------------------------------------
// Result files

/// One CSV row: protocol,dataset,model,model_type,condition,trial,accuracy.
struct TrialRecord {
  std::string protocol;
  std::string dataset;
  std::string model;
  ModelType model_type = ModelType::Supervised;
  double condition = 0.0;
  std::uint32_t trial = 0;
  double accuracy = 0.0;

  friend bool operator==(const TrialRecord&, const TrialRecord&) = default;
};

inline constexpr std::string_view kTrialCsvHeader = "protocol,dataset,model,model_type,condition,trial,accuracy";

inline std::vector<TrialRecord> to_records(const std::vector<TrialResult>& results, Protocol protocol,
                                           const ModelMeta& meta) {
  std::vector<TrialRecord> out;
  for (const auto& r : results) {
    out.push_back({std::string(to_string(protocol)), meta.dataset, meta.model_name, meta.model_type, r.condition,
                   r.trial, r.accuracy});
  }
  return out;
}

inline std::string trials_to_csv(const std::vector<TrialRecord>& rows) {
  std::string s(kTrialCsvHeader);
  s += '\n';
  for (const auto& r : rows) {
    s += csv_field(r.protocol) + ',' + csv_field(r.dataset) + ',' + csv_field(r.model) + ',' +
         std::string(to_string(r.model_type)) + ',' + format_number(r.condition) + ',' + std::to_string(r.trial) + ',' +
         format_number(r.accuracy) + '\n';
  }
  return s;
}

inline std::vector<TrialRecord> trials_from_csv(std::string_view text) {
  const auto rows = parse_csv(text);
  if (rows.empty()) throw Error(ErrorCode::FormatError, "empty trial CSV");
  const std::vector<std::string> header{"protocol", "dataset", "model", "model_type", "condition", "trial", "accuracy"};
  if (rows[0] != header) throw Error(ErrorCode::FormatError, "unexpected trial CSV header");
  std::vector<TrialRecord> out;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& f = rows[i];
    if (f.size() != header.size()) throw Error(ErrorCode::FormatError, "CSV row " + std::to_string(i) + " has wrong arity");
    out.push_back({f[0], f[1], f[2], parse_model_type(f[3]), parse_number(f[4]),
                   static_cast<std::uint32_t>(parse_number(f[5])), parse_number(f[6])});
  }
  return out;
}

inline nlohmann::json results_bundle(const ProtocolConfig& config, const ModelMeta& meta,
                                     const std::vector<TrialResult>& results) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : results) {
    rows.push_back({{"condition", r.condition}, {"trial", r.trial}, {"accuracy", r.accuracy}, {"skipped", r.skipped}});
  }
  return {{"config", to_json(config)},
          {"protocol", std::string(to_string(config.protocol))},
          {"condition_name", std::string(condition_name(config.protocol))},
          {"dataset", meta.dataset},
          {"model", meta.model_name},
          {"model_type", std::string(to_string(meta.model_type))},
          {"results", rows}};
}

}  // namespace vpb
