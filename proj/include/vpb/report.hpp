#pragma once

// Aggregation of trial results into tables, relative-decrease summaries,
// rankings, and CSV / JSON / SVG output.

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "vpb/embedding.hpp"
#include "vpb/error.hpp"
#include "vpb/format.hpp"
#include "vpb/protocols.hpp"

namespace vpb {

struct ResultRow {
  std::string dataset;
  std::string model;
  ModelType model_type = ModelType::Supervised;
  double condition = 0.0;
  std::size_t trials = 1;
  double mean = 0.0;
  double stddev = 0.0;

  auto key() const { return std::tie(dataset, model, model_type, condition); }
  friend bool operator==(const ResultRow&, const ResultRow&) = default;
};

struct ResultTable {
  std::vector<ResultRow> rows;  // sorted by (dataset, model, model_type, condition)

  const ResultRow* find(const std::string& dataset, const std::string& model, double condition) const {
    for (const auto& r : rows) {
      if (r.dataset == dataset && r.model == model && r.condition == condition) return &r;
    }
    return nullptr;
  }
  std::vector<double> conditions() const {
    std::set<double> s;
    for (const auto& r : rows) s.insert(r.condition);
    return {s.begin(), s.end()};
  }
};

inline void sort_rows(std::vector<ResultRow>& rows) {
  std::sort(rows.begin(), rows.end(), [](const ResultRow& a, const ResultRow& b) { return a.key() < b.key(); });
}

/// Mean and sample standard deviation per (dataset, model, model_type,
/// condition). A single trial reports stddev 0.
inline ResultTable aggregate(const std::vector<TrialRecord>& trials) {
  if (trials.empty()) throw Error(ErrorCode::EmptyInput, "no trial results to aggregate");
  std::map<std::tuple<std::string, std::string, ModelType, double>, std::vector<double>> groups;
  for (const auto& t : trials) groups[{t.dataset, t.model, t.model_type, t.condition}].push_back(t.accuracy);
  ResultTable table;
  for (const auto& [k, accs] : groups) {
    double mean = 0.0;
    for (double a : accs) mean += a;
    mean /= static_cast<double>(accs.size());
    double ss = 0.0;
    for (double a : accs) ss += (a - mean) * (a - mean);
    const double sd = accs.size() > 1 ? std::sqrt(ss / static_cast<double>(accs.size() - 1)) : 0.0;
    table.rows.push_back({std::get<0>(k), std::get<1>(k), std::get<2>(k), std::get<3>(k), accs.size(), mean, sd});
  }
  sort_rows(table.rows);
  return table;
}

/// (cond - base) / base; negative values are degradations.
inline double relative_decrease(double acc_base, double acc_cond) {
  if (!(acc_base > 0.0)) throw Error(ErrorCode::ZeroBaseline, "baseline accuracy must be > 0");
  return (acc_cond - acc_base) / acc_base;
}

using GroupDecrease = std::map<ModelType, std::map<double, double>>;  // type -> condition -> mean decrease

/// Relative decrease of every (model, dataset) cell against its baseline
/// condition, then a uniform mean over the cells of each model type.
/// Baselines are looked up in `baseline` (which may be `table` itself).
inline GroupDecrease group_relative_decrease(const ResultTable& table, const ResultTable& baseline,
                                             double baseline_condition = 0.0) {
  std::map<ModelType, std::map<double, std::pair<double, std::size_t>>> acc;
  for (const auto& r : table.rows) {
    if (r.condition == baseline_condition) continue;
    const auto* b = baseline.find(r.dataset, r.model, baseline_condition);
    if (!b) {
      throw Error(ErrorCode::MissingBaseline,
                  r.dataset + "/" + r.model + " at condition " + format_number(baseline_condition));
    }
    auto& cell = acc[r.model_type][r.condition];
    cell.first += relative_decrease(b->mean, r.mean);
    cell.second += 1;
  }
  GroupDecrease out;
  for (const auto& [type, by_cond] : acc) {
    for (const auto& [cond, sum_n] : by_cond) out[type][cond] = sum_n.first / static_cast<double>(sum_n.second);
  }
  return out;
}

inline GroupDecrease group_relative_decrease(const ResultTable& table, double baseline_condition = 0.0) {
  return group_relative_decrease(table, table, baseline_condition);
}

/// Best k rows for (dataset, condition): descending mean, ties by model name.
inline std::vector<ResultRow> top_k(const ResultTable& table, const std::string& dataset, double condition,
                                    std::size_t k) {
  std::vector<ResultRow> rows;
  for (const auto& r : table.rows) {
    if (r.dataset == dataset && r.condition == condition) rows.push_back(r);
  }
  if (rows.size() < k) {
    throw Error(ErrorCode::NotEnoughRows, std::to_string(rows.size()) + " rows for " + dataset + " at " +
                                              format_number(condition) + ", need " + std::to_string(k));
  }
  std::sort(rows.begin(), rows.end(), [](const ResultRow& a, const ResultRow& b) {
    if (a.mean != b.mean) return a.mean > b.mean;
    return a.model < b.model;
  });
  rows.resize(k);
  return rows;
}

// ---------------------------------------------------------------------------
// Output formats

inline constexpr std::string_view kTableCsvHeader = "dataset,model,model_type,condition,trials,mean,stddev";

inline std::string table_to_csv(const ResultTable& t) {
  if (t.rows.empty()) throw Error(ErrorCode::EmptyInput, "empty table");
  std::string s(kTableCsvHeader);
  s += '\n';
  for (const auto& r : t.rows) {
    s += csv_field(r.dataset) + ',' + csv_field(r.model) + ',' + std::string(to_string(r.model_type)) + ',' +
         format_number(r.condition) + ',' + std::to_string(r.trials) + ',' + format_number(r.mean) + ',' +
         format_number(r.stddev) + '\n';
  }
  return s;
}

inline ResultTable table_from_csv(std::string_view text) {
  const auto rows = parse_csv(text);
  const std::vector<std::string> header{"dataset", "model", "model_type", "condition", "trials", "mean", "stddev"};
  if (rows.empty() || rows[0] != header) throw Error(ErrorCode::FormatError, "unexpected table CSV header");
  ResultTable t;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& f = rows[i];
    if (f.size() != header.size()) throw Error(ErrorCode::FormatError, "table row " + std::to_string(i) + " has wrong arity");
    t.rows.push_back({f[0], f[1], parse_model_type(f[2]), parse_number(f[3]),
                      static_cast<std::size_t>(parse_number(f[4])), parse_number(f[5]), parse_number(f[6])});
  }
  sort_rows(t.rows);
  return t;
}

inline nlohmann::json table_to_json(const ResultTable& t) {
  if (t.rows.empty()) throw Error(ErrorCode::EmptyInput, "empty table");
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : t.rows) {
    rows.push_back({{"dataset", r.dataset},
                    {"model", r.model},
                    {"model_type", std::string(to_string(r.model_type))},
                    {"condition", r.condition},
                    {"trials", r.trials},
                    {"mean", r.mean},
                    {"stddev", r.stddev}});
  }
  return {{"rows", rows}};
}

inline ResultTable table_from_json(const nlohmann::json& j) {
  try {
    ResultTable t;
    for (const auto& r : j.at("rows")) {
      t.rows.push_back({r.at("dataset").get<std::string>(), r.at("model").get<std::string>(),
                        parse_model_type(r.at("model_type").get<std::string>()), r.at("condition").get<double>(),
                        r.at("trials").get<std::size_t>(), r.at("mean").get<double>(), r.at("stddev").get<double>()});
    }
    sort_rows(t.rows);
    return t;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::FormatError, e.what());
  }
}

namespace detail {

inline std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

/// Red tones for SSL (ID), green for SSL (PT), grey for Supervised; the
/// shade steps through the palette by model index within the type.
inline std::string type_colour(ModelType t, std::size_t index) {
  static const char* reds[] = {"#b2182b", "#d6604d", "#e7298a", "#99000d", "#ef3b2c", "#fb6a4a"};
  static const char* greens[] = {"#1b7837", "#5aae61", "#238b45", "#74c476", "#006d2c", "#41ab5d"};
  static const char* greys[] = {"#252525", "#636363", "#969696", "#525252", "#737373", "#bdbdbd"};
  const char* const* pal = t == ModelType::SSL_ID ? reds : t == ModelType::SSL_PT ? greens : greys;
  return pal[index % 6];
}

inline std::string fixed(double v, int decimals = 2) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
  return buf;
}

}  // namespace detail

/// Standalone SVG line chart: condition on x, mean accuracy (percent) on y,
/// one polyline per (dataset, model).
inline std::string table_to_svg(const ResultTable& t, std::string_view x_label = "condition") {
  if (t.rows.empty()) throw Error(ErrorCode::EmptyInput, "empty table");
  const double W = 720, H = 440, left = 60, right = 200, top = 20, bottom = 50;
  const double pw = W - left - right, ph = H - top - bottom;
  const auto conds = t.conditions();
  const double cmin = conds.front(), cmax = conds.back();
  const auto xpos = [&](double c) { return cmax == cmin ? left + pw / 2 : left + pw * (c - cmin) / (cmax - cmin); };
  const auto ypos = [&](double mean) { return top + ph * (1.0 - std::clamp(mean, 0.0, 1.0)); };

  std::string s;
  s += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" + detail::fixed(W, 0) + "\" height=\"" +
       detail::fixed(H, 0) + "\" viewBox=\"0 0 " + detail::fixed(W, 0) + " " + detail::fixed(H, 0) + "\">\n";
  s += "<rect x=\"0\" y=\"0\" width=\"" + detail::fixed(W, 0) + "\" height=\"" + detail::fixed(H, 0) +
       "\" fill=\"white\"/>\n";
  // axes and ticks
  s += "<g stroke=\"black\" stroke-width=\"1\" fill=\"none\">\n";
  s += "<line x1=\"" + detail::fixed(left) + "\" y1=\"" + detail::fixed(top + ph) + "\" x2=\"" + detail::fixed(left + pw) +
       "\" y2=\"" + detail::fixed(top + ph) + "\"/>\n";
  s += "<line x1=\"" + detail::fixed(left) + "\" y1=\"" + detail::fixed(top) + "\" x2=\"" + detail::fixed(left) +
       "\" y2=\"" + detail::fixed(top + ph) + "\"/>\n";
  s += "</g>\n<g font-family=\"sans-serif\" font-size=\"11\">\n";
  for (double c : conds) {
    s += "<text x=\"" + detail::fixed(xpos(c)) + "\" y=\"" + detail::fixed(top + ph + 16) +
         "\" text-anchor=\"middle\">" + format_number(c) + "</text>\n";
  }
  for (int pct = 0; pct <= 100; pct += 20) {
    s += "<text x=\"" + detail::fixed(left - 6) + "\" y=\"" + detail::fixed(ypos(pct / 100.0) + 4) +
         "\" text-anchor=\"end\">" + std::to_string(pct) + "</text>\n";
  }
  s += "<text x=\"" + detail::fixed(left + pw / 2) + "\" y=\"" + detail::fixed(H - 12) + "\" text-anchor=\"middle\">" +
       detail::xml_escape(x_label) + "</text>\n";
  s += "<text x=\"14\" y=\"" + detail::fixed(top + ph / 2) + "\" text-anchor=\"middle\" transform=\"rotate(-90 14 " +
       detail::fixed(top + ph / 2) + ")\">accuracy (%)</text>\n</g>\n";

  // one series per (dataset, model), in table order
  std::vector<std::pair<const ResultRow*, std::vector<const ResultRow*>>> series;
  for (const auto& r : t.rows) {
    if (series.empty() || series.back().first->dataset != r.dataset || series.back().first->model != r.model) {
      series.push_back({&r, {}});
    }
    series.back().second.push_back(&r);
  }
  std::map<ModelType, std::size_t> per_type;
  std::size_t legend = 0;
  for (const auto& [first, pts] : series) {
    const std::string colour = detail::type_colour(first->model_type, per_type[first->model_type]++);
    std::string points;
    for (const auto* p : pts) {
      if (!points.empty()) points += ' ';
      points += detail::fixed(xpos(p->condition)) + "," + detail::fixed(ypos(p->mean));
    }
    const std::string name = detail::xml_escape(first->dataset + " / " + first->model);
    s += "<polyline fill=\"none\" stroke=\"" + colour + "\" stroke-width=\"2\" data-model=\"" +
         detail::xml_escape(first->model) + "\" data-type=\"" + std::string(to_string(first->model_type)) +
         "\" points=\"" + points + "\"><title>" + name + "</title></polyline>\n";
    const double ly = top + 14.0 * static_cast<double>(legend++);
    s += "<text x=\"" + detail::fixed(left + pw + 12) + "\" y=\"" + detail::fixed(ly + 4) +
         "\" font-family=\"sans-serif\" font-size=\"10\" fill=\"" + colour + "\">" + name + "</text>\n";
  }
  s += "</svg>\n";
  return s;
}

/// Per-model accuracy CSV (dataset,model,model_type,alpha,accuracy_pct) as a
/// one-trial-per-cell table with accuracies as fractions.
inline ResultTable table_from_percent_csv(std::string_view text) {
  const auto rows = parse_csv(text);
  const std::vector<std::string> header{"dataset", "model", "model_type", "alpha", "accuracy_pct"};
  if (rows.empty() || rows[0] != header) throw Error(ErrorCode::FormatError, "unexpected percent CSV header");
  ResultTable t;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& f = rows[i];
    if (f.size() != header.size()) throw Error(ErrorCode::FormatError, "row " + std::to_string(i) + " has wrong arity");
    t.rows.push_back({f[0], f[1], parse_model_type(f[2]), parse_number(f[3]), 1, parse_number(f[4]) / 100.0, 0.0});
  }
  sort_rows(t.rows);
  return t;
}

}  // namespace vpb
