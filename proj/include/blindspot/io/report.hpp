/*
 * SPDX-License-Identifier: Apache-2.0
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef BLINDSPOT_IO_REPORT_HPP
#define BLINDSPOT_IO_REPORT_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "blindspot/coverage.hpp"
#include "blindspot/errors.hpp"
#include "blindspot/io/cloud_io.hpp"

namespace blindspot::io {

using nlohmann::json;

struct GridReport {
  std::string name;
  std::string slab;
  double r_cap = 0.0;
  std::uint64_t clamp_count = 0;
  std::string radius_csv, probability_csv;  // relative to the report file
  std::string radius_image, probability_image;
};

struct CoverageReport {
  std::string scenario;
  std::string rig;
  std::string config_hash;
  std::string version;
  std::uint64_t seed = 0;
  std::int64_t timesteps = 0;
  double r_thresh = 0.0;
  std::string aggregation;
  std::string reference_source;  // "sampled" or "files"
  int reference_channels = 0;
  int reference_points_per_channel = 0;
  int reference_count = 0;
  /// True when the rig produced no points at any timestep.
  bool empty_sensor_rig = false;
  std::int64_t empty_sensor_timesteps = 0;
  std::vector<std::string> notes;
  std::vector<GridReport> grids;
  std::vector<RoiSummary> rois;
};

namespace detail {

inline json optional_json(const std::optional<double>& v) {
  return v ? json(*v) : json(nullptr);
}

inline std::optional<double> optional_from(const json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

}  // namespace detail

inline json to_json(const CoverageReport& r) {
  json grids = json::array();
  for (const GridReport& g : r.grids) {
    grids.push_back({{"name", g.name},
                     {"slab", g.slab},
                     {"r_cap", g.r_cap},
                     {"clamp_count", g.clamp_count},
                     {"rasters",
                      {{"mean_r_csv", g.radius_csv},
                       {"probability_csv", g.probability_csv},
                       {"mean_r_image", g.radius_image},
                       {"probability_image", g.probability_image}}}});
  }
  json rois = json::array();
  for (const RoiSummary& s : r.rois) {
    rois.push_back({{"name", s.name},
                    {"mean_blind_spot_radius", detail::optional_json(s.mean_blind_spot_radius)},
                    {"mean_detection_probability",
                     detail::optional_json(s.mean_detection_probability)},
                    {"nonempty_cells", s.nonempty_cell_count}});
  }
  return {{"metadata",
           {{"scenario", r.scenario},
            {"rig", r.rig},
            {"config_hash", r.config_hash},
            {"version", r.version},
            {"seed", r.seed},
            {"timesteps", r.timesteps},
            {"r_thresh", r.r_thresh},
            {"aggregation", r.aggregation},
            {"reference",
             {{"source", r.reference_source},
              {"channels", r.reference_channels},
              {"points_per_channel", r.reference_points_per_channel},
              {"count", r.reference_count}}},
            {"empty_sensor_rig", r.empty_sensor_rig},
            {"empty_sensor_timesteps", r.empty_sensor_timesteps},
            {"notes", r.notes}}},
          {"grids", grids},
          {"rois", rois}};
}

inline CoverageReport report_from_json(const json& j) {
  CoverageReport r;
  try {
    const json& m = j.at("metadata");
    r.scenario = m.at("scenario").get<std::string>();
    r.rig = m.at("rig").get<std::string>();
    r.config_hash = m.at("config_hash").get<std::string>();
    r.version = m.at("version").get<std::string>();
    r.seed = m.at("seed").get<std::uint64_t>();
    r.timesteps = m.at("timesteps").get<std::int64_t>();
    r.r_thresh = m.at("r_thresh").get<double>();
    r.aggregation = m.at("aggregation").get<std::string>();
    const json& ref = m.at("reference");
    r.reference_source = ref.at("source").get<std::string>();
    r.reference_channels = ref.at("channels").get<int>();
    r.reference_points_per_channel = ref.at("points_per_channel").get<int>();
    r.reference_count = ref.at("count").get<int>();
    r.empty_sensor_rig = m.at("empty_sensor_rig").get<bool>();
    r.empty_sensor_timesteps = m.at("empty_sensor_timesteps").get<std::int64_t>();
    r.notes = m.at("notes").get<std::vector<std::string>>();
    for (const json& g : j.at("grids")) {
      const json& ras = g.at("rasters");
      r.grids.push_back({g.at("name").get<std::string>(), g.at("slab").get<std::string>(),
                         g.at("r_cap").get<double>(), g.at("clamp_count").get<std::uint64_t>(),
                         ras.at("mean_r_csv").get<std::string>(),
                         ras.at("probability_csv").get<std::string>(),
                         ras.at("mean_r_image").get<std::string>(),
                         ras.at("probability_image").get<std::string>()});
    }
    for (const json& s : j.at("rois")) {
      RoiSummary roi;
      roi.name = s.at("name").get<std::string>();
      roi.mean_blind_spot_radius = detail::optional_from(s.at("mean_blind_spot_radius"));
      roi.mean_detection_probability = detail::optional_from(s.at("mean_detection_probability"));
      roi.nonempty_cell_count = s.at("nonempty_cells").get<std::size_t>();
      r.rois.push_back(roi);
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed report: ") + e.what(), 0);
  }
  return r;
}

inline void write_report(const std::filesystem::path& path, const CoverageReport& r) {
  detail::write_all(path, to_json(r).dump(2) + "\n");
}

inline CoverageReport read_report(const std::filesystem::path& path) {
  const std::string data = detail::read_all(path);
  json j;
  try {
    j = json::parse(data);
  } catch (const json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what(), e.byte);
  }
  return report_from_json(j);
}

// ---------------------------------------------------------------------------
// Side-by-side comparison
// ---------------------------------------------------------------------------

enum class Winner { A, B, Tie, None };

struct ComparisonRow {
  std::string roi;
  std::optional<double> radius_a, radius_b;
  std::optional<double> probability_a, probability_b;
  Winner radius_winner = Winner::None;       // smaller radius wins
  Winner probability_winner = Winner::None;  // larger probability wins

  std::optional<double> radius_delta() const {
    if (!radius_a || !radius_b) return std::nullopt;
    return *radius_b - *radius_a;
  }
  std::optional<double> probability_delta() const {
    if (!probability_a || !probability_b) return std::nullopt;
    return *probability_b - *probability_a;
  }
};

struct Comparison {
  std::string label_a, label_b;
  std::vector<ComparisonRow> rows;
};

/// Pairs ROIs by name. Both reports must list the same ROI set.
inline Comparison compare_reports(const CoverageReport& a, const CoverageReport& b) {
  std::set<std::string> names_a, names_b;
  for (const auto& s : a.rois) names_a.insert(s.name);
  for (const auto& s : b.rois) names_b.insert(s.name);
  if (names_a != names_b) {
    throw ContractError("compare_reports: the reports cover different ROI sets");
  }
  auto pick = [](const std::optional<double>& x, const std::optional<double>& y, bool lower_wins) {
    if (!x || !y) return Winner::None;
    if (*x == *y) return Winner::Tie;
    return (*x < *y) == lower_wins ? Winner::A : Winner::B;
  };
  Comparison c;
  c.label_a = a.rig;
  c.label_b = b.rig;
  for (const RoiSummary& sa : a.rois) {
    const RoiSummary& sb =
        *std::find_if(b.rois.begin(), b.rois.end(), [&](const RoiSummary& s) { return s.name == sa.name; });
    ComparisonRow row;
    row.roi = sa.name;
    row.radius_a = sa.mean_blind_spot_radius;
    row.radius_b = sb.mean_blind_spot_radius;
    row.probability_a = sa.mean_detection_probability;
    row.probability_b = sb.mean_detection_probability;
    row.radius_winner = pick(row.radius_a, row.radius_b, true);
    row.probability_winner = pick(row.probability_a, row.probability_b, false);
    c.rows.push_back(row);
  }
  return c;
}

/// Fixed-width text table; the better value of each pair is starred.
inline std::string format_comparison(const Comparison& c) {
  auto cell = [](const std::optional<double>& v, bool star, const char* fmt) {
    char buf[32];
    if (!v) return std::string("n/a");
    std::snprintf(buf, sizeof buf, fmt, *v);
    return std::string(buf) + (star ? "*" : "");
  };
  std::size_t roi_w = 3;
  for (const auto& r : c.rows) roi_w = std::max(roi_w, r.roi.size());
  const std::string la = c.label_a.empty() ? "A" : c.label_a;
  const std::string lb = c.label_b.empty() ? "B" : c.label_b;

  std::ostringstream out;
  char line[512];
  std::snprintf(line, sizeof line, "%-*s | %14s %14s %10s | %14s %14s %10s\n",
                static_cast<int>(roi_w), "ROI", ("r " + la).substr(0, 14).c_str(),
                ("r " + lb).substr(0, 14).c_str(), "delta", ("p " + la).substr(0, 14).c_str(),
                ("p " + lb).substr(0, 14).c_str(), "delta");
  out << line << std::string(roi_w + 80, '-') << '\n';
  for (const ComparisonRow& r : c.rows) {
    std::snprintf(line, sizeof line, "%-*s | %14s %14s %10s | %14s %14s %10s\n",
                  static_cast<int>(roi_w), r.roi.c_str(),
                  cell(r.radius_a, r.radius_winner == Winner::A, "%.4f").c_str(),
                  cell(r.radius_b, r.radius_winner == Winner::B, "%.4f").c_str(),
                  cell(r.radius_delta(), false, "%+.4f").c_str(),
                  cell(r.probability_a, r.probability_winner == Winner::A, "%.4f").c_str(),
                  cell(r.probability_b, r.probability_winner == Winner::B, "%.4f").c_str(),
                  cell(r.probability_delta(), false, "%+.4f").c_str());
    out << line;
  }
  out << "r: mean blind-spot radius [m], lower is better. p: mean detection probability, "
         "higher is better. * marks the better value.\n";
  return out.str();
}

}  // namespace blindspot::io

#endif  // BLINDSPOT_IO_REPORT_HPP
