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

#ifndef BLINDSPOT_PRESETS_HPP
#define BLINDSPOT_PRESETS_HPP

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "blindspot/io/config.hpp"
#include "blindspot/mesh.hpp"
#include "blindspot/reference.hpp"

namespace blindspot::presets {

using nlohmann::json;

/// Street layout knobs. The layout itself is fixed by `layout_seed` and does
/// not depend on the run seed, which only drives the reference sampler.
struct UrbanStreet {
  std::uint64_t layout_seed = 7;
  double ego_speed = 0.5;       // m per timestep along +x
  double x_begin = -40.0;
  double x_end = 340.0;
  double lead_gap = 19.0;       // center-to-center, m
  double lead_swing = 6.0;      // gap oscillation amplitude, m
  double lead_period = 128.0;   // timesteps
  bool oncoming_traffic = true;
  bool parked_cars = true;
  bool buildings = true;
  bool street_furniture = true;
  bool pedestrians = true;
};

namespace detail {

inline json box(double lx, double ly, double lz) {
  return {{"type", "box"}, {"size", {lx, ly, lz}}, {"center", {0.0, 0.0, 0.5 * lz}}};
}

inline json pose(double x, double y, double z = 0.0, double yaw = 0.0, double pitch = 0.0) {
  return {{"x", x}, {"y", y}, {"z", z}, {"yaw", yaw}, {"pitch", pitch}, {"roll", 0.0}};
}

// Traffic cars share the ego's tapered body; a flat-roofed box would put a large
// horizontal face right at roof-sensor height.
inline json car() { return {{"type", "hatchback"}}; }

inline json actor(std::uint32_t id, const std::string& name, json mesh, json trajectory) {
  return {{"id", id}, {"name", name}, {"mesh", std::move(mesh)}, {"trajectory", std::move(trajectory)}};
}

}  // namespace detail

/// Ego hatchback driving down a straight urban street behind a lead vehicle.
inline json urban_street_actors(const UrbanStreet& s = {}) {
  using detail::actor;
  using detail::box;
  using detail::car;
  using detail::pose;
  std::mt19937_64 rng(s.layout_seed);
  auto u = [&](double lo, double hi) { return uniform(rng, lo, hi); };

  json actors = json::array();
  std::uint32_t id = 0;
  actors.push_back(actor(id++, "ground", {{"type", "ground"}, {"extent", 1200.0}}, {{"pose", pose(0, 0)}}));
  json ego = actor(id++, "ego", car(),
                   {{"pose", pose(0, 0)}, {"velocity", {s.ego_speed, 0.0, 0.0}}});
  ego["ego"] = true;
  actors.push_back(ego);

  json lead = actor(id++, "lead vehicle", car(),
                    {{"pose", pose(s.lead_gap, 0)},
                     {"oscillation", {{"amplitude", {s.lead_swing, 0.0, 0.0}},
                                      {"period", s.lead_period},
                                      {"phase", 0.0}}}});
  lead["attached_to_ego"] = true;
  actors.push_back(lead);

  if (s.buildings) {
    for (double side : {1.0, -1.0}) {
      double x = s.x_begin;
      while (x < s.x_end) {
        const double len = u(15.0, 40.0);
        const double height = u(6.0, 20.0);
        const double face = 12.0 + u(0.0, 2.0);
        actors.push_back(actor(id++, "building", box(len, 10.0, height),
                               {{"pose", pose(x + 0.5 * len, side * (face + 5.0))}}));
        x += len + u(4.0, 12.0);
      }
    }
  }
  if (s.parked_cars) {
    for (double lane : {-3.4, 6.9}) {
      double x = s.x_begin;
      while (x < s.x_end) {
        const double len = HatchbackDimensions::kLength;
        if (u(0.0, 1.0) < 0.7) {
          actors.push_back(actor(id++, "parked car", car(),
                                 {{"pose", pose(x + 0.5 * len, lane + u(-0.2, 0.2), 0.0, u(-3.0, 3.0))}}));
        }
        x += len + u(1.0, 6.0);
      }
    }
  }
  if (s.street_furniture) {
    for (double side : {1.0, -1.0}) {
      for (double x = s.x_begin + u(0.0, 10.0); x < s.x_end; x += u(12.0, 22.0)) {
        actors.push_back(actor(id++, "pole", box(0.25, 0.25, 5.0), {{"pose", pose(x, side * 9.6)}}));
      }
    }
  }
  if (s.pedestrians) {
    for (double x = s.x_begin; x < s.x_end; x += u(8.0, 25.0)) {
      const double side = u(0.0, 1.0) < 0.5 ? 1.0 : -1.0;
      actors.push_back(actor(id++, "pedestrian", box(0.5, 0.6, 1.75),
                             {{"pose", pose(x, side * u(8.5, 11.0))},
                              {"velocity", {u(-0.08, 0.08), 0.0, 0.0}}}));
    }
  }
  if (s.oncoming_traffic) {
    for (double x = 30.0; x < s.x_end + 300.0; x += u(25.0, 60.0)) {
      const bool van = u(0.0, 1.0) < 0.25;
      actors.push_back(actor(id++, van ? "oncoming van" : "oncoming car",
                             van ? box(5.5, 2.1, 2.4) : car(),
                             {{"pose", pose(x, 3.5, 0.0, 180.0)}, {"velocity", {-0.6, 0.0, 0.0}}}));
    }
  }
  return actors;
}

inline json lidar(const std::string& name, int channels, int points, double x, double y, double z,
                  double az_min = -60.0, double az_max = 60.0) {
  return {{"type", "lidar"},       {"name", name},           {"channels", channels},
          {"points_per_channel", points}, {"elevation_min", -15.0}, {"elevation_max", 15.0},
          {"azimuth_min", az_min}, {"azimuth_max", az_max},  {"max_range", 200.0},
          {"mount", detail::pose(x, y, z)}};
}

inline json camera(const std::string& name, double x, double y, double z, double yaw, double pitch) {
  return {{"type", "camera"}, {"name", name},  {"width", 480},        {"height", 300},
          {"hfov", 90.0},     {"max_range", 120.0}, {"mount", detail::pose(x, y, z, yaw, pitch)}};
}

// Sensor positions on the hatchback (bbox x [-2.25, 2.25], y [-0.95, 0.95],
// z [0.2, 1.7]; hood top z = 1.0, windscreen top edge at x = 0.3, z = 1.7).
inline constexpr double kGrilleX = 2.3, kGrilleZ = 0.55;
inline constexpr double kRoofX = 0.35, kRoofZ = 1.7;

inline json base_config(const std::string& name, std::int64_t timesteps) {
  return {{"name", name},
          {"timesteps", timesteps},
          {"seed", 1},
          {"r_thresh", 0.4},
          {"aggregation", "mean"},
          {"scene", {{"actors", urban_street_actors()}}},
          {"reference", {{"channels", 256}, {"points_per_channel", 512}}},
          {"raster", {{"radius_max", 5.0}}}};
}

inline json roof_vs_grille() {
  json j = base_config("roof-vs-grille", 256);
  j["rigs"] = json::array(
      {{{"name", "grille"}, {"sensors", {lidar("grille lidar", 128, 512, kGrilleX, 0.0, kGrilleZ)}}},
       {{"name", "roof"}, {"sensors", {lidar("roof lidar", 128, 512, kRoofX, 0.0, kRoofZ)}}}});
  return j;
}

inline json lidar_resolution() {
  json j = base_config("lidar-resolution", 256);
  j["rigs"] = json::array();
  for (int ch : {32, 64, 128}) {
    j["rigs"].push_back({{"name", "roof_" + std::to_string(ch)},
                         {"sensors", {lidar("roof lidar", ch, 512, kRoofX, 0.0, kRoofZ)}}});
  }
  return j;
}

/// Front camera just ahead of the windscreen face plus two rear-facing mirror cameras,
/// each with a 90 degree horizontal field of view.
inline json camera_trio() {
  json j = base_config("camera-trio", 128);
  j["rigs"] = json::array(
      {{{"name", "camera_trio"},
        {"sensors",
         {camera("front camera", 0.35, 0.0, 1.6, 0.0, 8.0),
          camera("left mirror camera", 0.45, 1.05, 1.1, 155.0, 12.0),
          camera("right mirror camera", 0.45, -1.05, 1.1, -155.0, 12.0)}}}});
  return j;
}

inline std::vector<std::string> names() { return {"camera-trio", "roof-vs-grille", "lidar-resolution"}; }

inline std::optional<json> find(const std::string& name) {
  if (name == "camera-trio") return camera_trio();
  if (name == "roof-vs-grille") return roof_vs_grille();
  if (name == "lidar-resolution") return lidar_resolution();
  return std::nullopt;
}

}  // namespace blindspot::presets

#endif  // BLINDSPOT_PRESETS_HPP
