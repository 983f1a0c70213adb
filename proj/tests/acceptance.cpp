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

// Acceptance run: one PASS/FAIL line per criterion. Optional arguments
// select criteria by number, e.g. `acceptance 1 5`.

#include <sys/wait.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "blindspot/kdtree.hpp"
#include "blindspot/mesh.hpp"
#include "blindspot/pipeline.hpp"
#include "blindspot/presets.hpp"
#include "blindspot/reference.hpp"
#include "blindspot/sensors.hpp"
#include "shell_oracle.hpp"
#include "support.hpp"

using namespace blindspot;
using io::json;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void check(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail += (detail.empty() ? "" : "; ") + std::string("FAILED ") + what;
    }
  }
  void note(const std::string& s) { detail += (detail.empty() ? "" : "; ") + s; }
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

unsigned cores() { return default_thread_count(); }

io::ScenarioConfig preset(const std::string& name, std::uint64_t seed) {
  json j = *presets::find(name);
  j["seed"] = seed;
  return io::parse_config(j);
}

RunOptions quiet_options(unsigned threads = cores()) {
  RunOptions o;
  o.threads = threads;
  return o;
}

const RoiSummary& roi(const RigResult& r, const std::string& name) {
  for (const RoiSummary& s : r.report.rois) {
    if (s.name == name) return s;
  }
  throw ContractError("no ROI " + name);
}

// --- 1 ---------------------------------------------------------------------

NnResult scan_nearest(const std::vector<Vec3>& pts, const Vec3& q) {
  NnResult best;
  double best_d2 = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const double dx = pts[i].x() - q.x(), dy = pts[i].y() - q.y(), dz = pts[i].z() - q.z();
    const double d2 = dx * dx + dy * dy + dz * dz;
    if (d2 < best_d2) {
      best_d2 = d2;
      best.index = i;
    }
  }
  best.distance = std::sqrt(best_d2);
  return best;
}

std::vector<Vec3> instance_cloud(std::mt19937_64& rng, std::size_t n, int kind) {
  std::vector<Vec3> pts;
  pts.reserve(n);
  std::uniform_real_distribution<double> u(-50, 50);
  std::normal_distribution<double> g(0, 1);
  std::uniform_int_distribution<int> lattice(-20, 20);
  std::vector<Vec3> centers;
  for (int c = 0; c < 8; ++c) centers.emplace_back(u(rng), u(rng), 0.1 * u(rng));
  for (std::size_t i = 0; i < n; ++i) {
    switch (kind) {
      case 0: pts.emplace_back(u(rng), u(rng), u(rng)); break;
      case 1: pts.push_back(centers[i % 8] + Vec3(g(rng), g(rng), 0.2 * g(rng))); break;
      case 2: pts.emplace_back(u(rng), u(rng), 0.0); break;  // planar, like ground returns
      default: pts.emplace_back(lattice(rng), lattice(rng), lattice(rng) / 4); break;
    }
  }
  return pts;
}

Outcome criterion1() {
  Outcome o;
  const auto t0 = Clock::now();
  std::mt19937_64 rng(1001);
  std::uniform_real_distribution<double> logn(1.0, 4.0);
  std::size_t mismatched_d = 0, mismatched_i = 0, queries = 0;
  double worst = 0.0;
  for (int inst = 0; inst < 200; ++inst) {
    const auto n = inst < 3 ? 10000u : static_cast<std::size_t>(std::pow(10.0, logn(rng)));
    const auto m = inst < 3 ? 10000u : static_cast<std::size_t>(std::pow(10.0, logn(rng)));
    const int kind = inst % 4;
    const std::vector<Vec3> pts = instance_cloud(rng, n, kind);
    std::vector<Vec3> qs = instance_cloud(rng, m, kind == 3 ? 3 : 0);
    if (kind == 3) {
      for (Vec3& q : qs) q += Vec3(0.5, 0.5, 0.125);  // equidistant from lattice neighbours
    }
    const KdTree tree(pts);
    const std::vector<NnResult> got = tree.nearest_batch(qs, cores());
    for (std::size_t k = 0; k < m; ++k) {
      const NnResult want = scan_nearest(pts, qs[k]);
      const double err = std::abs(got[k].distance - want.distance);
      worst = std::max(worst, err);
      mismatched_d += err > 1e-12;
      mismatched_i += got[k].index != want.index;
    }
    queries += m;
  }
  const double secs = seconds_since(t0);
  o.check(mismatched_d == 0, std::to_string(mismatched_d) + " distance mismatches");
  o.check(mismatched_i == 0, std::to_string(mismatched_i) + " index mismatches");
  o.check(secs < 60.0, "runtime");
  o.note("200 instances, " + std::to_string(queries) + " queries, max |d err| " +
         fmt("%.1e", worst) + ", " + fmt("%.1f s", secs));
  return o;
}

// --- 2 ---------------------------------------------------------------------

Outcome criterion2() {
  Outcome o;
  const auto t0 = Clock::now();
  std::mt19937_64 rng(1002);
  std::uniform_real_distribution<double> k1(-0.3, 0.1), z(0.5, 100.0), lx(-0.38, 0.38),
      ly(-0.3, 0.3);
  double worst_plain = 0.0, worst_radial = 0.0;
  constexpr int kCameras = 100, kPerCamera = 1000;
  for (int c = 0; c < kCameras; ++c) {
    CameraSpec s;
    s.width = 320;
    s.height = 240;
    // k1 = -0.3 folds back at an image radius of about 0.70; keep the corners inside that.
    s.fx = 420.0;
    s.fy = 380.0;
    s.cx = 157.0;
    s.cy = 121.5;
    const CameraModel plain(s);
    s.distortion = DistortionModel::radial(c == 0 ? -0.3 : c == 1 ? 0.1 : k1(rng));
    const CameraModel radial(s);
    for (int i = 0; i < kPerCamera; ++i) {
      const double d = z(rng);
      const Vec3 p(lx(rng) * d, ly(rng) * d, d);
      worst_plain = std::max(worst_plain, (plain.unproject(*plain.project(p), d) - p).norm());
      worst_radial = std::max(worst_radial, (radial.unproject(*radial.project(p), d) - p).norm());
    }
  }
  const double secs = seconds_since(t0);
  o.check(worst_plain < 1e-6, "no-distortion error");
  o.check(worst_radial < 1e-5, "radial error");
  o.check(secs < 10.0, "runtime");
  o.note("1e5 points, max error " + fmt("%.2e", worst_plain) + " m plain, " +
         fmt("%.2e", worst_radial) + " m radial, " + fmt("%.1f s", secs));
  return o;
}

// --- 3 ---------------------------------------------------------------------

Outcome criterion3() {
  Outcome o;
  const auto t0 = Clock::now();
  PoseDeg p;
  const std::vector<Actor> actors = {
      {0, std::make_shared<const TriangleMesh>(ground_plane(1e5)), Trajectory::fixed(p), false,
       false}};
  const WorldSnapshot world = build_world(actors, 0);
  struct Case {
    double h;
    int channels;
    double e_min, e_max;
    double yaw;
  };
  double worst = 0.0;
  std::size_t points = 0;
  for (const Case& c : {Case{0.55, 128, -15, -0.5, 0}, Case{1.8, 64, -25, -1, 30},
                        Case{1.73, 32, -30.67, -1.33, -90}, Case{2.5, 16, -89, -10, 12}}) {
    LidarSpec s;
    s.channels = c.channels;
    s.points_per_channel = 720;
    s.elevation_min = c.e_min;
    s.elevation_max = c.e_max;
    s.max_range = 1e4;
    s.mount = RigidTransform::from_ypr_deg({0.7, -0.3, c.h}, c.yaw, 0, 0);
    const PointCloud cloud = lidar_scan(s, world, RigidTransform{});
    o.check(cloud.size() == s.ray_count(), "every ray must return");
    for (std::size_t i = 0; i < cloud.size(); ++i) {
      const int ch = static_cast<int>(i / static_cast<std::size_t>(s.points_per_channel));
      const double expected = c.h / std::tan(std::abs(deg2rad(s.channel_elevation(ch))));
      const Vec3& q = cloud.points[i];
      worst = std::max(worst, std::abs(std::hypot(q.x() - 0.7, q.y() + 0.3) - expected));
    }
    points += cloud.size();
  }
  const double secs = seconds_since(t0);
  o.check(worst <= 1e-6, "ring radius error");
  o.check(secs < 5.0, "runtime");
  o.note(std::to_string(points) + " ground returns, max ring error " + fmt("%.2e", worst) +
         " m, " + fmt("%.2f s", secs));
  return o;
}

// --- 4 ---------------------------------------------------------------------

Outcome criterion4() {
  Outcome o;
  const auto t0 = Clock::now();
  const Aabb box = hatchback().bounds();
  ReferenceSamplerConfig cfg;
  cfg.seed = 1004;
  const ShellVolume shell = ShellVolume::around(box, 0.5, 0.5);
  o.check(shell.outer.min == box.min - Vec3(0.5, 0.5, 0.0) &&
              shell.outer.max == box.max + Vec3(0.5, 0.5, 0.5),
          "shell bounds");
  std::vector<Vec3> pos;
  pos.reserve(100000);
  std::size_t outside = 0, in_box = 0;
  for (std::int64_t t = 0; t < 100000; ++t) {
    const Vec3 p = sample_reference_pose(cfg, box, t).translation();
    outside += !shell.outer.contains(p);
    in_box += box.contains(p);
    pos.push_back(p);
  }
  double p_min = 1.0;
  std::string ps;
  for (int axis = 0; axis < 3; ++axis) {
    const double pv = testing::shell_axis_p_value(pos, shell.outer, shell.inner, axis, 20);
    p_min = std::min(p_min, pv);
    ps += std::string(axis ? "/" : "") + fmt("%.3f", pv);
  }
  const double secs = seconds_since(t0);
  o.check(outside == 0, std::to_string(outside) + " samples outside the shell");
  o.check(in_box == 0, std::to_string(in_box) + " samples inside the ego box");
  o.check(p_min > 0.01, "chi-square uniformity");
  o.check(secs < 10.0, "runtime");
  o.note("1e5 samples, per-axis p = " + ps + ", " + fmt("%.2f s", secs));
  return o;
}

// --- 5 ---------------------------------------------------------------------

json micro_scenario() {
  json j = *presets::find("roof-vs-grille");
  j["name"] = "micro";
  j["timesteps"] = 8;
  j["seed"] = 5;
  j["reference"] = {{"channels", 48}, {"points_per_channel", 96}};
  j["rigs"] = json::array({j["rigs"][0]});
  j["rigs"][0]["sensors"][0]["channels"] = 16;
  j["rigs"][0]["sensors"][0]["points_per_channel"] = 128;
  j["grids"] = json::array(
      {{{"name", "two_cells"},
        {"x_min", -2.0}, {"x_max", 8.0}, {"y_min", -5.0}, {"y_max", 5.0}, {"cell_size", 5.0},
        {"slab", {{"name", "ground"}, {"z_min", -0.5}, {"z_max", 0.5}}}},
       {{"name", "fine"},
        {"x_min", -10.0}, {"x_max", 20.0}, {"y_min", -10.0}, {"y_max", 10.0}, {"cell_size", 0.5},
        {"slab", {{"name", "ground"}, {"z_min", -0.5}, {"z_max", 0.5}}}},
       {{"name", "fine_obstacles"},
        {"x_min", -10.0}, {"x_max", 20.0}, {"y_min", -10.0}, {"y_max", 10.0}, {"cell_size", 0.5},
        {"slab", {{"name", "obstacles"}, {"z_min", 0.5}, {"z_max", 2.0}}}}});
  j["rois"] = json::array(
      {{{"name", "near"}, {"grid", "fine"}, {"x_min", 0}, {"x_max", 20}, {"y_min", -5}, {"y_max", 5}}});
  return j;
}

Outcome criterion5() {
  Outcome o;
  const io::ScenarioConfig cfg = io::parse_config(micro_scenario());
  std::vector<std::vector<RadiusSample>> steps;
  RunOptions opt = quiet_options(1);
  opt.observer = [&](const TimestepFrame& f) { steps.push_back(f.samples[0]); };
  const RunResult res = run_scenario(cfg, opt);
  o.check(steps.size() == 8, "observer saw every timestep");
  std::size_t compared = 0, mismatches = 0;
  for (std::size_t g = 0; g < cfg.grids.size(); ++g) {
    const GridDefinition& def = cfg.grids[g];
    const double cap = def.spec.diagonal();
    const RasterPair nested = finalize(res.rigs[0].grids[g], Aggregation::Nested);
    const RasterPair pooled = finalize(res.rigs[0].grids[g], Aggregation::Pooled);
    const RasterPair worst = finalize(res.rigs[0].grids[g], Aggregation::Max);
    for (std::size_t ix = 0; ix < def.spec.nx(); ++ix) {
      for (std::size_t iy = 0; iy < def.spec.ny(); ++iy) {
        // E_t[ E_q[ r | q in cell ] ] and E_t[ E_q[ 1(r <= r_thresh) | q in cell ] ], with
        // E_t over the timesteps that probed the cell.
        double outer_r = 0.0, outer_p = 0.0, steps_with = 0.0;
        double all_r = 0.0, all_hits = 0.0, all_n = 0.0, max_r = 0.0;
        for (const auto& s : steps) {
          double inner_r = 0.0, inner_hits = 0.0, inner_n = 0.0;
          for (const RadiusSample& p : s) {
            if (!(p.q.z() >= def.slab.z_min && p.q.z() < def.slab.z_max)) continue;
            if (!(p.q.x() >= def.spec.x_min && p.q.x() < def.spec.x_max && p.q.y() >= def.spec.y_min &&
                  p.q.y() < def.spec.y_max)) {
              continue;
            }
            if (static_cast<std::size_t>((p.q.x() - def.spec.x_min) / def.spec.cell_size) != ix ||
                static_cast<std::size_t>((p.q.y() - def.spec.y_min) / def.spec.cell_size) != iy) {
              continue;
            }
            const double r = p.r > cap ? cap : p.r;
            const double hit = p.r <= cfg.r_thresh ? 1.0 : 0.0;
            inner_r += r;
            inner_hits += hit;
            inner_n += 1.0;
            all_r += r;
            all_hits += hit;
            all_n += 1.0;
            max_r = std::max(max_r, r);
          }
          if (inner_n > 0.0) {
            outer_r += inner_r / inner_n;
            outer_p += inner_hits / inner_n;
            steps_with += 1.0;
          }
        }
        auto same = [&](double got, double want) {
          ++compared;
          if (std::isnan(want) ? !std::isnan(got) : got != want) ++mismatches;
        };
        const double nan = std::numeric_limits<double>::quiet_NaN();
        same(nested.radius.at(ix, iy), steps_with > 0 ? outer_r / steps_with : nan);
        same(nested.probability.at(ix, iy), steps_with > 0 ? outer_p / steps_with : nan);
        same(pooled.radius.at(ix, iy), all_n > 0 ? all_r / all_n : nan);
        same(pooled.probability.at(ix, iy), all_n > 0 ? all_hits / all_n : nan);
        same(worst.radius.at(ix, iy), all_n > 0 ? max_r : nan);
        same(res.rigs[0].rasters[g].radius.at(ix, iy), nested.radius.at(ix, iy));
      }
    }
  }
  o.check(mismatches == 0, std::to_string(mismatches) + " cells differ from the oracle");
  o.note(std::to_string(compared) + " cell values compared exactly over 8 timesteps");
  return o;
}

// --- 6 ---------------------------------------------------------------------

Outcome criterion6() {
  Outcome o;
  // Wall 10 m ahead of the grille LiDAR, taller than the sensor.
  constexpr double kSensorX = presets::kGrilleX;
  constexpr double kWallDist = 10.0, kWallHalfWidth = 4.0, kWallHeight = 0.7, kWallDepth = 0.2;
  json j = *presets::find("roof-vs-grille");
  j["name"] = "wall";
  j["timesteps"] = 64;
  j["seed"] = 6;
  j["scene"]["actors"] = json::array(
      {{{"id", 0}, {"name", "ground"}, {"mesh", {{"type", "ground"}, {"extent", 1000}}}},
       {{"id", 1}, {"name", "ego"}, {"ego", true}, {"mesh", {{"type", "hatchback"}}}},
       {{"id", 2},
        {"name", "wall"},
        {"mesh",
         {{"type", "box"},
          {"size", {kWallDepth, 2 * kWallHalfWidth, kWallHeight}},
          {"center", {kSensorX + kWallDist + 0.5 * kWallDepth, 0, 0.5 * kWallHeight}}}}}});
  j["rigs"] = json::array({j["rigs"][0]});
  j["grids"] = json::array(
      {{{"name", "wall_ground"},
        {"x_min", 0.0}, {"x_max", 40.0}, {"y_min", -10.0}, {"y_max", 10.0}, {"cell_size", 0.5},
        {"slab", {{"name", "ground"}, {"z_min", -0.5}, {"z_max", 0.5}}}}});
  j["rois"] = json::array();
  const io::ScenarioConfig cfg = io::parse_config(j);
  const RunResult res = run_scenario(cfg, quiet_options());
  const GridSpec& g = cfg.grids[0].spec;
  const Raster& p = res.rigs[0].rasters[0].probability;

  // Shadow cone on the ground: |y| < half_width * x_rel / wall_dist past the wall.
  // A cell is "inside" when every point of it is at least r_thresh + margin
  // away from the cone's edges and from the wall.
  const double margin = cfg.r_thresh + 0.1;
  std::size_t inside = 0, inside_zero = 0, front = 0, front_pos = 0, beside = 0, beside_pos = 0;
  for (std::size_t ix = 0; ix < g.nx(); ++ix) {
    for (std::size_t iy = 0; iy < g.ny(); ++iy) {
      const double v = p.at(ix, iy);
      if (Raster::no_data(v)) continue;
      const double x0 = g.x_min + static_cast<double>(ix) * g.cell_size - kSensorX;
      const double x1 = x0 + g.cell_size;
      const double y_abs_max = std::max(std::abs(g.y_min + static_cast<double>(iy) * g.cell_size),
                                        std::abs(g.y_min + static_cast<double>(iy + 1) * g.cell_size));
      const double y_abs_min = std::min(std::abs(g.y_min + static_cast<double>(iy) * g.cell_size),
                                        std::abs(g.y_min + static_cast<double>(iy + 1) * g.cell_size));
      const double edge_at_x0 = kWallHalfWidth * x0 / kWallDist;
      if (x0 >= kWallDist + kWallDepth + 1.0 - 1e-9 && x1 <= kWallDist + 20.0 + 1e-9 &&
          y_abs_max + margin <= edge_at_x0) {
        ++inside;
        inside_zero += v == 0.0;
      } else if (x0 >= kWallDist - 2.0 && x1 <= kWallDist - 0.5 && y_abs_max < kWallHalfWidth) {
        ++front;
        front_pos += v > 0.0;
      } else if (x0 >= kWallDist + 1.0 && x1 <= kWallDist + 10.0 &&
                 y_abs_min >= kWallHalfWidth * x1 / kWallDist + margin &&
                 y_abs_max <= kWallHalfWidth * x1 / kWallDist + 2.0) {
        ++beside;
        beside_pos += v > 0.0;
      }
    }
  }
  o.check(inside >= 50, "too few probed shadow cells (" + std::to_string(inside) + ")");
  o.check(inside_zero == inside, std::to_string(inside - inside_zero) + " shadow cells with p > 0");
  o.check(front > 0 && front_pos == front, "cells in front of the wall must have p > 0");
  o.check(beside > 0 && 2 * beside_pos > beside, "most cells beside the shadow must have p > 0");
  o.note("wall: " + std::to_string(inside_zero) + "/" + std::to_string(inside) +
         " shadow cells p = 0, " + std::to_string(front_pos) + "/" + std::to_string(front) +
         " front cells p > 0, " + std::to_string(beside_pos) + "/" + std::to_string(beside) +
         " side cells p > 0");

  // Hood blind spot for the camera trio at ground level.
  const io::ScenarioConfig trio = preset("camera-trio", 1);
  const RunResult tr = run_scenario(trio, quiet_options());
  std::size_t gi = 0;
  while (trio.grids[gi].name != "close_ground") ++gi;
  const GridSpec& cg = trio.grids[gi].spec;
  const Raster& tp = tr.rigs[0].rasters[gi].probability;
  std::size_t probed = 0, blind = 0;
  for (std::size_t ix = 0; ix < cg.nx(); ++ix) {
    for (std::size_t iy = 0; iy < cg.ny(); ++iy) {
      const Vec2 c = cg.cell_center(ix, iy);
      if (c.x() < HatchbackDimensions::kLength / 2 || c.x() > 5.0 || std::abs(c.y()) > 1.0) continue;
      if (Raster::no_data(tp.at(ix, iy))) continue;
      ++probed;
      blind += tp.at(ix, iy) == 0.0;
    }
  }
  o.check(blind > 0, "no zero-probability cells in front of the hood");
  o.check(2 * blind > probed, "hood blind region is not dominant");
  o.note("camera-trio: " + std::to_string(blind) + "/" + std::to_string(probed) +
         " probed ground cells in front of the hood (x 2.25-5 m, |y| < 1 m) have p = 0");
  return o;
}

// --- 7 ---------------------------------------------------------------------

std::map<std::uint64_t, RunResult> g_roof_vs_grille;

const RunResult& roof_vs_grille(std::uint64_t seed) {
  auto it = g_roof_vs_grille.find(seed);
  if (it == g_roof_vs_grille.end()) {
    it = g_roof_vs_grille.emplace(seed, run_scenario(preset("roof-vs-grille", seed), quiet_options())).first;
  }
  return it->second;
}

Outcome criterion7() {
  Outcome o;
  const auto t0 = Clock::now();
  const std::string close_ground = "close range (20 m) ground";
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const RunResult& res = roof_vs_grille(seed);
    const RigResult& grille = res.rig("grille");
    const RigResult& roof = res.rig("roof");
    std::string row = "seed " + std::to_string(seed) + ":";
    for (const RoiSummary& gs : grille.report.rois) {
      const RoiSummary& rs = roi(roof, gs.name);
      if (!gs.has_data() || !rs.has_data()) {
        o.check(false, gs.name + " has no data (seed " + std::to_string(seed) + ")");
        continue;
      }
      const double gr = *gs.mean_blind_spot_radius, rr = *rs.mean_blind_spot_radius;
      const double gp = *gs.mean_detection_probability, rp = *rs.mean_detection_probability;
      if (gs.name == close_ground) {
        o.check(gr < rr, "grille must win close-ground radius (seed " + std::to_string(seed) + ")");
      } else {
        o.check(rr < gr, "roof must win " + gs.name + " radius (seed " + std::to_string(seed) + ")");
      }
      o.check(rp > gp, "roof must win " + gs.name + " probability (seed " + std::to_string(seed) + ")");
      row += " [" + gs.name + " r " + fmt("%.2f", gr) + "/" + fmt("%.2f", rr) + " p " +
             fmt("%.1f", 100 * gp) + "/" + fmt("%.1f", 100 * rp) + "]";
    }
    o.note(row);
  }
  const double secs = seconds_since(t0);
  o.check(secs < 600.0, "runtime");
  o.note("values grille/roof, " + fmt("%.0f s", secs));
  return o;
}

// --- 8 ---------------------------------------------------------------------

Outcome criterion8() {
  Outcome o;
  const auto t0 = Clock::now();
  const RunResult res = run_scenario(preset("lidar-resolution", 1), quiet_options());
  const std::vector<std::string> rigs = {"roof_32", "roof_64", "roof_128"};
  for (const RoiSummary& base : res.rig(rigs[0]).report.rois) {
    std::vector<double> r, p;
    for (const std::string& name : rigs) {
      const RoiSummary& s = roi(res.rig(name), base.name);
      if (!s.has_data()) {
        o.check(false, base.name + " has no data");
        break;
      }
      r.push_back(*s.mean_blind_spot_radius);
      p.push_back(*s.mean_detection_probability);
    }
    if (r.size() != 3) continue;
    o.check(r[1] <= r[0] && r[2] <= r[1], base.name + " radius not monotone");
    o.check(p[1] >= p[0] && p[2] >= p[1], base.name + " probability not monotone");
    const double spread = 100.0 * (std::max({p[0], p[1], p[2]}) - std::min({p[0], p[1], p[2]}));
    if (base.name == "close range (20 m) obstacles") o.check(spread < 5.0, "close obstacle spread");
    if (base.name == "close range (20 m) ground") o.check(spread > 15.0, "close ground spread");
    o.note(base.name + " r " + fmt("%.2f", r[0]) + "/" + fmt("%.2f", r[1]) + "/" + fmt("%.2f", r[2]) +
           " p " + fmt("%.1f", 100 * p[0]) + "/" + fmt("%.1f", 100 * p[1]) + "/" +
           fmt("%.1f", 100 * p[2]) + " (spread " + fmt("%.1f", spread) + " pp)");
  }
  const double secs = seconds_since(t0);
  o.check(secs < 900.0, "runtime");
  o.note("32/64/128 channels, " + fmt("%.0f s", secs));
  return o;
}

// --- 9 ---------------------------------------------------------------------

Outcome criterion9() {
  Outcome o;
  json j = *presets::find("roof-vs-grille");
  j["timesteps"] = 32;
  const json grille = j["rigs"][0]["sensors"][0];
  const json roof = j["rigs"][1]["sensors"][0];
  const json front_cam = (*presets::find("camera-trio"))["rigs"][0]["sensors"][0];
  j["rigs"] = json::array({{{"name", "grille"}, {"sensors", {grille}}},
                           {{"name", "roof"}, {"sensors", {roof}}},
                           {{"name", "grille_roof"}, {"sensors", {grille, roof}}},
                           {{"name", "camera"}, {"sensors", {front_cam}}},
                           {{"name", "grille_roof_camera"}, {"sensors", {grille, roof, front_cam}}}});
  const io::ScenarioConfig cfg = io::parse_config(j);
  // (smaller rig, larger rig) pairs where the larger rig adds sensors.
  const std::vector<std::pair<int, int>> pairs = {{0, 2}, {1, 2}, {2, 4}, {3, 4}, {0, 4}};
  std::size_t probes = 0, violations = 0, strict = 0, not_min = 0;
  RunOptions opt = quiet_options();
  opt.observer = [&](const TimestepFrame& f) {
    for (auto [a, b] : pairs) {
      for (std::size_t i = 0; i < f.samples[a].size(); ++i) {
        violations += f.samples[b][i].r > f.samples[a][i].r;
        strict += f.samples[b][i].r < f.samples[a][i].r;
        ++probes;
      }
    }
    for (std::size_t i = 0; i < f.samples[2].size(); ++i) {
      not_min += f.samples[2][i].r != std::min(f.samples[0][i].r, f.samples[1][i].r);
    }
  };
  run_scenario(cfg, opt);
  o.check(violations == 0, std::to_string(violations) + " probes with larger r after adding a sensor");
  o.check(not_min == 0, std::to_string(not_min) + " probes where r(A+B) != min(r(A), r(B))");
  o.note(std::to_string(probes) + " probe comparisons over 32 timesteps, " +
         std::to_string(strict) + " strictly improved");
  return o;
}

// --- 10 --------------------------------------------------------------------

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(BLINDSPOT_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

Outcome criterion10() {
  Outcome o;
  testing::TempDir dir("acceptance");
  std::size_t files = 0;
  for (const std::string& name : presets::names()) {
    for (unsigned threads : {1u, 3u}) {
      const std::string out = (dir / (name + "_" + std::to_string(threads))).string();
      const int rc = run_cli("run " + name + " -q --timesteps 6 --seed 10 --threads " +
                             std::to_string(threads) + " --out-dir " + out);
      o.check(rc == 0, name + " run exited with " + std::to_string(rc));
    }
    const auto a = dir.path() / (name + "_1");
    const auto b = dir.path() / (name + "_3");
    std::error_code ec;
    for (const auto& e : std::filesystem::recursive_directory_iterator(a, ec)) {
      if (e.path().extension() != ".csv") continue;
      const auto rel = std::filesystem::relative(e.path(), a);
      o.check(slurp(e.path()) == slurp(b / rel), name + "/" + rel.string() + " differs");
      ++files;
    }
  }
  o.check(files > 0, "no CSV outputs");
  o.note(std::to_string(files) + " CSV files byte-identical between --threads 1 and 3");
  return o;
}

// --- 11 --------------------------------------------------------------------

Outcome criterion11() {
  Outcome o;
  const io::ScenarioConfig cfg = preset("roof-vs-grille", 1);
  const RunResult& res = roof_vs_grille(1);
  const unsigned used = std::min(cores(), std::max(1u, quiet_options().threads));
  const double rate = static_cast<double>(cfg.timesteps) / res.seconds;
  const double per_core = rate / used;
  const double at8 = per_core * 8.0;
  o.check(at8 >= 10.0, "throughput");
  o.note(fmt("%.2f", rate) + " timesteps/s on " + std::to_string(used) + " core(s) = " +
         fmt("%.2f", per_core) + "/core, " + fmt("%.1f", at8) + " timesteps/s scaled to 8 cores (reference " +
         std::to_string(cfg.reference.sampler.channels) + "x" +
         std::to_string(cfg.reference.sampler.points_per_channel) + ", " +
         std::to_string(res.reference_points / static_cast<std::uint64_t>(cfg.timesteps)) + " probes/frame)");

  std::mt19937_64 rng(1011);
  std::uniform_real_distribution<double> xy(-100, 100), z(0, 5);
  std::vector<Vec3> pts(1000000), qs(1000000);
  for (Vec3& p : pts) p = {xy(rng), xy(rng), z(rng)};
  for (Vec3& q : qs) q = {xy(rng), xy(rng), z(rng)};
  const auto t0 = Clock::now();
  const KdTree tree(pts);
  const std::vector<NnResult> nn = tree.nearest_batch(qs, 1);
  const double tree_secs = seconds_since(t0);
  constexpr std::size_t kSample = 200;
  const auto t1 = Clock::now();
  std::size_t agree = 0;
  for (std::size_t i = 0; i < kSample; ++i) {
    const std::size_t k = i * (qs.size() / kSample);
    agree += brute_force_nearest(pts, qs[k]).index == nn[k].index;
  }
  const double brute_secs = seconds_since(t1) * static_cast<double>(qs.size()) / kSample;
  const double speedup = brute_secs / tree_secs;
  o.check(agree == kSample, "sampled brute-force answers disagree");
  o.check(speedup >= 20.0, "nearest_batch speedup");
  o.note("1e6 x 1e6 NN: tree " + fmt("%.2f s", tree_secs) + " (build + query, 1 thread), brute force " +
         fmt("%.0f s", brute_secs) + " extrapolated from " + std::to_string(kSample) +
         " queries, speedup " + fmt("%.0fx", speedup));
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"nearest-neighbor exactness", criterion1},
      {"camera project/unproject round trip", criterion2},
      {"LiDAR ground-ring geometry", criterion3},
      {"reference-shell sampling", criterion4},
      {"grid aggregation oracle equivalence", criterion5},
      {"shadow and hood self-occlusion", criterion6},
      {"mounting-position ordering", criterion7},
      {"resolution monotonicity", criterion8},
      {"monotonicity under sensor addition", criterion9},
      {"determinism across thread counts", criterion10},
      {"performance", criterion11},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
  int failed = 0;
  std::printf("acceptance: %u hardware thread(s)\n", cores());
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && !only.count(id)) continue;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    failed += !o.pass;
    std::printf("criterion %2d %-38s %s  %s\n", id, criteria[i].first.c_str(), o.pass ? "PASS" : "FAIL",
                o.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
