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

#ifndef BLINDSPOT_PIPELINE_HPP
#define BLINDSPOT_PIPELINE_HPP

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "blindspot/coverage.hpp"
#include "blindspot/io/cloud_io.hpp"
#include "blindspot/io/config.hpp"
#include "blindspot/io/raster_io.hpp"
#include "blindspot/io/report.hpp"
#include "blindspot/parallel.hpp"
#include "blindspot/reference.hpp"
#include "blindspot/scene.hpp"
#include "blindspot/sensors.hpp"
#include "blindspot/version.hpp"

namespace blindspot {

/// Everything computed for one timestep, handed to RunOptions::observer.
struct TimestepFrame {
  std::int64_t t = 0;
  PointCloud reference;
  std::vector<PointCloud> rig_clouds;                // one per rig, vehicle frame
  std::vector<std::vector<RadiusSample>> samples;    // one per rig
};

struct RunOptions {
  unsigned threads = default_thread_count();
  /// When set, rasters, images and reports are written below this directory.
  std::optional<std::filesystem::path> out_dir;
  /// When set, every reference cloud is written there as binary.
  std::optional<std::filesystem::path> dump_reference_dir;
  /// Called once per timestep, in increasing t, on the calling thread.
  std::function<void(const TimestepFrame&)> observer;
  std::function<void(std::int64_t done, std::int64_t total)> progress;
};

struct RigResult {
  std::string name;
  std::vector<CoverageGrid> grids;    // parallel to ScenarioConfig::grids
  std::vector<RasterPair> rasters;    // parallel to ScenarioConfig::grids
  io::CoverageReport report;
  std::uint64_t total_points = 0;
};

struct RunResult {
  std::string config_hash;
  std::vector<RigResult> rigs;
  std::uint64_t reference_points = 0;
  double seconds = 0.0;

  const RigResult& rig(const std::string& name) const {
    for (const RigResult& r : rigs) {
      if (r.name == name) return r;
    }
    throw ContractError("RunResult: no rig named '" + name + "'");
  }
};

namespace detail {

using SensorRuntime = std::variant<LidarSpec, CameraModel, io::CloudFiles>;

inline PointCloud load_timestep_cloud(const io::CloudFiles& files, const io::ScenarioConfig& cfg,
                                      std::int64_t t, const RigidTransform& ego_pose) {
  const auto path = cfg.resolve(io::expand_timestep(files.path, t));
  PointCloud c = io::ingest_cloud(
      path, files.frame == Frame::Kind::World ? Frame::world() : Frame::vehicle(), t);
  if (files.frame == Frame::Kind::World) {
    c = transform_cloud(c, {ego_pose.inverse(), Frame::world(), Frame::vehicle()});
  }
  return c;
}

inline PointCloud sense(const std::vector<SensorRuntime>& sensors, const io::ScenarioConfig& cfg,
                        const WorldSnapshot& world, std::int64_t t) {
  PointCloud fused;
  fused.frame = Frame::vehicle();
  fused.timestep = t;
  const ScanOptions options{.exclude_ego_hits = true};
  for (const SensorRuntime& s : sensors) {
    PointCloud part;
    if (const auto* lidar = std::get_if<LidarSpec>(&s)) {
      part = lidar_scan(*lidar, world, world.ego_pose(), options);
    } else if (const auto* cam = std::get_if<CameraModel>(&s)) {
      part = unproject_depth(*cam, render_depth(*cam, world, world.ego_pose(), options));
    } else {
      part = load_timestep_cloud(std::get<io::CloudFiles>(s), cfg, t, world.ego_pose());
    }
    fused.points.insert(fused.points.end(), part.points.begin(), part.points.end());
  }
  return fused;
}

}  // namespace detail

/// Runs the full pipeline. Results are independent of `options.threads`:
/// timesteps are computed concurrently but folded into the grids in order.
inline RunResult run_scenario(const io::ScenarioConfig& cfg, const RunOptions& options = {}) {
  const auto start = std::chrono::steady_clock::now();
  io::validate(cfg);
  const std::vector<Actor> actors = io::build_actors(cfg);
  const Actor& ego = *std::find_if(actors.begin(), actors.end(), [](const Actor& a) { return a.is_ego; });

  std::vector<std::vector<detail::SensorRuntime>> rigs;
  for (const io::RigConfig& rig : cfg.rigs) {
    auto& out = rigs.emplace_back();
    for (const io::SensorConfig& s : rig.sensors) {
      switch (s.type) {
        case io::SensorConfig::Type::Lidar: out.emplace_back(s.lidar); break;
        case io::SensorConfig::Type::Camera: out.emplace_back(CameraModel(s.camera)); break;
        case io::SensorConfig::Type::Clouds: out.emplace_back(s.clouds); break;
      }
    }
  }

  RunResult result;
  result.config_hash = io::config_hash(cfg);
  std::vector<std::int64_t> empty_steps(cfg.rigs.size(), 0);
  for (const io::RigConfig& rig : cfg.rigs) {
    RigResult& r = result.rigs.emplace_back();
    r.name = rig.name;
    for (const GridDefinition& g : cfg.grids) r.grids.emplace_back(g.spec, g.slab);
  }

  ReferenceSamplerConfig sampler = cfg.reference.sampler;
  sampler.seed = cfg.seed;

  auto compute = [&](std::int64_t t) {
    const WorldSnapshot world = build_world(actors, t);
    TimestepFrame f;
    f.t = t;
    if (cfg.reference.enabled) {
      f.reference = reference_scan(sampler, world, ego, t);
    } else {
      f.reference = detail::load_timestep_cloud(*cfg.reference.clouds, cfg, t, world.ego_pose());
    }
    for (const auto& rig : rigs) {
      f.rig_clouds.push_back(detail::sense(rig, cfg, world, t));
      f.samples.push_back(blind_spot_radii(f.reference, f.rig_clouds.back(), 1));
    }
    return f;
  };

  const unsigned threads = std::max(1u, options.threads);
  const std::int64_t batch = std::max<std::int64_t>(1, 2 * static_cast<std::int64_t>(threads));
  std::vector<TimestepFrame> frames;
  for (std::int64_t t0 = 0; t0 < cfg.timesteps; t0 += batch) {
    const std::int64_t n = std::min(batch, cfg.timesteps - t0);
    frames.assign(static_cast<std::size_t>(n), {});
    parallel_for(static_cast<std::size_t>(n), threads,
                 [&](std::size_t i) { frames[i] = compute(t0 + static_cast<std::int64_t>(i)); });
    for (const TimestepFrame& f : frames) {
      if (options.dump_reference_dir) {
        io::write_binary_cloud(*options.dump_reference_dir /
                                   io::expand_timestep("reference_{t:06}.bspc", f.t),
                               f.reference.points);
      }
      result.reference_points += f.reference.points.size();
      for (std::size_t r = 0; r < rigs.size(); ++r) {
        if (f.rig_clouds[r].points.empty()) ++empty_steps[r];
        result.rigs[r].total_points += f.rig_clouds[r].points.size();
        for (CoverageGrid& g : result.rigs[r].grids) g.accumulate(f.samples[r], cfg.r_thresh);
      }
      if (options.observer) options.observer(f);
    }
    if (options.progress) options.progress(std::min(t0 + batch, cfg.timesteps), cfg.timesteps);
  }

  std::vector<std::string> notes = cfg.notes;
  if (cfg.reference.enabled && (sampler.channels < 1024 || sampler.points_per_channel < 1024)) {
    notes.push_back("reference sensor runs at " + std::to_string(sampler.channels) + "x" +
                    std::to_string(sampler.points_per_channel) +
                    " rays; the full-resolution reference is 1024x1024");
  }

  for (std::size_t r = 0; r < rigs.size(); ++r) {
    RigResult& rr = result.rigs[r];
    io::CoverageReport& rep = rr.report;
    rep.scenario = cfg.name;
    rep.rig = rr.name;
    rep.config_hash = result.config_hash;
    rep.version = kVersion;
    rep.seed = cfg.seed;
    rep.timesteps = cfg.timesteps;
    rep.r_thresh = cfg.r_thresh;
    rep.aggregation = io::to_string(cfg.aggregation);
    rep.reference_source = cfg.reference.enabled ? "sampled" : "files";
    rep.reference_channels = cfg.reference.enabled ? sampler.channels : 0;
    rep.reference_points_per_channel = cfg.reference.enabled ? sampler.points_per_channel : 0;
    rep.reference_count = cfg.reference.enabled ? sampler.count : 0;
    rep.empty_sensor_timesteps = empty_steps[r];
    rep.empty_sensor_rig = empty_steps[r] == cfg.timesteps;
    rep.notes = notes;
    if (rep.empty_sensor_timesteps > 0) {
      rep.notes.push_back("rig returned no points at " + std::to_string(empty_steps[r]) +
                          " timestep(s); those probes are clamped to the grid diagonal");
    }

    for (std::size_t g = 0; g < cfg.grids.size(); ++g) {
      rr.rasters.push_back(finalize(rr.grids[g], cfg.aggregation));
      const std::string& name = cfg.grids[g].name;
      const std::string radius_kind = to_string(rr.rasters.back().radius.kind);
      io::GridReport gr{name, cfg.grids[g].slab.name, rr.grids[g].r_cap(),
                        rr.grids[g].clamp_count(), name + "_" + radius_kind + ".csv",
                        name + "_probability.csv", name + "_" + radius_kind + ".ppm",
                        name + "_probability.ppm"};
      rep.grids.push_back(gr);
    }
    for (const RoiRect& roi : cfg.rois) {
      const auto g = std::find_if(cfg.grids.begin(), cfg.grids.end(),
                                  [&](const GridDefinition& d) { return d.name == roi.grid; });
      rep.rois.push_back(summarize(rr.rasters[static_cast<std::size_t>(g - cfg.grids.begin())], roi));
    }

    if (options.out_dir) {
      const auto dir = *options.out_dir / rr.name;
      const io::RasterMetadata meta{cfg.name, rr.name, result.config_hash, cfg.seed, cfg.timesteps};
      for (std::size_t g = 0; g < cfg.grids.size(); ++g) {
        const io::GridReport& gr = rep.grids[g];
        io::write_raster_csv(dir / gr.radius_csv, rr.rasters[g].radius, meta);
        io::write_raster_csv(dir / gr.probability_csv, rr.rasters[g].probability, meta);
        io::write_raster_ppm(dir / gr.radius_image, rr.rasters[g].radius, cfg.raster.radius_max);
        io::write_raster_ppm(dir / gr.probability_image, rr.rasters[g].probability);
      }
      io::write_report(dir / "report.json", rep);
    }
  }
  if (options.out_dir) {
    io::detail::write_all(*options.out_dir / "config.json", io::to_json(cfg).dump(2) + "\n");
  }
  result.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

}  // namespace blindspot

#endif  // BLINDSPOT_PIPELINE_HPP
