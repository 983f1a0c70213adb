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

#ifndef BLINDSPOT_REFERENCE_HPP
#define BLINDSPOT_REFERENCE_HPP

#include <cstdint>
#include <random>

#include "blindspot/core.hpp"
#include "blindspot/scene.hpp"
#include "blindspot/sensors.hpp"

namespace blindspot {

/// Randomly re-posed dense LiDAR used to probe where scene geometry exists.
/// Angles in degrees.
struct ReferenceSamplerConfig {
  double shell_margin_up = 0.5;
  double shell_margin_horizontal = 0.5;
  int channels = 1024;
  int points_per_channel = 1024;
  double elevation_min = -90.0;
  double elevation_max = 0.0;
  double azimuth_span = 360.0;
  double yaw_min = -180.0;
  double yaw_max = 180.0;
  double pitch_min = -45.0;
  double pitch_max = 45.0;
  double roll_min = -45.0;
  double roll_max = 45.0;
  double max_range = 250.0;
  /// Reference sensors per timestep; their clouds are fused.
  int count = 1;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(shell_margin_up > 0.0) || !(shell_margin_horizontal > 0.0)) {
      throw ContractError("ReferenceSamplerConfig: shell margins must be > 0");
    }
    if (channels < 1 || points_per_channel < 1) {
      throw ContractError("ReferenceSamplerConfig: channels and points_per_channel must be >= 1");
    }
    if (!(elevation_min <= elevation_max) || !(yaw_min <= yaw_max) ||
        !(pitch_min <= pitch_max) || !(roll_min <= roll_max)) {
      throw ContractError("ReferenceSamplerConfig: angle ranges must be ordered");
    }
    if (!(azimuth_span > 0.0) || azimuth_span > 360.0) {
      throw ContractError("ReferenceSamplerConfig: azimuth_span must be in (0, 360]");
    }
    if (!(max_range > 0.0)) throw ContractError("ReferenceSamplerConfig: max_range must be > 0");
    if (count < 1) throw ContractError("ReferenceSamplerConfig: count must be >= 1");
  }

  LidarSpec lidar(const RigidTransform& mount) const {
    LidarSpec s;
    s.channels = channels;
    s.points_per_channel = points_per_channel;
    s.elevation_min = elevation_min;
    s.elevation_max = elevation_max;
    s.azimuth_min = -0.5 * azimuth_span;
    s.azimuth_max = 0.5 * azimuth_span;
    s.max_range = max_range;
    s.mount = mount;
    return s;
  }
};

/// Sampling volume: the ego box grown upward and sideways, minus the ego box.
struct ShellVolume {
  Aabb outer;
  Aabb inner;

  static ShellVolume around(const Aabb& ego_box, double margin_up, double margin_horizontal) {
    const Vec3 grow_lo(margin_horizontal, margin_horizontal, 0.0);
    const Vec3 grow_hi(margin_horizontal, margin_horizontal, margin_up);
    return {Aabb::from_corners(ego_box.min - grow_lo, ego_box.max + grow_hi), ego_box};
  }

  double volume() const { return outer.volume() - inner.volume(); }
  bool contains(const Vec3& p) const { return outer.contains(p) && !inner.contains(p); }
};

/// Independent generator for (seed, timestep, sensor index). Streams do not
/// depend on evaluation order.
inline std::mt19937_64 timestep_stream(std::uint64_t seed, std::int64_t t,
                                       std::uint64_t index = 0) {
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  const std::uint64_t h = mix(mix(mix(seed) ^ static_cast<std::uint64_t>(t)) ^ index);
  return std::mt19937_64(h);
}

/// Uniform double in [0, 1) from 53 random bits.
inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform01(rng);
}

/// Reference -> vehicle pose for timestep `t`: position uniform over the
/// shell (rejection from the outer box), yaw/pitch/roll uniform over the
/// configured ranges.
inline RigidTransform sample_reference_pose(const ReferenceSamplerConfig& cfg,
                                            const Aabb& ego_box, std::int64_t t,
                                            std::uint64_t index = 0) {
  cfg.validate();
  const ShellVolume shell =
      ShellVolume::around(ego_box, cfg.shell_margin_up, cfg.shell_margin_horizontal);
  std::mt19937_64 rng = timestep_stream(cfg.seed, t, index);
  constexpr int kMaxAttempts = 100000;
  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    const Vec3 p(uniform(rng, shell.outer.min.x(), shell.outer.max.x()),
                 uniform(rng, shell.outer.min.y(), shell.outer.max.y()),
                 uniform(rng, shell.outer.min.z(), shell.outer.max.z()));
    if (shell.inner.contains(p)) continue;
    const double yaw = uniform(rng, cfg.yaw_min, cfg.yaw_max);
    const double pitch = uniform(rng, cfg.pitch_min, cfg.pitch_max);
    const double roll = uniform(rng, cfg.roll_min, cfg.roll_max);
    return RigidTransform::from_ypr_deg(p, yaw, pitch, roll);
  }
  throw NumericError("sample_reference_pose: shell volume rejected every sample");
}

/// Dense reference scan in the vehicle frame, ego-body returns removed.
inline PointCloud reference_scan(const ReferenceSamplerConfig& cfg, const WorldSnapshot& world,
                                 const Actor& ego, std::int64_t t) {
  if (!ego.mesh) throw ContractError("reference_scan: ego actor has no mesh");
  const Aabb box = ego.mesh->bounds();
  PointCloud out;
  out.frame = Frame::vehicle();
  out.timestep = t;
  for (int k = 0; k < cfg.count; ++k) {
    const RigidTransform pose = sample_reference_pose(cfg, box, t, static_cast<std::uint64_t>(k));
    PointCloud part = lidar_scan(cfg.lidar(pose), world, world.ego_pose(), {.exclude_ego_hits = true});
    out.points.insert(out.points.end(), part.points.begin(), part.points.end());
  }
  return out;
}

}  // namespace blindspot

#endif  // BLINDSPOT_REFERENCE_HPP
