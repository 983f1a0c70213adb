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

#ifndef BLINDSPOT_SENSORS_HPP
#define BLINDSPOT_SENSORS_HPP

#include <array>
#include <cmath>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "blindspot/core.hpp"
#include "blindspot/scene.hpp"

namespace blindspot {

struct ScanOptions {
  /// Drop returns from the ego vehicle's own body.
  bool exclude_ego_hits = false;
};

// ---------------------------------------------------------------------------
// LiDAR
// ---------------------------------------------------------------------------

/// Rotating LiDAR. Channels are spread evenly in elevation over
/// [elevation_min, elevation_max] including both ends; each channel fires
/// `points_per_channel` rays at azimuth bin centers over [azimuth_min,
/// azimuth_max). Angles in degrees, azimuth counter-clockwise from +x.
struct LidarSpec {
  int channels = 32;
  int points_per_channel = 1024;
  double elevation_min = -25.0;
  double elevation_max = 15.0;
  double azimuth_min = -180.0;
  double azimuth_max = 180.0;
  double max_range = 200.0;
  RigidTransform mount;  // sensor -> vehicle

  void validate() const {
    if (channels < 1) throw ContractError("LidarSpec: channels must be >= 1");
    if (points_per_channel < 1) {
      throw ContractError("LidarSpec: points_per_channel must be >= 1");
    }
    if (!(elevation_min <= elevation_max)) {
      throw ContractError("LidarSpec: elevation_min must be <= elevation_max");
    }
    if (!(azimuth_min < azimuth_max)) {
      throw ContractError("LidarSpec: azimuth_min must be < azimuth_max");
    }
    if (!(max_range > 0.0)) throw ContractError("LidarSpec: max_range must be > 0");
  }

  std::size_t ray_count() const {
    return static_cast<std::size_t>(channels) * static_cast<std::size_t>(points_per_channel);
  }

  double channel_elevation(int c) const {
    if (channels == 1) return elevation_min;
    return elevation_min + (elevation_max - elevation_min) * c / (channels - 1);
  }

  double azimuth(int j) const {
    return azimuth_min + (azimuth_max - azimuth_min) * (j + 0.5) / points_per_channel;
  }
};

/// Unit ray directions in the sensor frame, channel-major.
inline std::vector<Vec3> lidar_directions(const LidarSpec& spec) {
  spec.validate();
  std::vector<Vec3> dirs;
  dirs.reserve(spec.ray_count());
  std::vector<double> cos_az(spec.points_per_channel), sin_az(spec.points_per_channel);
  for (int j = 0; j < spec.points_per_channel; ++j) {
    const double a = deg2rad(spec.azimuth(j));
    cos_az[j] = std::cos(a);
    sin_az[j] = std::sin(a);
  }
  for (int c = 0; c < spec.channels; ++c) {
    const double e = deg2rad(spec.channel_elevation(c));
    const double ce = std::cos(e), se = std::sin(e);
    for (int j = 0; j < spec.points_per_channel; ++j) {
      dirs.emplace_back(ce * cos_az[j], ce * sin_az[j], se);
    }
  }
  return dirs;
}

/// Scans `world` and returns the hits in the vehicle frame. `ego_pose` maps
/// vehicle -> world. Escaped rays produce no point.
inline PointCloud lidar_scan(const LidarSpec& spec, const WorldSnapshot& world,
                             const RigidTransform& ego_pose,
                             const ScanOptions& options = {}) {
  const std::vector<Vec3> dirs = lidar_directions(spec);
  const RigidTransform sensor_to_world = compose(ego_pose, spec.mount);
  const std::optional<ActorId> ego = world.ego_actor();

  PointCloud cloud;
  cloud.frame = Frame::vehicle();
  cloud.points.reserve(dirs.size());
  Ray ray;
  ray.origin = sensor_to_world.translation();
  ray.max_range = spec.max_range;
  for (const Vec3& d : dirs) {
    ray.direction = sensor_to_world.apply_direction(d);
    const auto hit = world.cast(ray);
    if (!hit) continue;
    if (options.exclude_ego_hits && ego && hit->actor_id == *ego) continue;
    cloud.points.push_back(spec.mount.apply(hit->distance * d));
  }
  return cloud;
}

// ---------------------------------------------------------------------------
// Camera
// ---------------------------------------------------------------------------

/// Radial lens model  img = lens * (1 + k1 r^2 + k2 r^4 + k3 r^6),
/// r = |lens|, in normalized image-plane units.
struct DistortionModel {
  enum class Kind { None, RadialPolynomial };

  static constexpr int kMaxIterations = 50;
  static constexpr double kStepTolerance = 1e-10;
  static constexpr double kResidualTolerance = 1e-8;

  Kind kind = Kind::None;
  std::array<double, 3> k{0.0, 0.0, 0.0};

  static DistortionModel none() { return {}; }
  static DistortionModel radial(double k1, double k2 = 0.0, double k3 = 0.0) {
    return {Kind::RadialPolynomial, {k1, k2, k3}};
  }

  double radial_factor(double r2) const {
    return 1.0 + r2 * (k[0] + r2 * (k[1] + r2 * k[2]));
  }

  /// d(r * factor(r)) / dr; the model is invertible while this stays positive.
  double radial_slope(double r) const {
    const double r2 = r * r;
    return 1.0 + r2 * (3.0 * k[0] + r2 * (5.0 * k[1] + r2 * 7.0 * k[2]));
  }

  Vec2 distort(const Vec2& lens) const {
    if (kind == Kind::None) return lens;
    return lens * radial_factor(lens.squaredNorm());
  }

  friend bool operator==(const DistortionModel&, const DistortionModel&) = default;
};

/// Inverse lens distortion by fixed-point iteration
///   lens <- img / factor(|lens|^2).
/// Throws NumericError if it fails to converge.
inline Vec2 invert_distortion(const DistortionModel& model, const Vec2& distorted) {
  if (model.kind == DistortionModel::Kind::None) return distorted;
  Vec2 lens = distorted;
  for (int it = 0; it < DistortionModel::kMaxIterations; ++it) {
    const double f = model.radial_factor(lens.squaredNorm());
    if (!(f > 0.0)) break;
    const Vec2 next = distorted / f;
    const double step = (next - lens).norm();
    lens = next;
    if (step < DistortionModel::kStepTolerance) {
      if ((model.distort(lens) - distorted).norm() <= DistortionModel::kResidualTolerance) {
        return lens;
      }
      break;
    }
  }
  throw NumericError("invert_distortion: no convergence for image point (" +
                     std::to_string(distorted.x()) + ", " + std::to_string(distorted.y()) +
                     ")");
}

/// Pinhole camera with optional radial distortion. Pixel (u, v) at integer
/// coordinates is the pixel center.
struct CameraSpec {
  int width = 640;
  int height = 480;
  double fx = 320.0;
  double fy = 320.0;
  double cx = 320.0;
  double cy = 240.0;
  DistortionModel distortion;
  double max_range = 100.0;  // z-depth
  RigidTransform mount;      // camera -> vehicle

  void validate() const {
    if (width < 1 || height < 1) throw ContractError("CameraSpec: empty image");
    if (!(fx > 0.0) || !(fy > 0.0)) throw ContractError("CameraSpec: fx, fy must be > 0");
    if (!(cx >= 0.0 && cx < width) || !(cy >= 0.0 && cy < height)) {
      throw ContractError("CameraSpec: principal point outside the image");
    }
    if (!(max_range > 0.0)) throw ContractError("CameraSpec: max_range must be > 0");
  }

  /// Intrinsics from a horizontal field of view (degrees), square pixels and a
  /// centered principal point.
  static CameraSpec from_hfov(int width, int height, double hfov_deg) {
    CameraSpec s;
    s.width = width;
    s.height = height;
    s.fx = s.fy = 0.5 * width / std::tan(0.5 * deg2rad(hfov_deg));
    s.cx = 0.5 * width;
    s.cy = 0.5 * height;
    return s;
  }
};

/// Rotation taking camera axes (x right, y down, z forward) to lidar/vehicle
/// style axes (x forward, y left, z up).
inline Mat3 camera_to_forward_axes() {
  Mat3 m;
  m << 0.0, 0.0, 1.0,
      -1.0, 0.0, 0.0,
       0.0, -1.0, 0.0;
  return m;
}

/// Camera mount whose optical axis follows `pose` (yaw 0 looks along +x).
inline RigidTransform camera_mount(const PoseDeg& pose) {
  const RigidTransform body = pose.to_transform();
  return RigidTransform(body.rotation() * camera_to_forward_axes(), body.translation());
}

/// Camera plus its per-pixel lens-plane coordinates, computed once.
class CameraModel {
 public:
  explicit CameraModel(CameraSpec spec) : spec_(std::move(spec)) {
    spec_.validate();
    check_distortion_invertible();
    auto table = std::make_shared<std::vector<Vec2>>();
    table->reserve(static_cast<std::size_t>(spec_.width) * spec_.height);
    for (int v = 0; v < spec_.height; ++v) {
      for (int u = 0; u < spec_.width; ++u) {
        try {
          table->push_back(invert_distortion(spec_.distortion, image_plane({u, v})));
        } catch (const NumericError& e) {
          throw NumericError("pixel (" + std::to_string(u) + ", " + std::to_string(v) +
                             "): " + e.what());
        }
      }
    }
    lens_ = std::move(table);
  }

  const CameraSpec& spec() const { return spec_; }

  Vec2 image_plane(const Vec2& px) const {
    return {(px.x() - spec_.cx) / spec_.fx, (px.y() - spec_.cy) / spec_.fy};
  }

  /// Lens-plane coordinates of an integer pixel.
  const Vec2& lens(int u, int v) const {
    return (*lens_)[static_cast<std::size_t>(v) * spec_.width + u];
  }

  /// Camera-frame point -> continuous pixel coordinates; nullopt behind the camera.
  std::optional<Vec2> project(const Vec3& cam) const {
    if (!(cam.z() > 0.0)) return std::nullopt;
    const Vec2 img = spec_.distortion.distort({cam.x() / cam.z(), cam.y() / cam.z()});
    return Vec2(spec_.fx * img.x() + spec_.cx, spec_.fy * img.y() + spec_.cy);
  }

  /// Continuous pixel + z-depth -> camera-frame point.
  Vec3 unproject(const Vec2& px, double depth) const {
    const Vec2 lens = invert_distortion(spec_.distortion, image_plane(px));
    return {lens.x() * depth, lens.y() * depth, depth};
  }

  /// Largest lens-plane radius seen by any pixel of the image.
  double max_lens_radius() const {
    double r = 0.0;
    for (const Vec2& l : *lens_) r = std::max(r, l.norm());
    return r;
  }

 private:
  void check_distortion_invertible() const {
    if (spec_.distortion.kind == DistortionModel::Kind::None) return;
    // Image-plane radius of the farthest corner, then walk the lens radius
    // until the distorted radius covers it; the slope must stay positive.
    const double w = std::max(spec_.cx, spec_.width - 1 - spec_.cx) / spec_.fx;
    const double h = std::max(spec_.cy, spec_.height - 1 - spec_.cy) / spec_.fy;
    const double target = std::hypot(w, h);
    constexpr int kSamples = 4096;
    double r = 0.0;
    const double step = 4.0 * target / kSamples;
    for (int i = 0; i <= kSamples; ++i, r += step) {
      if (!(spec_.distortion.radial_slope(r) > 0.0)) {
        throw ContractError("CameraSpec: distortion model is not invertible over the image");
      }
      if (r * spec_.distortion.radial_factor(r * r) >= target) return;
    }
    throw ContractError("CameraSpec: distortion model does not cover the image");
  }

  CameraSpec spec_;
  std::shared_ptr<const std::vector<Vec2>> lens_;
};

/// Per-pixel z-depth. Pixels without a return hold kNoReturn.
struct DepthImage {
  static constexpr double kNoReturn = std::numeric_limits<double>::infinity();

  int width = 0;
  int height = 0;
  std::vector<double> depth;

  DepthImage() = default;
  DepthImage(int w, int h)
      : width(w), height(h), depth(static_cast<std::size_t>(w) * h, kNoReturn) {}

  double& at(int u, int v) { return depth[static_cast<std::size_t>(v) * width + u]; }
  double at(int u, int v) const { return depth[static_cast<std::size_t>(v) * width + u]; }
  static bool has_return(double d) { return std::isfinite(d); }
};

/// Ray-casts every pixel center; stores z-depth (not ray length).
inline DepthImage render_depth(const CameraModel& camera, const WorldSnapshot& world,
                               const RigidTransform& ego_pose,
                               const ScanOptions& options = {}) {
  const CameraSpec& spec = camera.spec();
  const RigidTransform cam_to_world = compose(ego_pose, spec.mount);
  const std::optional<ActorId> ego = world.ego_actor();
  DepthImage image(spec.width, spec.height);
  Ray ray;
  ray.origin = cam_to_world.translation();
  for (int v = 0; v < spec.height; ++v) {
    for (int u = 0; u < spec.width; ++u) {
      const Vec2& l = camera.lens(u, v);
      const Vec3 d_cam(l.x(), l.y(), 1.0);
      const double n = d_cam.norm();
      ray.direction = cam_to_world.apply_direction(d_cam / n);
      ray.max_range = spec.max_range * n;
      const auto hit = world.cast(ray);
      if (!hit) continue;
      if (options.exclude_ego_hits && ego && hit->actor_id == *ego) continue;
      const double z = hit->distance / n;
      if (z > 0.0 && z <= spec.max_range) image.at(u, v) = z;
    }
  }
  return image;
}

/// Depth image -> vehicle-frame cloud using the precomputed lens table.
inline PointCloud unproject_depth(const CameraModel& camera, const DepthImage& image) {
  const CameraSpec& spec = camera.spec();
  if (image.width != spec.width || image.height != spec.height ||
      image.depth.size() != static_cast<std::size_t>(spec.width) * spec.height) {
    throw ContractError("unproject_depth: image is " + std::to_string(image.width) + "x" +
                        std::to_string(image.height) + ", camera expects " +
                        std::to_string(spec.width) + "x" + std::to_string(spec.height));
  }
  PointCloud cloud;
  cloud.frame = Frame::vehicle();
  for (int v = 0; v < spec.height; ++v) {
    for (int u = 0; u < spec.width; ++u) {
      const double z = image.at(u, v);
      if (!DepthImage::has_return(z)) continue;
      const Vec2& l = camera.lens(u, v);
      cloud.points.push_back(spec.mount.apply(Vec3(l.x() * z, l.y() * z, z)));
    }
  }
  return cloud;
}

}  // namespace blindspot

#endif  // BLINDSPOT_SENSORS_HPP
