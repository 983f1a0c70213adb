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

#ifndef BLINDSPOT_CORE_HPP
#define BLINDSPOT_CORE_HPP

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "blindspot/errors.hpp"

/*
 * Coordinate conventions used throughout the library:
 *
 *   vehicle frame  x forward, y left, z up; origin at the ground projection
 *                  of the ego bounding-box center
 *   lidar frame    same axes as the vehicle frame
 *   camera frame   z forward (optical axis), x right, y down
 *
 * Orientations at external interfaces are yaw/pitch/roll in degrees, applied
 * intrinsically Z-Y'-X''. With y pointing left, a positive pitch tilts the x
 * axis downward.
 */

namespace blindspot {

using Vec3 = Eigen::Vector3d;
using Vec2 = Eigen::Vector2d;
using Mat3 = Eigen::Matrix3d;

constexpr double deg2rad(double deg) { return deg * (std::numbers::pi / 180.0); }
constexpr double rad2deg(double rad) { return rad * (180.0 / std::numbers::pi); }

inline bool is_finite(const Vec3& v) {
  return std::isfinite(v.x()) && std::isfinite(v.y()) && std::isfinite(v.z());
}

/// Intrinsic Z-Y'-X'' rotation, angles in radians.
inline Mat3 rotation_from_ypr(double yaw, double pitch, double roll) {
  return (Eigen::AngleAxisd(yaw, Vec3::UnitZ()) *
          Eigen::AngleAxisd(pitch, Vec3::UnitY()) *
          Eigen::AngleAxisd(roll, Vec3::UnitX()))
      .toRotationMatrix();
}

/// Proper rigid motion p -> R p + t.
class RigidTransform {
 public:
  static constexpr double kOrthonormalTolerance = 1e-9;

  RigidTransform() : rotation_(Mat3::Identity()), translation_(Vec3::Zero()) {}

  /// Throws ContractError unless `rotation` is orthonormal with det +1.
  RigidTransform(const Mat3& rotation, const Vec3& translation)
      : rotation_(rotation), translation_(translation) {
    const double ortho = (rotation.transpose() * rotation - Mat3::Identity())
                             .cwiseAbs()
                             .maxCoeff();
    if (!(ortho <= kOrthonormalTolerance) ||
        !(std::abs(rotation.determinant() - 1.0) <= kOrthonormalTolerance)) {
      throw ContractError("RigidTransform: rotation is not a proper rotation");
    }
    if (!is_finite(translation)) {
      throw ContractError("RigidTransform: non-finite translation");
    }
  }

  static RigidTransform identity() { return {}; }

  static RigidTransform translation(const Vec3& t) {
    return {Mat3::Identity(), t};
  }

  /// Angles in degrees.
  static RigidTransform from_ypr_deg(const Vec3& t, double yaw, double pitch,
                                     double roll) {
    return {rotation_from_ypr(deg2rad(yaw), deg2rad(pitch), deg2rad(roll)), t};
  }

  const Mat3& rotation() const { return rotation_; }
  const Vec3& translation() const { return translation_; }

  Vec3 apply(const Vec3& p) const { return rotation_ * p + translation_; }
  Vec3 apply_direction(const Vec3& d) const { return rotation_ * d; }

  RigidTransform inverse() const {
    RigidTransform inv;
    inv.rotation_ = rotation_.transpose();
    inv.translation_ = -(inv.rotation_ * translation_);
    return inv;
  }

  Eigen::Matrix4d matrix() const {
    Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
    m.topLeftCorner<3, 3>() = rotation_;
    m.topRightCorner<3, 1>() = translation_;
    return m;
  }

  friend RigidTransform compose(const RigidTransform& a, const RigidTransform& b);

 private:
  Mat3 rotation_;
  Vec3 translation_;
};

/// Applying the result equals applying `b`, then `a`.
inline RigidTransform compose(const RigidTransform& a, const RigidTransform& b) {
  RigidTransform out;
  out.rotation_ = a.rotation_ * b.rotation_;
  out.translation_ = a.rotation_ * b.translation_ + a.translation_;
  return out;
}

struct Frame {
  enum class Kind : std::uint8_t { Sensor, Vehicle, World };

  Kind kind = Kind::Vehicle;
  std::uint32_t sensor_id = 0;  // only meaningful for Kind::Sensor

  static Frame sensor(std::uint32_t id) { return {Kind::Sensor, id}; }
  static Frame vehicle() { return {Kind::Vehicle, 0}; }
  static Frame world() { return {Kind::World, 0}; }

  friend bool operator==(const Frame& a, const Frame& b) {
    return a.kind == b.kind &&
           (a.kind != Kind::Sensor || a.sensor_id == b.sensor_id);
  }

  std::string to_string() const {
    switch (kind) {
      case Kind::Sensor: return "sensor(" + std::to_string(sensor_id) + ")";
      case Kind::Vehicle: return "vehicle";
      case Kind::World: return "world";
    }
    return "?";
  }
};

/// A RigidTransform annotated with the frames it maps between.
struct FrameTransform {
  RigidTransform pose;
  Frame source;
  Frame target;
};

struct PointCloud {
  std::vector<Vec3> points;
  Frame frame = Frame::vehicle();
  std::int64_t timestep = 0;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }

  /// Throws ContractError on NaN or infinite coordinates.
  void validate() const {
    for (std::size_t i = 0; i < points.size(); ++i) {
      if (!is_finite(points[i])) {
        throw ContractError("PointCloud: non-finite point at index " +
                            std::to_string(i));
      }
    }
  }
};

struct Aabb {
  Vec3 min = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 max = Vec3::Constant(-std::numeric_limits<double>::infinity());

  static Aabb from_corners(const Vec3& lo, const Vec3& hi) {
    if ((lo.array() > hi.array()).any()) {
      throw ContractError("Aabb: min must be <= max componentwise");
    }
    return {lo, hi};
  }

  bool valid() const { return (min.array() <= max.array()).all(); }

  void extend(const Vec3& p) {
    min = min.cwiseMin(p);
    max = max.cwiseMax(p);
  }
  void extend(const Aabb& b) {
    min = min.cwiseMin(b.min);
    max = max.cwiseMax(b.max);
  }

  Vec3 extent() const { return max - min; }
  Vec3 center() const { return 0.5 * (min + max); }
  double volume() const {
    return valid() ? extent().prod() : 0.0;
  }

  bool contains(const Vec3& p) const {
    return (p.array() >= min.array()).all() && (p.array() <= max.array()).all();
  }
  bool contains(const Aabb& b) const { return contains(b.min) && contains(b.max); }

  /// Interior test, excluding the boundary.
  bool strictly_contains(const Vec3& p) const {
    return (p.array() > min.array()).all() && (p.array() < max.array()).all();
  }
};

/// Maps every point through p -> R p + t and retags the cloud.
inline PointCloud transform_cloud(const PointCloud& cloud,
                                  const FrameTransform& transform) {
  if (!(cloud.frame == transform.source)) {
    throw ContractError("transform_cloud: cloud is in frame " +
                        cloud.frame.to_string() + ", transform expects " +
                        transform.source.to_string());
  }
  PointCloud out;
  out.frame = transform.target;
  out.timestep = cloud.timestep;
  out.points.reserve(cloud.points.size());
  for (const Vec3& p : cloud.points) out.points.push_back(transform.pose.apply(p));
  return out;
}

}  // namespace blindspot

#endif  // BLINDSPOT_CORE_HPP
