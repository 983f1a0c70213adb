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

#ifndef BLINDSPOT_SCENE_HPP
#define BLINDSPOT_SCENE_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "blindspot/core.hpp"
#include "blindspot/mesh.hpp"

namespace blindspot {

using ActorId = std::uint32_t;

/// Pose with angles in degrees, the form used at external interfaces.
struct PoseDeg {
  Vec3 position = Vec3::Zero();
  double yaw = 0.0;
  double pitch = 0.0;
  double roll = 0.0;

  RigidTransform to_transform() const {
    return RigidTransform::from_ypr_deg(position, yaw, pitch, roll);
  }

  friend bool operator==(const PoseDeg&, const PoseDeg&) = default;
};

/// Per-timestep pose of an actor (local -> world, or local -> ego when the
/// actor is attached to the ego).
///
/// Parametric motion:  position(t) = base + velocity * t
///                                   + amplitude * sin(2 pi t / period + phase)
///                     yaw(t)      = base.yaw + yaw_rate * t
/// Keyframes: piecewise-linear in position and angles; undefined outside the
/// first and last keyframe.
struct Trajectory {
  struct Keyframe {
    std::int64_t t = 0;
    PoseDeg pose;
    friend bool operator==(const Keyframe&, const Keyframe&) = default;
  };

  PoseDeg base;
  Vec3 velocity = Vec3::Zero();       // m per timestep
  double yaw_rate = 0.0;              // deg per timestep
  Vec3 amplitude = Vec3::Zero();      // m
  double period = 0.0;                // timesteps; 0 disables oscillation
  double phase = 0.0;                 // deg
  std::vector<Keyframe> keyframes;    // non-empty switches to keyframe mode

  static Trajectory fixed(const PoseDeg& pose) {
    Trajectory tr;
    tr.base = pose;
    return tr;
  }

  bool defined_at(std::int64_t t) const {
    if (keyframes.empty()) return true;
    return t >= keyframes.front().t && t <= keyframes.back().t;
  }

  PoseDeg pose_deg_at(std::int64_t t) const {
    if (!keyframes.empty()) {
      if (!defined_at(t)) {
        throw ScenarioError("trajectory has no entry for timestep " + std::to_string(t));
      }
      auto hi = std::lower_bound(keyframes.begin(), keyframes.end(), t,
                                 [](const Keyframe& k, std::int64_t v) { return k.t < v; });
      if (hi->t == t || hi == keyframes.begin()) return hi->pose;
      auto lo = std::prev(hi);
      const double a = static_cast<double>(t - lo->t) / static_cast<double>(hi->t - lo->t);
      PoseDeg p;
      p.position = (1.0 - a) * lo->pose.position + a * hi->pose.position;
      p.yaw = (1.0 - a) * lo->pose.yaw + a * hi->pose.yaw;
      p.pitch = (1.0 - a) * lo->pose.pitch + a * hi->pose.pitch;
      p.roll = (1.0 - a) * lo->pose.roll + a * hi->pose.roll;
      return p;
    }
    const double td = static_cast<double>(t);
    PoseDeg p = base;
    p.position += velocity * td;
    if (period > 0.0) {
      p.position += amplitude * std::sin(2.0 * std::numbers::pi * td / period + deg2rad(phase));
    }
    p.yaw += yaw_rate * td;
    return p;
  }

  RigidTransform at(std::int64_t t) const { return pose_deg_at(t).to_transform(); }

  friend bool operator==(const Trajectory&, const Trajectory&) = default;
};

struct Actor {
  ActorId id = 0;
  std::shared_ptr<const TriangleMesh> mesh;
  Trajectory trajectory;
  bool is_ego = false;
  /// Trajectory is expressed in the ego's vehicle frame rather than the world.
  bool relative_to_ego = false;
};

struct Ray {
  Vec3 origin;
  Vec3 direction;  // unit length
  double max_range = std::numeric_limits<double>::infinity();
};

struct Hit {
  Vec3 point;
  double distance = 0.0;
  ActorId actor_id = 0;
  std::uint32_t triangle = 0;  // index into WorldSnapshot::triangles
};

/// Minimum accepted hit distance; suppresses self-hits at the ray origin.
inline constexpr double kRayEpsilon = 1e-6;

struct WorldTriangle {
  std::array<Vec3, 3> v;
  ActorId actor = 0;
};

/// Immutable world state for one timestep: triangles in world coordinates and
/// a bounding volume hierarchy over them. Safe to query from many threads.
class WorldSnapshot {
 public:
  struct Node {
    Aabb bounds;
    std::uint32_t first = 0;  // first child (inner) or first primitive (leaf)
    std::uint32_t count = 0;  // primitive count; 0 for inner nodes
    bool is_leaf() const { return count > 0; }
  };

  static constexpr std::uint32_t kMaxLeafSize = 4;

  WorldSnapshot() = default;

  explicit WorldSnapshot(std::vector<WorldTriangle> triangles,
                         std::optional<ActorId> ego = std::nullopt,
                         RigidTransform ego_pose = {})
      : triangles_(std::move(triangles)), ego_(ego), ego_pose_(ego_pose) {
    build_bvh();
  }

  std::span<const WorldTriangle> triangles() const { return triangles_; }
  std::span<const Node> nodes() const { return nodes_; }
  /// Permutation of triangle indices in leaf order.
  std::span<const std::uint32_t> primitive_order() const { return order_; }
  std::optional<ActorId> ego_actor() const { return ego_; }
  /// Ego vehicle -> world at this snapshot's timestep.
  const RigidTransform& ego_pose() const { return ego_pose_; }
  bool empty() const { return triangles_.empty(); }

  std::optional<Hit> cast(const Ray& ray) const;

 private:
  struct BuildItem {
    Aabb box;
    Vec3 centroid;
  };

  void build_bvh();
  void build_nodes(const std::vector<BuildItem>& items);

  std::vector<WorldTriangle> triangles_;
  std::vector<Node> nodes_;
  std::vector<std::uint32_t> order_;
  std::optional<ActorId> ego_;
  RigidTransform ego_pose_;
};

namespace detail {

/// Watertight ray/triangle test. Returns the ray parameter of the hit or
/// +inf on a miss. Double-sided.
inline double intersect_watertight(const Vec3& org, int kx, int ky, int kz, double sx, double sy, double sz,
                                   const std::array<Vec3, 3>& tri) {
  const Vec3 a = tri[0] - org;
  const Vec3 b = tri[1] - org;
  const Vec3 c = tri[2] - org;
  const double ax = a[kx] - sx * a[kz];
  const double ay = a[ky] - sy * a[kz];
  const double bx = b[kx] - sx * b[kz];
  const double by = b[ky] - sy * b[kz];
  const double cx = c[kx] - sx * c[kz];
  const double cy = c[ky] - sy * c[kz];
  double u = cx * by - cy * bx;
  double v = ax * cy - ay * cx;
  double w = bx * ay - by * ax;
  if (u == 0.0 || v == 0.0 || w == 0.0) {
    // Edge case: redo the 2D cross products in extended precision.
    using L = long double;
    u = static_cast<double>(L(cx) * L(by) - L(cy) * L(bx));
    v = static_cast<double>(L(ax) * L(cy) - L(ay) * L(cx));
    w = static_cast<double>(L(bx) * L(ay) - L(by) * L(ax));
  }
  constexpr double kMiss = std::numeric_limits<double>::infinity();
  if ((u < 0.0 || v < 0.0 || w < 0.0) && (u > 0.0 || v > 0.0 || w > 0.0)) return kMiss;
  const double det = u + v + w;
  if (det == 0.0) return kMiss;
  const double az = sz * a[kz];
  const double bz = sz * b[kz];
  const double cz = sz * c[kz];
  const double t = (u * az + v * bz + w * cz) / det;
  return t;
}

struct RayPrecompute {
  int kx, ky, kz;
  double sx, sy, sz;
  Vec3 inv;

  explicit RayPrecompute(const Vec3& dir) {
    kz = 0;
    if (std::abs(dir.y()) > std::abs(dir[kz])) kz = 1;
    if (std::abs(dir.z()) > std::abs(dir[kz])) kz = 2;
    kx = (kz + 1) % 3;
    ky = (kx + 1) % 3;
    if (dir[kz] < 0.0) std::swap(kx, ky);
    sx = dir[kx] / dir[kz];
    sy = dir[ky] / dir[kz];
    sz = 1.0 / dir[kz];
    for (int i = 0; i < 3; ++i) {
      const double d = dir[i] == 0.0 ? 1e-300 : dir[i];
      inv[i] = 1.0 / d;
    }
  }
};

/// Conservative slab test; returns the entry parameter or +inf.
inline double ray_box_entry(const Vec3& org, const Vec3& inv, const Aabb& box,
                            double t_max) {
  double t0 = 0.0;
  double t1 = t_max;
  for (int i = 0; i < 3; ++i) {
    double tn = (box.min[i] - org[i]) * inv[i];
    double tf = (box.max[i] - org[i]) * inv[i];
    if (tn > tf) std::swap(tn, tf);
    tf *= 1.0 + 4.0 * std::numeric_limits<double>::epsilon();
    t0 = tn > t0 ? tn : t0;
    t1 = tf < t1 ? tf : t1;
    if (t0 > t1) return std::numeric_limits<double>::infinity();
  }
  return t0;
}

}  // namespace detail

inline void WorldSnapshot::build_bvh() {
  nodes_.clear();
  order_.resize(triangles_.size());
  std::iota(order_.begin(), order_.end(), 0u);
  if (triangles_.empty()) return;
  std::vector<BuildItem> items(triangles_.size());
  for (std::size_t i = 0; i < triangles_.size(); ++i) {
    Aabb box;
    for (const Vec3& p : triangles_[i].v) box.extend(p);
    items[i] = {box, box.center()};
  }
  nodes_.reserve(2 * triangles_.size());
  nodes_.emplace_back();
  build_nodes(items);
}

// Binned SAH split. Node 0 is the root; children of an inner node are stored
// adjacently at `first` and `first + 1`.
inline void WorldSnapshot::build_nodes(const std::vector<BuildItem>& items) {
  struct Task {
    std::uint32_t node, begin, end;
  };
  std::vector<Task> stack{{0, 0, static_cast<std::uint32_t>(items.size())}};
  constexpr int kBins = 16;

  auto surface = [](const Aabb& b) {
    if (!b.valid()) return 0.0;
    const Vec3 e = b.extent();
    return 2.0 * (e.x() * e.y() + e.y() * e.z() + e.z() * e.x());
  };

  while (!stack.empty()) {
    const Task task = stack.back();
    stack.pop_back();
    Aabb bounds, centroid_bounds;
    for (std::uint32_t i = task.begin; i < task.end; ++i) {
      bounds.extend(items[order_[i]].box);
      centroid_bounds.extend(items[order_[i]].centroid);
    }
    nodes_[task.node].bounds = bounds;
    const std::uint32_t n = task.end - task.begin;
    if (n <= kMaxLeafSize) {
      nodes_[task.node].first = task.begin;
      nodes_[task.node].count = n;
      continue;
    }

    int best_axis = -1;
    int best_split = 0;
    double best_cost = std::numeric_limits<double>::infinity();
    const Vec3 cext = centroid_bounds.extent();
    for (int axis = 0; axis < 3; ++axis) {
      if (!(cext[axis] > 0.0)) continue;
      std::array<Aabb, kBins> bin_box{};
      std::array<std::uint32_t, kBins> bin_count{};
      const double scale = kBins / cext[axis];
      for (std::uint32_t i = task.begin; i < task.end; ++i) {
        const BuildItem& it = items[order_[i]];
        int b = static_cast<int>((it.centroid[axis] - centroid_bounds.min[axis]) * scale);
        b = std::clamp(b, 0, kBins - 1);
        bin_box[b].extend(it.box);
        ++bin_count[b];
      }
      std::array<double, kBins> left_cost{};
      Aabb acc;
      std::uint32_t cnt = 0;
      for (int b = 0; b < kBins - 1; ++b) {
        acc.extend(bin_box[b]);
        cnt += bin_count[b];
        left_cost[b] = cnt ? surface(acc) * cnt : 0.0;
      }
      acc = Aabb{};
      cnt = 0;
      for (int b = kBins - 1; b > 0; --b) {
        acc.extend(bin_box[b]);
        cnt += bin_count[b];
        const double cost = left_cost[b - 1] + (cnt ? surface(acc) * cnt : 0.0);
        if (cost < best_cost) {
          best_cost = cost;
          best_axis = axis;
          best_split = b;
        }
      }
    }

    auto first = order_.begin() + task.begin;
    auto last = order_.begin() + task.end;
    auto mid = first;
    if (best_axis >= 0) {
      const double scale = kBins / cext[best_axis];
      const double lo = centroid_bounds.min[best_axis];
      mid = std::partition(first, last, [&](std::uint32_t idx) {
        int b = static_cast<int>((items[idx].centroid[best_axis] - lo) * scale);
        return std::clamp(b, 0, kBins - 1) < best_split;
      });
    }
    if (mid == first || mid == last) {
      // All centroids coincide or binning failed: split by count.
      mid = first + n / 2;
    }
    const auto split = static_cast<std::uint32_t>(mid - order_.begin());
    const auto left = static_cast<std::uint32_t>(nodes_.size());
    nodes_.emplace_back();
    nodes_.emplace_back();
    nodes_[task.node].first = left;
    nodes_[task.node].count = 0;
    stack.push_back({left + 1, split, task.end});
    stack.push_back({left, task.begin, split});
  }
}

inline std::optional<Hit> WorldSnapshot::cast(const Ray& ray) const {
  if (nodes_.empty()) return std::nullopt;
  const detail::RayPrecompute pre(ray.direction);
  double best_t = ray.max_range;
  std::uint32_t best_tri = std::numeric_limits<std::uint32_t>::max();

  std::array<std::uint32_t, 128> stack;
  int top = 0;
  if (detail::ray_box_entry(ray.origin, pre.inv, nodes_[0].bounds, best_t) ==
      std::numeric_limits<double>::infinity()) {
    return std::nullopt;
  }
  stack[top++] = 0;
  while (top > 0) {
    const Node& node = nodes_[stack[--top]];
    if (node.is_leaf()) {
      for (std::uint32_t i = node.first; i < node.first + node.count; ++i) {
        const std::uint32_t tri = order_[i];
        const double t =
            detail::intersect_watertight(ray.origin, pre.kx, pre.ky, pre.kz,
                                         pre.sx, pre.sy, pre.sz, triangles_[tri].v);
        if (t > kRayEpsilon && (t < best_t || (t == best_t && tri < best_tri))) {
          best_t = t;
          best_tri = tri;
        }
      }
      continue;
    }
    const std::uint32_t l = node.first;
    const std::uint32_t r = node.first + 1;
    const double tl = detail::ray_box_entry(ray.origin, pre.inv, nodes_[l].bounds, best_t);
    const double tr = detail::ray_box_entry(ray.origin, pre.inv, nodes_[r].bounds, best_t);
    constexpr double kInf = std::numeric_limits<double>::infinity();
    // Push the farther child first so the nearer one is visited next.
    if (tl <= tr) {
      if (tr != kInf) stack[top++] = r;
      if (tl != kInf) stack[top++] = l;
    } else {
      if (tl != kInf) stack[top++] = l;
      if (tr != kInf) stack[top++] = r;
    }
  }
  if (best_tri == std::numeric_limits<std::uint32_t>::max()) return std::nullopt;
  return Hit{ray.origin + best_t * ray.direction, best_t, triangles_[best_tri].actor,
             best_tri};
}

/// Nearest intersection with distance in (kRayEpsilon, max_range], if any.
inline std::optional<Hit> cast_ray(const WorldSnapshot& world, const Ray& ray) {
  return world.cast(ray);
}

/// Poses every actor at timestep `t` and builds the snapshot. Actors attached
/// to the ego are placed relative to the ego's pose.
inline WorldSnapshot build_world(std::span<const Actor> actors, std::int64_t t) {
  std::optional<ActorId> ego;
  RigidTransform ego_pose;
  for (const Actor& a : actors) {
    if (!a.is_ego) continue;
    if (ego) throw ScenarioError("more than one ego actor");
    ego = a.id;
    if (!a.trajectory.defined_at(t)) {
      throw ScenarioError("ego actor " + std::to_string(a.id) +
                          " has no trajectory entry for timestep " + std::to_string(t));
    }
    ego_pose = a.trajectory.at(t);
  }

  std::vector<WorldTriangle> tris;
  for (const Actor& a : actors) {
    if (!a.mesh) continue;
    if (!a.trajectory.defined_at(t)) {
      throw ScenarioError("actor " + std::to_string(a.id) +
                          " has no trajectory entry for timestep " + std::to_string(t));
    }
    RigidTransform pose = a.trajectory.at(t);
    if (a.relative_to_ego) {
      if (!ego) throw ScenarioError("actor attached to ego but no ego exists");
      pose = compose(ego_pose, pose);
    }
    for (const auto& tri : a.mesh->triangles) {
      tris.push_back({{pose.apply(a.mesh->vertices[tri[0]]),
                       pose.apply(a.mesh->vertices[tri[1]]),
                       pose.apply(a.mesh->vertices[tri[2]])},
                      a.id});
    }
  }
  return WorldSnapshot(std::move(tris), ego, ego_pose);
}

}  // namespace blindspot

#endif  // BLINDSPOT_SCENE_HPP
