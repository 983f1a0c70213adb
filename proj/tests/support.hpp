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

// Shared helpers and independent oracles for the test suite.

#ifndef BLINDSPOT_TESTS_SUPPORT_HPP
#define BLINDSPOT_TESTS_SUPPORT_HPP

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "blindspot/core.hpp"
#include "blindspot/scene.hpp"

namespace blindspot::testing {

inline Vec3 random_vec(std::mt19937_64& rng, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  return {u(rng), u(rng), u(rng)};
}

inline Vec3 random_unit(std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  Vec3 v(n(rng), n(rng), n(rng));
  return v.normalized();
}

inline RigidTransform random_transform(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> ang(-180.0, 180.0);
  return RigidTransform::from_ypr_deg(random_vec(rng, -50.0, 50.0), ang(rng), ang(rng) / 2.0,
                                      ang(rng));
}

/// Applies T through an explicit 4x4 homogeneous product.
inline Vec3 homogeneous_apply(const Eigen::Matrix4d& m, const Vec3& p) {
  const Eigen::Vector4d h = m * Eigen::Vector4d(p.x(), p.y(), p.z(), 1.0);
  return h.head<3>() / h[3];
}

/// Textbook Moller-Trumbore intersection, double-sided. Returns t or nullopt.
inline std::optional<double> moller_trumbore(const Vec3& o, const Vec3& d,
                                             const std::array<Vec3, 3>& tri) {
  const Vec3 e1 = tri[1] - tri[0];
  const Vec3 e2 = tri[2] - tri[0];
  const Vec3 p = d.cross(e2);
  const double det = e1.dot(p);
  if (std::abs(det) < 1e-14) return std::nullopt;
  const double inv = 1.0 / det;
  const Vec3 s = o - tri[0];
  const double u = s.dot(p) * inv;
  if (u < 0.0 || u > 1.0) return std::nullopt;
  const Vec3 q = s.cross(e1);
  const double v = d.dot(q) * inv;
  if (v < 0.0 || u + v > 1.0) return std::nullopt;
  return e2.dot(q) * inv;
}

struct BruteHit {
  double t = std::numeric_limits<double>::infinity();
  std::uint32_t triangle = 0;
};

/// Loops over every triangle; accepts t in (eps, max_range].
inline std::optional<BruteHit> brute_force_cast(const WorldSnapshot& world, const Ray& ray) {
  std::optional<BruteHit> best;
  const auto tris = world.triangles();
  for (std::uint32_t i = 0; i < tris.size(); ++i) {
    const auto t = moller_trumbore(ray.origin, ray.direction, tris[i].v);
    if (!t || !(*t > kRayEpsilon) || *t > ray.max_range) continue;
    if (!best || *t < best->t) best = BruteHit{*t, i};
  }
  return best;
}

/// Distance from p to a triangle (closest-point, Ericson's region test).
inline double point_triangle_distance(const Vec3& p, const std::array<Vec3, 3>& tri) {
  const Vec3 &a = tri[0], &b = tri[1], &c = tri[2];
  const Vec3 ab = b - a, ac = c - a, ap = p - a;
  const double d1 = ab.dot(ap), d2 = ac.dot(ap);
  if (d1 <= 0 && d2 <= 0) return (p - a).norm();
  const Vec3 bp = p - b;
  const double d3 = ab.dot(bp), d4 = ac.dot(bp);
  if (d3 >= 0 && d4 <= d3) return (p - b).norm();
  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0 && d1 >= 0 && d3 <= 0) return (p - (a + d1 / (d1 - d3) * ab)).norm();
  const Vec3 cp = p - c;
  const double d5 = ab.dot(cp), d6 = ac.dot(cp);
  if (d6 >= 0 && d5 <= d6) return (p - c).norm();
  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0 && d2 >= 0 && d6 <= 0) return (p - (a + d2 / (d2 - d6) * ac)).norm();
  const double va = d3 * d6 - d5 * d4;
  if (va <= 0 && (d4 - d3) >= 0 && (d5 - d6) >= 0) {
    return (p - (b + (d4 - d3) / ((d4 - d3) + (d5 - d6)) * (c - b))).norm();
  }
  const double denom = 1.0 / (va + vb + vc);
  return (p - (a + ab * (vb * denom) + ac * (vc * denom))).norm();
}

/// Smallest distance from p to any triangle accepted by `keep`.
template <typename Keep>
double distance_to_world(const WorldSnapshot& world, const Vec3& p, Keep keep) {
  double best = std::numeric_limits<double>::infinity();
  for (const WorldTriangle& t : world.triangles()) {
    if (keep(t)) best = std::min(best, point_triangle_distance(p, t.v));
  }
  return best;
}

/// Fresh directory below the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "test") {
    static std::uint64_t counter = 0;
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("blindspot_" + tag + "_" + std::to_string(rd()) + "_" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace blindspot::testing

#endif  // BLINDSPOT_TESTS_SUPPORT_HPP
