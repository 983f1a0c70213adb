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

#ifndef BLINDSPOT_MESH_HPP
#define BLINDSPOT_MESH_HPP

#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "blindspot/core.hpp"

namespace blindspot {

struct TriangleMesh {
  static constexpr double kMinTriangleArea = 1e-12;  // m^2

  std::vector<Vec3> vertices;
  std::vector<std::array<std::uint32_t, 3>> triangles;

  std::size_t triangle_count() const { return triangles.size(); }

  double triangle_area(std::size_t i) const {
    const auto& t = triangles[i];
    return 0.5 * (vertices[t[1]] - vertices[t[0]])
                     .cross(vertices[t[2]] - vertices[t[0]])
                     .norm();
  }

  Aabb bounds() const {
    Aabb box;
    for (const Vec3& v : vertices) box.extend(v);
    return box;
  }

  /// Throws ContractError on out-of-range indices, non-finite vertices or
  /// degenerate triangles.
  void validate() const {
    for (std::size_t i = 0; i < vertices.size(); ++i) {
      if (!is_finite(vertices[i])) {
        throw ContractError("TriangleMesh: non-finite vertex " + std::to_string(i));
      }
    }
    for (std::size_t i = 0; i < triangles.size(); ++i) {
      for (std::uint32_t idx : triangles[i]) {
        if (idx >= vertices.size()) {
          throw ContractError("TriangleMesh: triangle " + std::to_string(i) +
                              " references missing vertex " + std::to_string(idx));
        }
      }
      if (!(triangle_area(i) >= kMinTriangleArea)) {
        throw ContractError("TriangleMesh: degenerate triangle " + std::to_string(i));
      }
    }
  }

  /// Appends `other`, re-basing its indices.
  void append(const TriangleMesh& other) {
    const auto base = static_cast<std::uint32_t>(vertices.size());
    vertices.insert(vertices.end(), other.vertices.begin(), other.vertices.end());
    for (const auto& t : other.triangles) {
      triangles.push_back({t[0] + base, t[1] + base, t[2] + base});
    }
  }
};

/// Axis-aligned box with the given edge lengths, centered at `center`.
inline TriangleMesh make_box(const Vec3& size, const Vec3& center = Vec3::Zero()) {
  if (!(size.array() > 0.0).all()) {
    throw ContractError("make_box: all edge lengths must be positive");
  }
  const Vec3 h = 0.5 * size;
  TriangleMesh mesh;
  for (int i = 0; i < 8; ++i) {
    mesh.vertices.emplace_back(center.x() + ((i & 1) ? h.x() : -h.x()),
                               center.y() + ((i & 2) ? h.y() : -h.y()),
                               center.z() + ((i & 4) ? h.z() : -h.z()));
  }
  // Outward-facing winding.
  mesh.triangles = {{0, 2, 1}, {1, 2, 3},   // -z
                    {4, 5, 6}, {5, 7, 6},   // +z
                    {0, 1, 4}, {1, 5, 4},   // -y
                    {2, 6, 3}, {3, 6, 7},   // +y
                    {0, 4, 2}, {2, 4, 6},   // -x
                    {1, 3, 5}, {3, 7, 5}};  // +x
  return mesh;
}

/// Square [-extent, extent]^2 at z = 0, two triangles.
inline TriangleMesh ground_plane(double extent) {
  if (!(extent > 0.0) || !std::isfinite(extent)) {
    throw ContractError("ground_plane: extent must be positive");
  }
  TriangleMesh mesh;
  mesh.vertices = {{-extent, -extent, 0.0},
                   {extent, -extent, 0.0},
                   {extent, extent, 0.0},
                   {-extent, extent, 0.0}};
  mesh.triangles = {{0, 1, 2}, {0, 2, 3}};
  return mesh;
}

/// Dimensions of the built-in ego body: a 4.5 x 1.9 x 0.8 m lower body and a
/// 2.4 x 1.7 x 0.7 m cabin set toward the rear. The cabin front edge marks the
/// top of the windscreen.
struct HatchbackDimensions {
  static constexpr double kLength = 4.5;
  static constexpr double kWidth = 1.9;
  static constexpr double kGroundClearance = 0.2;
  static constexpr double kBodyHeight = 0.8;
  static constexpr double kCabinLength = 2.4;
  static constexpr double kCabinWidth = 1.7;
  static constexpr double kCabinHeight = 0.7;
  static constexpr double kCabinFront = 0.3;  // x of the cabin's front face

  static constexpr double hood_height() { return kGroundClearance + kBodyHeight; }
  static constexpr double roof_height() { return hood_height() + kCabinHeight; }
};

/// Ego vehicle mesh in the vehicle frame: bounding-box center projected onto
/// the ground is the origin, x forward.
inline TriangleMesh hatchback() {
  using D = HatchbackDimensions;
  TriangleMesh mesh = make_box({D::kLength, D::kWidth, D::kBodyHeight},
                               {0.0, 0.0, D::kGroundClearance + 0.5 * D::kBodyHeight});
  mesh.append(make_box({D::kCabinLength, D::kCabinWidth, D::kCabinHeight},
                       {D::kCabinFront - 0.5 * D::kCabinLength, 0.0,
                        D::hood_height() + 0.5 * D::kCabinHeight}));
  return mesh;
}

namespace detail {

inline long parse_obj_index(const std::string& token, std::size_t vertex_count,
                            std::size_t line) {
  const std::string head = token.substr(0, token.find('/'));
  long idx = 0;
  try {
    std::size_t used = 0;
    idx = std::stol(head, &used);
    if (used != head.size()) throw std::invalid_argument(head);
  } catch (const std::exception&) {
    throw ParseError("obj: bad face index '" + token + "' at line " +
                         std::to_string(line),
                     line);
  }
  if (idx < 0) idx += static_cast<long>(vertex_count) + 1;
  if (idx < 1 || idx > static_cast<long>(vertex_count)) {
    throw ParseError("obj: face index out of range at line " + std::to_string(line),
                     line);
  }
  return idx - 1;
}

}  // namespace detail

/// Reads the v/f subset of Wavefront OBJ. Polygons are fan-triangulated;
/// every other statement is ignored.
inline TriangleMesh parse_obj(std::istream& in) {
  TriangleMesh mesh;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag) || tag[0] == '#') continue;
    if (tag == "v") {
      Vec3 v;
      if (!(ls >> v.x() >> v.y() >> v.z()) || !is_finite(v)) {
        throw ParseError("obj: malformed vertex at line " + std::to_string(line_no),
                         line_no);
      }
      mesh.vertices.push_back(v);
    } else if (tag == "f") {
      std::vector<std::uint32_t> face;
      std::string tok;
      while (ls >> tok) {
        face.push_back(static_cast<std::uint32_t>(
            detail::parse_obj_index(tok, mesh.vertices.size(), line_no)));
      }
      if (face.size() < 3) {
        throw ParseError("obj: face with fewer than 3 vertices at line " +
                             std::to_string(line_no),
                         line_no);
      }
      for (std::size_t k = 1; k + 1 < face.size(); ++k) {
        mesh.triangles.push_back({face[0], face[k], face[k + 1]});
        if (mesh.triangle_area(mesh.triangles.size() - 1) <
            TriangleMesh::kMinTriangleArea) {
          throw ParseError("obj: degenerate face at line " + std::to_string(line_no),
                           line_no);
        }
      }
    }
  }
  return mesh;
}

inline TriangleMesh load_obj(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open mesh file " + path.string());
  return parse_obj(in);
}

}  // namespace blindspot

#endif  // BLINDSPOT_MESH_HPP
