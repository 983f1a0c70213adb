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

#ifndef BLINDSPOT_IO_CONFIG_HPP
#define BLINDSPOT_IO_CONFIG_HPP

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "blindspot/core.hpp"
#include "blindspot/coverage.hpp"
#include "blindspot/mesh.hpp"
#include "blindspot/reference.hpp"
#include "blindspot/scene.hpp"
#include "blindspot/sensors.hpp"

namespace blindspot::io {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Data model
// ---------------------------------------------------------------------------

struct MeshSource {
  enum class Kind { Box, Ground, Hatchback, Obj };
  Kind kind = Kind::Box;
  Vec3 size = Vec3::Ones();
  Vec3 center = Vec3::Zero();
  double extent = 1000.0;
  std::string path;  // Obj only; relative paths resolve against the config file
};

struct ActorConfig {
  ActorId id = 0;
  std::string name;
  MeshSource mesh;
  Trajectory trajectory;
  bool ego = false;
  bool attached_to_ego = false;
};

/// Externally recorded clouds, one file per timestep. `path` may contain
/// "{t}" or "{t:N}" (zero-padded to N digits).
struct CloudFiles {
  std::string path;
  Frame::Kind frame = Frame::Kind::Vehicle;  // Vehicle or World
};

struct SensorConfig {
  enum class Type { Lidar, Camera, Clouds };
  Type type = Type::Lidar;
  std::string name;
  PoseDeg mount;      // lidar: sensor axes; camera: optical axis (yaw 0 = +x)
  LidarSpec lidar;    // mount filled from `mount`
  CameraSpec camera;  // mount filled from `mount`
  CloudFiles clouds;
};

struct RigConfig {
  std::string name;
  std::vector<SensorConfig> sensors;
};

struct ReferenceConfig {
  bool enabled = true;
  ReferenceSamplerConfig sampler;  // seed comes from ScenarioConfig::seed
  std::optional<CloudFiles> clouds;
};

struct RasterStyle {
  double radius_max = 5.0;  // m; radius maps use [0, radius_max]
};

struct ScenarioConfig {
  std::string name = "scenario";
  std::int64_t timesteps = 4096;
  std::uint64_t seed = 0;
  double r_thresh = 0.4;
  Aggregation aggregation = Aggregation::Nested;
  std::vector<ActorConfig> actors;
  ReferenceConfig reference;
  std::vector<RigConfig> rigs;
  std::vector<GridDefinition> grids = standard_grids();
  std::vector<RoiRect> rois = standard_rois();
  RasterStyle raster;
  std::vector<std::string> notes;
  /// Directory that relative file paths resolve against. Not serialized.
  std::filesystem::path base_dir;

  std::filesystem::path resolve(const std::string& p) const {
    const std::filesystem::path path(p);
    return path.is_absolute() || base_dir.empty() ? path : base_dir / path;
  }
};

inline std::string to_string(Aggregation a) {
  switch (a) {
    case Aggregation::Nested: return "mean";
    case Aggregation::Pooled: return "pooled_mean";
    case Aggregation::Max: return "max";
  }
  return "?";
}

/// Substitutes "{t}" / "{t:N}" in a per-timestep path pattern.
inline std::string expand_timestep(const std::string& pattern, std::int64_t t) {
  std::string out;
  std::size_t i = 0;
  while (i < pattern.size()) {
    if (pattern.compare(i, 2, "{t") == 0) {
      const std::size_t close = pattern.find('}', i);
      if (close != std::string::npos) {
        const std::string spec = pattern.substr(i + 2, close - i - 2);
        int width = 0;
        if (!spec.empty() && spec[0] == ':') width = std::stoi(spec.substr(1));
        char buf[32];
        std::snprintf(buf, sizeof buf, "%0*lld", width, static_cast<long long>(t));
        out += buf;
        i = close + 1;
        continue;
      }
    }
    out += pattern[i++];
  }
  return out;
}

// ---------------------------------------------------------------------------
// JSON reading with field paths in errors
// ---------------------------------------------------------------------------

namespace detail {

class Fields {
 public:
  Fields(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_, "expected an object");
  }

  std::string at(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  const json& sub(const std::string& key) {
    used_.insert(key);
    if (!j_.contains(key)) throw ConfigError(at(key), "missing required field");
    return j_.at(key);
  }

  template <typename T>
  T req(const std::string& key) {
    return convert<T>(sub(key), at(key));
  }

  template <typename T>
  T opt(const std::string& key, T fallback) {
    used_.insert(key);
    if (!j_.contains(key)) return fallback;
    return convert<T>(j_.at(key), at(key));
  }

  /// Rejects keys that were never read, which catches typos.
  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!used_.count(key)) throw ConfigError(at(key), "unknown field");
    }
  }

  template <typename T>
  static T convert(const json& v, const std::string& path) {
    if constexpr (std::is_same_v<T, double>) {
      if (!v.is_number()) throw ConfigError(path, "expected a number");
      const double d = v.get<double>();
      if (!std::isfinite(d)) throw ConfigError(path, "expected a finite number");
      return d;
    } else if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) throw ConfigError(path, "expected true or false");
      return v.get<bool>();
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) throw ConfigError(path, "expected an integer");
      if constexpr (std::is_unsigned_v<T>) {
        if (v.is_number_unsigned()) return static_cast<T>(v.get<std::uint64_t>());
        if (v.get<std::int64_t>() < 0) throw ConfigError(path, "expected a non-negative integer");
      }
      return static_cast<T>(v.get<std::int64_t>());
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) throw ConfigError(path, "expected a string");
      return v.get<std::string>();
    } else if constexpr (std::is_same_v<T, Vec3>) {
      if (!v.is_array() || v.size() != 3) throw ConfigError(path, "expected [x, y, z]");
      Vec3 out;
      for (int i = 0; i < 3; ++i) out[i] = convert<double>(v[i], path + "[" + std::to_string(i) + "]");
      return out;
    } else if constexpr (std::is_same_v<T, Vec2>) {
      if (!v.is_array() || v.size() != 2) throw ConfigError(path, "expected [min, max]");
      return Vec2(convert<double>(v[0], path + "[0]"), convert<double>(v[1], path + "[1]"));
    } else {
      static_assert(sizeof(T) == 0, "unsupported field type");
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> used_;
};

inline std::string index_path(const std::string& base, std::size_t i) {
  return base + "[" + std::to_string(i) + "]";
}

inline PoseDeg parse_pose(const json& j, const std::string& path) {
  Fields f(j, path);
  PoseDeg p;
  p.position = {f.opt("x", 0.0), f.opt("y", 0.0), f.opt("z", 0.0)};
  p.yaw = f.opt("yaw", 0.0);
  p.pitch = f.opt("pitch", 0.0);
  p.roll = f.opt("roll", 0.0);
  f.finish();
  return p;
}

inline json pose_json(const PoseDeg& p) {
  return {{"x", p.position.x()}, {"y", p.position.y()}, {"z", p.position.z()},
          {"yaw", p.yaw},        {"pitch", p.pitch},    {"roll", p.roll}};
}

inline json vec_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

inline MeshSource parse_mesh(const json& j, const std::string& path) {
  Fields f(j, path);
  MeshSource m;
  const auto type = f.req<std::string>("type");
  if (type == "box") {
    m.kind = MeshSource::Kind::Box;
    m.size = f.req<Vec3>("size");
    m.center = f.opt("center", Vec3(Vec3::Zero()));
    if (!(m.size.array() > 0.0).all()) throw ConfigError(f.at("size"), "must be positive");
  } else if (type == "ground") {
    m.kind = MeshSource::Kind::Ground;
    m.extent = f.opt("extent", 1000.0);
    if (!(m.extent > 0.0)) throw ConfigError(f.at("extent"), "must be > 0");
  } else if (type == "hatchback") {
    m.kind = MeshSource::Kind::Hatchback;
  } else if (type == "obj") {
    m.kind = MeshSource::Kind::Obj;
    m.path = f.req<std::string>("path");
  } else {
    throw ConfigError(f.at("type"), "unknown mesh type '" + type + "'");
  }
  f.finish();
  return m;
}

inline json mesh_json(const MeshSource& m) {
  switch (m.kind) {
    case MeshSource::Kind::Box:
      return {{"type", "box"}, {"size", vec_json(m.size)}, {"center", vec_json(m.center)}};
    case MeshSource::Kind::Ground: return {{"type", "ground"}, {"extent", m.extent}};
    case MeshSource::Kind::Hatchback: return {{"type", "hatchback"}};
    case MeshSource::Kind::Obj: return {{"type", "obj"}, {"path", m.path}};
  }
  return {};
}

inline Trajectory parse_trajectory(const json& j, const std::string& path) {
  Fields f(j, path);
  Trajectory tr;
  if (f.has("pose")) tr.base = parse_pose(f.sub("pose"), f.at("pose"));
  tr.velocity = f.opt("velocity", Vec3(Vec3::Zero()));
  tr.yaw_rate = f.opt("yaw_rate", 0.0);
  if (f.has("oscillation")) {
    Fields o(f.sub("oscillation"), f.at("oscillation"));
    tr.amplitude = o.req<Vec3>("amplitude");
    tr.period = o.req<double>("period");
    tr.phase = o.opt("phase", 0.0);
    if (!(tr.period > 0.0)) throw ConfigError(o.at("period"), "must be > 0");
    o.finish();
  }
  if (f.has("keyframes")) {
    const json& kf = f.sub("keyframes");
    if (!kf.is_array() || kf.empty()) {
      throw ConfigError(f.at("keyframes"), "expected a non-empty array");
    }
    for (std::size_t i = 0; i < kf.size(); ++i) {
      Fields k(kf[i], index_path(f.at("keyframes"), i));
      Trajectory::Keyframe key;
      key.t = k.req<std::int64_t>("t");
      key.pose = parse_pose(k.sub("pose"), k.at("pose"));
      k.finish();
      if (!tr.keyframes.empty() && key.t <= tr.keyframes.back().t) {
        throw ConfigError(k.at("t"), "keyframes must be strictly increasing in t");
      }
      tr.keyframes.push_back(key);
    }
  }
  f.finish();
  return tr;
}

inline json trajectory_json(const Trajectory& tr) {
  json j;
  j["pose"] = pose_json(tr.base);
  j["velocity"] = vec_json(tr.velocity);
  j["yaw_rate"] = tr.yaw_rate;
  if (tr.period > 0.0) {
    j["oscillation"] = {
        {"amplitude", vec_json(tr.amplitude)}, {"period", tr.period}, {"phase", tr.phase}};
  }
  if (!tr.keyframes.empty()) {
    json kf = json::array();
    for (const auto& k : tr.keyframes) kf.push_back({{"t", k.t}, {"pose", pose_json(k.pose)}});
    j["keyframes"] = kf;
  }
  return j;
}

inline CloudFiles parse_cloud_files(Fields& f) {
  CloudFiles c;
  c.path = f.req<std::string>("path");
  const auto frame = f.opt<std::string>("frame", "vehicle");
  if (frame == "vehicle") {
    c.frame = Frame::Kind::Vehicle;
  } else if (frame == "world") {
    c.frame = Frame::Kind::World;
  } else {
    throw ConfigError(f.at("frame"), "expected \"vehicle\" or \"world\"");
  }
  return c;
}

inline json cloud_files_json(const CloudFiles& c) {
  return {{"path", c.path}, {"frame", c.frame == Frame::Kind::World ? "world" : "vehicle"}};
}

inline SensorConfig parse_sensor(const json& j, const std::string& path) {
  Fields f(j, path);
  SensorConfig s;
  const auto type = f.req<std::string>("type");
  s.name = f.opt<std::string>("name", "");
  if (type == "lidar") {
    s.type = SensorConfig::Type::Lidar;
    LidarSpec& l = s.lidar;
    l.channels = f.req<int>("channels");
    l.points_per_channel = f.req<int>("points_per_channel");
    l.elevation_min = f.req<double>("elevation_min");
    l.elevation_max = f.req<double>("elevation_max");
    l.azimuth_min = f.opt("azimuth_min", -180.0);
    l.azimuth_max = f.opt("azimuth_max", 180.0);
    l.max_range = f.opt("max_range", 200.0);
    if (f.has("mount")) s.mount = parse_pose(f.sub("mount"), f.at("mount"));
    l.mount = s.mount.to_transform();
    try {
      l.validate();
    } catch (const ContractError& e) {
      throw ConfigError(path, e.what());
    }
  } else if (type == "camera") {
    s.type = SensorConfig::Type::Camera;
    const int w = f.req<int>("width");
    const int h = f.req<int>("height");
    CameraSpec& c = s.camera;
    if (f.has("hfov")) {
      if (f.has("fx") || f.has("fy")) throw ConfigError(f.at("hfov"), "give either hfov or fx/fy");
      const double hfov = f.req<double>("hfov");
      if (!(hfov > 0.0 && hfov < 180.0)) throw ConfigError(f.at("hfov"), "must be in (0, 180)");
      c = CameraSpec::from_hfov(w, h, hfov);
    } else {
      c.width = w;
      c.height = h;
      c.fx = f.req<double>("fx");
      c.fy = f.req<double>("fy");
      c.cx = f.opt("cx", 0.5 * w);
      c.cy = f.opt("cy", 0.5 * h);
    }
    if (f.has("cx") && f.has("hfov")) c.cx = f.req<double>("cx");
    if (f.has("cy") && f.has("hfov")) c.cy = f.req<double>("cy");
    if (f.has("distortion")) {
      Fields d(f.sub("distortion"), f.at("distortion"));
      c.distortion = DistortionModel::radial(d.opt("k1", 0.0), d.opt("k2", 0.0), d.opt("k3", 0.0));
      d.finish();
    }
    c.max_range = f.opt("max_range", 100.0);
    if (f.has("mount")) s.mount = parse_pose(f.sub("mount"), f.at("mount"));
    c.mount = camera_mount(s.mount);
    try {
      c.validate();
    } catch (const ContractError& e) {
      throw ConfigError(path, e.what());
    }
  } else if (type == "clouds") {
    s.type = SensorConfig::Type::Clouds;
    s.clouds = parse_cloud_files(f);
  } else {
    throw ConfigError(f.at("type"), "unknown sensor type '" + type + "'");
  }
  f.finish();
  return s;
}

inline json sensor_json(const SensorConfig& s) {
  json j;
  j["name"] = s.name;
  switch (s.type) {
    case SensorConfig::Type::Lidar:
      j["type"] = "lidar";
      j["channels"] = s.lidar.channels;
      j["points_per_channel"] = s.lidar.points_per_channel;
      j["elevation_min"] = s.lidar.elevation_min;
      j["elevation_max"] = s.lidar.elevation_max;
      j["azimuth_min"] = s.lidar.azimuth_min;
      j["azimuth_max"] = s.lidar.azimuth_max;
      j["max_range"] = s.lidar.max_range;
      j["mount"] = pose_json(s.mount);
      break;
    case SensorConfig::Type::Camera:
      j["type"] = "camera";
      j["width"] = s.camera.width;
      j["height"] = s.camera.height;
      j["fx"] = s.camera.fx;
      j["fy"] = s.camera.fy;
      j["cx"] = s.camera.cx;
      j["cy"] = s.camera.cy;
      if (s.camera.distortion.kind == DistortionModel::Kind::RadialPolynomial) {
        const auto& k = s.camera.distortion.k;
        j["distortion"] = {{"k1", k[0]}, {"k2", k[1]}, {"k3", k[2]}};
      }
      j["max_range"] = s.camera.max_range;
      j["mount"] = pose_json(s.mount);
      break;
    case SensorConfig::Type::Clouds: {
      j["type"] = "clouds";
      const json c = cloud_files_json(s.clouds);
      j["path"] = c["path"];
      j["frame"] = c["frame"];
      break;
    }
  }
  return j;
}

inline ReferenceConfig parse_reference(const json& j, const std::string& path) {
  Fields f(j, path);
  ReferenceConfig r;
  ReferenceSamplerConfig& s = r.sampler;
  r.enabled = f.opt("enabled", true);
  s.channels = f.opt("channels", s.channels);
  s.points_per_channel = f.opt("points_per_channel", s.points_per_channel);
  s.elevation_min = f.opt("elevation_min", s.elevation_min);
  s.elevation_max = f.opt("elevation_max", s.elevation_max);
  s.azimuth_span = f.opt("azimuth_span", s.azimuth_span);
  const Vec2 yaw = f.opt("yaw_range", Vec2(s.yaw_min, s.yaw_max));
  const Vec2 pitch = f.opt("pitch_range", Vec2(s.pitch_min, s.pitch_max));
  const Vec2 roll = f.opt("roll_range", Vec2(s.roll_min, s.roll_max));
  s.yaw_min = yaw[0];
  s.yaw_max = yaw[1];
  s.pitch_min = pitch[0];
  s.pitch_max = pitch[1];
  s.roll_min = roll[0];
  s.roll_max = roll[1];
  s.shell_margin_up = f.opt("shell_margin_up", s.shell_margin_up);
  s.shell_margin_horizontal = f.opt("shell_margin_horizontal", s.shell_margin_horizontal);
  s.max_range = f.opt("max_range", s.max_range);
  s.count = f.opt("count", s.count);
  if (f.has("clouds")) {
    Fields c(f.sub("clouds"), f.at("clouds"));
    r.clouds = parse_cloud_files(c);
    c.finish();
  }
  f.finish();
  try {
    s.validate();
  } catch (const ContractError& e) {
    throw ConfigError(path, e.what());
  }
  if (!r.enabled && !r.clouds) {
    throw ConfigError(f.at("clouds"), "required when the reference sampler is disabled");
  }
  return r;
}

inline json reference_json(const ReferenceConfig& r) {
  const ReferenceSamplerConfig& s = r.sampler;
  json j = {{"enabled", r.enabled},
            {"channels", s.channels},
            {"points_per_channel", s.points_per_channel},
            {"elevation_min", s.elevation_min},
            {"elevation_max", s.elevation_max},
            {"azimuth_span", s.azimuth_span},
            {"yaw_range", {s.yaw_min, s.yaw_max}},
            {"pitch_range", {s.pitch_min, s.pitch_max}},
            {"roll_range", {s.roll_min, s.roll_max}},
            {"shell_margin_up", s.shell_margin_up},
            {"shell_margin_horizontal", s.shell_margin_horizontal},
            {"max_range", s.max_range},
            {"count", s.count}};
  if (r.clouds) j["clouds"] = cloud_files_json(*r.clouds);
  return j;
}

inline VerticalSlab parse_slab(const json& j, const std::string& path) {
  Fields f(j, path);
  VerticalSlab s{f.req<std::string>("name"), f.req<double>("z_min"), f.req<double>("z_max")};
  f.finish();
  if (!(s.z_min < s.z_max)) throw ConfigError(path, "z_min must be < z_max");
  return s;
}

inline GridDefinition parse_grid(const json& j, const std::string& path) {
  Fields f(j, path);
  GridDefinition g;
  g.name = f.req<std::string>("name");
  g.spec = {f.req<double>("x_min"), f.req<double>("x_max"), f.req<double>("y_min"),
            f.req<double>("y_max"), f.req<double>("cell_size")};
  g.slab = parse_slab(f.sub("slab"), f.at("slab"));
  f.finish();
  try {
    g.spec.validate();
  } catch (const ContractError& e) {
    throw ConfigError(path, e.what());
  }
  return g;
}

inline json grid_json(const GridDefinition& g) {
  return {{"name", g.name},
          {"x_min", g.spec.x_min},
          {"x_max", g.spec.x_max},
          {"y_min", g.spec.y_min},
          {"y_max", g.spec.y_max},
          {"cell_size", g.spec.cell_size},
          {"slab", {{"name", g.slab.name}, {"z_min", g.slab.z_min}, {"z_max", g.slab.z_max}}}};
}

inline RoiRect parse_roi(const json& j, const std::string& path) {
  Fields f(j, path);
  RoiRect r{f.req<std::string>("name"), f.req<std::string>("grid"), f.req<double>("x_min"),
            f.req<double>("x_max"),     f.req<double>("y_min"),       f.req<double>("y_max")};
  f.finish();
  return r;
}

inline json roi_json(const RoiRect& r) {
  return {{"name", r.name},   {"grid", r.grid},   {"x_min", r.x_min},
          {"x_max", r.x_max}, {"y_min", r.y_min}, {"y_max", r.y_max}};
}

template <typename T, typename Parse>
std::vector<T> parse_array(const json& j, const std::string& path, Parse parse) {
  if (!j.is_array()) throw ConfigError(path, "expected an array");
  std::vector<T> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(parse(j[i], index_path(path, i)));
  return out;
}

}  // namespace detail

/// Checks cross-field invariants. Throws ConfigError, or IoError for missing
/// mesh files.
inline void validate(const ScenarioConfig& cfg) {
  if (cfg.timesteps < 1) throw ConfigError("timesteps", "must be >= 1");
  if (!(cfg.r_thresh >= 0.0)) throw ConfigError("r_thresh", "must be >= 0");

  int egos = 0;
  std::set<ActorId> ids;
  for (std::size_t i = 0; i < cfg.actors.size(); ++i) {
    const ActorConfig& a = cfg.actors[i];
    const std::string path = detail::index_path("scene.actors", i);
    if (!ids.insert(a.id).second) throw ConfigError(path + ".id", "duplicate actor id");
    if (a.ego) {
      ++egos;
      if (a.attached_to_ego) throw ConfigError(path, "the ego cannot be attached to itself");
    }
    if (!a.trajectory.keyframes.empty() &&
        (!a.trajectory.defined_at(0) || !a.trajectory.defined_at(cfg.timesteps - 1))) {
      throw ConfigError(path + ".trajectory.keyframes",
                        "must cover timesteps 0.." + std::to_string(cfg.timesteps - 1));
    }
    if (a.mesh.kind == MeshSource::Kind::Obj && !std::filesystem::exists(cfg.resolve(a.mesh.path))) {
      throw IoError("mesh file not found: " + cfg.resolve(a.mesh.path).string());
    }
  }
  if (egos != 1) throw ConfigError("scene.actors", "exactly one actor must have \"ego\": true");

  std::set<std::string> rig_names;
  for (std::size_t i = 0; i < cfg.rigs.size(); ++i) {
    if (cfg.rigs[i].name.empty() || !rig_names.insert(cfg.rigs[i].name).second) {
      throw ConfigError(detail::index_path("rigs", i) + ".name", "rig names must be unique and non-empty");
    }
  }
  if (cfg.rigs.empty()) throw ConfigError("rigs", "at least one rig is required");

  std::set<std::string> grid_names;
  for (std::size_t i = 0; i < cfg.grids.size(); ++i) {
    if (!grid_names.insert(cfg.grids[i].name).second) {
      throw ConfigError(detail::index_path("grids", i) + ".name", "duplicate grid name");
    }
  }
  std::set<std::string> roi_names;
  for (std::size_t i = 0; i < cfg.rois.size(); ++i) {
    const RoiRect& r = cfg.rois[i];
    const std::string path = detail::index_path("rois", i);
    if (!roi_names.insert(r.name).second) throw ConfigError(path + ".name", "duplicate ROI name");
    auto g = std::find_if(cfg.grids.begin(), cfg.grids.end(),
                          [&](const GridDefinition& d) { return d.name == r.grid; });
    if (g == cfg.grids.end()) throw ConfigError(path + ".grid", "unknown grid '" + r.grid + "'");
    constexpr double kSlack = 1e-9;
    if (!(r.x_min < r.x_max) || !(r.y_min < r.y_max) || r.x_min < g->spec.x_min - kSlack ||
        r.x_max > g->spec.x_max + kSlack || r.y_min < g->spec.y_min - kSlack ||
        r.y_max > g->spec.y_max + kSlack) {
      throw ConfigError(path, "ROI must be a non-empty rectangle inside grid '" + r.grid + "'");
    }
  }
  if (!(cfg.raster.radius_max > 0.0)) throw ConfigError("raster.radius_max", "must be > 0");
}

inline ScenarioConfig parse_config(const json& j, const std::filesystem::path& base_dir = {}) {
  using detail::Fields;
  Fields f(j, "");
  ScenarioConfig cfg;
  cfg.base_dir = base_dir;
  cfg.name = f.opt<std::string>("name", cfg.name);
  cfg.timesteps = f.opt<std::int64_t>("timesteps", cfg.timesteps);
  cfg.seed = f.opt<std::uint64_t>("seed", cfg.seed);
  cfg.r_thresh = f.opt("r_thresh", cfg.r_thresh);
  const auto agg = f.opt<std::string>("aggregation", "mean");
  if (agg == "mean") {
    cfg.aggregation = Aggregation::Nested;
  } else if (agg == "pooled_mean") {
    cfg.aggregation = Aggregation::Pooled;
  } else if (agg == "max") {
    cfg.aggregation = Aggregation::Max;
  } else {
    throw ConfigError("aggregation", "expected \"mean\", \"pooled_mean\" or \"max\"");
  }

  {
    Fields scene(f.sub("scene"), "scene");
    cfg.actors = detail::parse_array<ActorConfig>(
        scene.sub("actors"), "scene.actors", [](const json& a, const std::string& path) {
          Fields af(a, path);
          ActorConfig ac;
          ac.id = af.req<ActorId>("id");
          ac.name = af.opt<std::string>("name", "");
          ac.ego = af.opt("ego", false);
          ac.attached_to_ego = af.opt("attached_to_ego", false);
          ac.mesh = detail::parse_mesh(af.sub("mesh"), af.at("mesh"));
          if (af.has("trajectory")) {
            ac.trajectory = detail::parse_trajectory(af.sub("trajectory"), af.at("trajectory"));
          }
          af.finish();
          return ac;
        });
    scene.finish();
  }

  if (f.has("reference")) cfg.reference = detail::parse_reference(f.sub("reference"), "reference");
  cfg.reference.sampler.seed = cfg.seed;

  auto parse_rig = [](const json& r, const std::string& path) {
    Fields rf(r, path);
    RigConfig rig;
    rig.name = rf.req<std::string>("name");
    rig.sensors = detail::parse_array<SensorConfig>(rf.sub("sensors"), rf.at("sensors"),
                                                    detail::parse_sensor);
    rf.finish();
    return rig;
  };
  if (f.has("rigs")) {
    if (f.has("sensors")) throw ConfigError("sensors", "give either \"rigs\" or \"sensors\"");
    cfg.rigs = detail::parse_array<RigConfig>(f.sub("rigs"), "rigs", parse_rig);
  } else {
    RigConfig rig;
    rig.name = "default";
    rig.sensors = detail::parse_array<SensorConfig>(f.sub("sensors"), "sensors",
                                                    detail::parse_sensor);
    cfg.rigs.push_back(std::move(rig));
  }

  if (f.has("grids")) {
    cfg.grids = detail::parse_array<GridDefinition>(f.sub("grids"), "grids", detail::parse_grid);
  }
  if (f.has("rois")) {
    cfg.rois = detail::parse_array<RoiRect>(f.sub("rois"), "rois", detail::parse_roi);
  }
  if (f.has("raster")) {
    Fields rs(f.sub("raster"), "raster");
    cfg.raster.radius_max = rs.opt("radius_max", cfg.raster.radius_max);
    rs.finish();
  }
  if (f.has("notes")) {
    const json& n = f.sub("notes");
    if (!n.is_array()) throw ConfigError("notes", "expected an array of strings");
    for (std::size_t i = 0; i < n.size(); ++i) {
      cfg.notes.push_back(Fields::convert<std::string>(n[i], detail::index_path("notes", i)));
    }
  }
  f.finish();
  validate(cfg);
  return cfg;
}

inline json to_json(const ScenarioConfig& cfg) {
  json actors = json::array();
  for (const ActorConfig& a : cfg.actors) {
    actors.push_back({{"id", a.id},
                      {"name", a.name},
                      {"ego", a.ego},
                      {"attached_to_ego", a.attached_to_ego},
                      {"mesh", detail::mesh_json(a.mesh)},
                      {"trajectory", detail::trajectory_json(a.trajectory)}});
  }
  json rigs = json::array();
  for (const RigConfig& r : cfg.rigs) {
    json sensors = json::array();
    for (const SensorConfig& s : r.sensors) sensors.push_back(detail::sensor_json(s));
    rigs.push_back({{"name", r.name}, {"sensors", sensors}});
  }
  json grids = json::array();
  for (const GridDefinition& g : cfg.grids) grids.push_back(detail::grid_json(g));
  json rois = json::array();
  for (const RoiRect& r : cfg.rois) rois.push_back(detail::roi_json(r));
  return {{"name", cfg.name},
          {"timesteps", cfg.timesteps},
          {"seed", cfg.seed},
          {"r_thresh", cfg.r_thresh},
          {"aggregation", to_string(cfg.aggregation)},
          {"scene", {{"actors", actors}}},
          {"reference", detail::reference_json(cfg.reference)},
          {"rigs", rigs},
          {"grids", grids},
          {"rois", rois},
          {"raster", {{"radius_max", cfg.raster.radius_max}}},
          {"notes", cfg.notes}};
}

/// Parses a config file. Syntax errors are reported with line and column.
inline ScenarioConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string(), e.what());
  }
  return parse_config(j, path.parent_path());
}

/// 64-bit FNV-1a over the canonical JSON form, as 16 hex digits.
inline std::string config_hash(const ScenarioConfig& cfg) {
  const std::string canonical = to_json(cfg).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : canonical) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// ---------------------------------------------------------------------------
// Materialization
// ---------------------------------------------------------------------------

inline std::shared_ptr<const TriangleMesh> make_mesh(const MeshSource& m,
                                                     const ScenarioConfig& cfg) {
  TriangleMesh mesh;
  switch (m.kind) {
    case MeshSource::Kind::Box: mesh = make_box(m.size, m.center); break;
    case MeshSource::Kind::Ground: mesh = ground_plane(m.extent); break;
    case MeshSource::Kind::Hatchback: mesh = hatchback(); break;
    case MeshSource::Kind::Obj: mesh = load_obj(cfg.resolve(m.path)); break;
  }
  mesh.validate();
  return std::make_shared<const TriangleMesh>(std::move(mesh));
}

inline std::vector<Actor> build_actors(const ScenarioConfig& cfg) {
  std::vector<Actor> actors;
  actors.reserve(cfg.actors.size());
  for (const ActorConfig& a : cfg.actors) {
    actors.push_back({a.id, make_mesh(a.mesh, cfg), a.trajectory, a.ego, a.attached_to_ego});
  }
  return actors;
}

}  // namespace blindspot::io

#endif  // BLINDSPOT_IO_CONFIG_HPP
