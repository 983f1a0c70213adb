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

#ifndef BLINDSPOT_COVERAGE_HPP
#define BLINDSPOT_COVERAGE_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "blindspot/core.hpp"
#include "blindspot/kdtree.hpp"

namespace blindspot {

/// Probe at reference point `q` with blind-spot radius `r` (distance to the
/// nearest sensor return; +inf when the sensors saw nothing).
struct RadiusSample {
  Vec3 q;
  double r;
};

/// One r per reference point, computed by exact nearest-neighbor search over
/// the fused sensor cloud. Both clouds must be vehicle-frame and share a
/// timestep.
inline std::vector<RadiusSample> blind_spot_radii(const PointCloud& reference,
                                                  const PointCloud& sensors,
                                                  unsigned threads = 1) {
  if (!(reference.frame == Frame::vehicle()) || !(sensors.frame == Frame::vehicle())) {
    throw ContractError("blind_spot_radii: clouds must be in the vehicle frame (got " +
                        reference.frame.to_string() + ", " + sensors.frame.to_string() + ")");
  }
  if (reference.timestep != sensors.timestep) {
    throw ContractError("blind_spot_radii: timestep mismatch (" +
                        std::to_string(reference.timestep) + " vs " +
                        std::to_string(sensors.timestep) + ")");
  }
  const KdTree tree(sensors.points);
  const std::vector<NnResult> nn = tree.nearest_batch(reference.points, threads);
  std::vector<RadiusSample> out(reference.points.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = {reference.points[i], nn[i].distance};
  return out;
}

/// Half-open height band [z_min, z_max) in the vehicle frame.
struct VerticalSlab {
  std::string name;
  double z_min = -0.5;
  double z_max = 0.5;

  bool contains(double z) const { return z >= z_min && z < z_max; }
  friend bool operator==(const VerticalSlab&, const VerticalSlab&) = default;
};

inline VerticalSlab ground_slab() { return {"ground", -0.5, 0.5}; }
inline VerticalSlab obstacle_slab() { return {"obstacles", 0.5, 2.0}; }

/// Axis-aligned raster over the vehicle ground plane. Cell (ix, iy) covers
/// [x_min + ix*cell, x_min + (ix+1)*cell) x [y_min + iy*cell, ...).
struct GridSpec {
  double x_min = 0.0, x_max = 0.0;
  double y_min = 0.0, y_max = 0.0;
  double cell_size = 1.0;

  void validate() const {
    if (!(cell_size > 0.0)) throw ContractError("GridSpec: cell_size must be > 0");
    if (!(x_max > x_min) || !(y_max > y_min)) {
      throw ContractError("GridSpec: extents must be positive");
    }
  }

  static std::size_t count(double extent, double cell) {
    return static_cast<std::size_t>(std::ceil(extent / cell - 1e-9));
  }
  std::size_t nx() const { return count(x_max - x_min, cell_size); }
  std::size_t ny() const { return count(y_max - y_min, cell_size); }
  std::size_t cell_count() const { return nx() * ny(); }
  double diagonal() const { return std::hypot(x_max - x_min, y_max - y_min); }

  /// Row-major (x outer, y inner) cell index, or nullopt outside the bounds.
  std::optional<std::size_t> cell_of(double x, double y) const {
    if (!(x >= x_min && x < x_max && y >= y_min && y < y_max)) return std::nullopt;
    const auto ix = static_cast<std::size_t>((x - x_min) / cell_size);
    const auto iy = static_cast<std::size_t>((y - y_min) / cell_size);
    if (ix >= nx() || iy >= ny()) return std::nullopt;
    return ix * ny() + iy;
  }

  Vec2 cell_center(std::size_t ix, std::size_t iy) const {
    return {x_min + (static_cast<double>(ix) + 0.5) * cell_size,
            y_min + (static_cast<double>(iy) + 0.5) * cell_size};
  }

  friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

enum class Aggregation {
  Nested,  // mean over timesteps of the per-timestep cell mean
  Pooled,  // all probes of a cell in one mean
  Max,     // worst case radius; probability as in Nested
};

/// Per-cell accumulators for one slab. Probes clamp r to `r_cap` (the grid
/// diagonal) before entering any sum; `clamp_count` records how often.
class CoverageGrid {
 public:
  struct Cell {
    double sum_r = 0.0;
    std::uint64_t hits = 0;
    std::uint64_t probes = 0;
    double max_r = 0.0;
    double step_mean_r_sum = 0.0;
    double step_probability_sum = 0.0;
    std::uint32_t steps = 0;
  };

  CoverageGrid(GridSpec spec, VerticalSlab slab)
      : spec_(spec), slab_(std::move(slab)), r_cap_(spec.diagonal()) {
    spec_.validate();
    if (!(slab_.z_min < slab_.z_max)) throw ContractError("VerticalSlab: z_min must be < z_max");
    cells_.resize(spec_.cell_count());
    step_sum_.assign(cells_.size(), 0.0);
    step_hits_.assign(cells_.size(), 0);
    step_probes_.assign(cells_.size(), 0);
  }

  const GridSpec& spec() const { return spec_; }
  const VerticalSlab& slab() const { return slab_; }
  double r_cap() const { return r_cap_; }
  std::uint64_t clamp_count() const { return clamp_count_; }
  std::span<const Cell> cells() const { return cells_; }
  const Cell& cell(std::size_t ix, std::size_t iy) const { return cells_[ix * spec_.ny() + iy]; }

  /// Adds one timestep's probes. Probes outside the slab or grid are ignored.
  /// A probe counts as a detection when r <= r_thresh.
  void accumulate(std::span<const RadiusSample> samples, double r_thresh) {
    touched_.clear();
    for (const RadiusSample& s : samples) {
      if (!slab_.contains(s.q.z())) continue;
      const auto idx = spec_.cell_of(s.q.x(), s.q.y());
      if (!idx) continue;
      double r = s.r;
      if (!(r <= r_cap_)) {
        r = r_cap_;
        ++clamp_count_;
      }
      const bool hit = s.r <= r_thresh;
      Cell& c = cells_[*idx];
      c.sum_r += r;
      c.probes += 1;
      c.hits += hit ? 1 : 0;
      c.max_r = std::max(c.max_r, r);
      if (step_probes_[*idx] == 0) touched_.push_back(*idx);
      step_sum_[*idx] += r;
      step_probes_[*idx] += 1;
      step_hits_[*idx] += hit ? 1 : 0;
    }
    for (std::size_t idx : touched_) {
      Cell& c = cells_[idx];
      const auto n = static_cast<double>(step_probes_[idx]);
      c.step_mean_r_sum += step_sum_[idx] / n;
      c.step_probability_sum += static_cast<double>(step_hits_[idx]) / n;
      c.steps += 1;
      step_sum_[idx] = 0.0;
      step_probes_[idx] = 0;
      step_hits_[idx] = 0;
    }
  }

 private:
  GridSpec spec_;
  VerticalSlab slab_;
  double r_cap_;
  std::uint64_t clamp_count_ = 0;
  std::vector<Cell> cells_;
  // Scratch for the per-timestep means.
  std::vector<double> step_sum_;
  std::vector<std::uint64_t> step_hits_;
  std::vector<std::uint64_t> step_probes_;
  std::vector<std::size_t> touched_;
};

inline void accumulate(CoverageGrid& grid, std::span<const RadiusSample> samples,
                       double r_thresh) {
  grid.accumulate(samples, r_thresh);
}

enum class ValueKind { MeanRadius, MaxRadius, DetectionProbability };

inline std::string to_string(ValueKind k) {
  switch (k) {
    case ValueKind::MeanRadius: return "mean_r";
    case ValueKind::MaxRadius: return "max_r";
    case ValueKind::DetectionProbability: return "probability";
  }
  return "?";
}

/// Finalized per-cell values in the grid's row-major order. No-data cells are NaN.
struct Raster {
  GridSpec spec;
  std::string slab;
  ValueKind kind = ValueKind::MeanRadius;
  std::vector<double> values;

  static bool no_data(double v) { return std::isnan(v); }
  double at(std::size_t ix, std::size_t iy) const { return values[ix * spec.ny() + iy]; }
};

struct RasterPair {
  Raster radius;
  Raster probability;
};

inline RasterPair finalize(const CoverageGrid& grid, Aggregation mode = Aggregation::Nested) {
  constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
  RasterPair out;
  out.radius = {grid.spec(), grid.slab().name,
                mode == Aggregation::Max ? ValueKind::MaxRadius : ValueKind::MeanRadius,
                {}};
  out.probability = {grid.spec(), grid.slab().name, ValueKind::DetectionProbability, {}};
  out.radius.values.reserve(grid.cells().size());
  out.probability.values.reserve(grid.cells().size());
  for (const CoverageGrid::Cell& c : grid.cells()) {
    if (c.probes == 0) {
      out.radius.values.push_back(kNaN);
      out.probability.values.push_back(kNaN);
      continue;
    }
    const auto n = static_cast<double>(c.probes);
    switch (mode) {
      case Aggregation::Pooled:
        out.radius.values.push_back(c.sum_r / n);
        out.probability.values.push_back(static_cast<double>(c.hits) / n);
        break;
      case Aggregation::Nested:
        out.radius.values.push_back(c.step_mean_r_sum / c.steps);
        out.probability.values.push_back(c.step_probability_sum / c.steps);
        break;
      case Aggregation::Max:
        out.radius.values.push_back(c.max_r);
        out.probability.values.push_back(c.step_probability_sum / c.steps);
        break;
    }
  }
  return out;
}

/// Rectangle of the vehicle ground plane evaluated on a named grid.
struct RoiRect {
  std::string name;
  std::string grid;
  double x_min = 0.0, x_max = 0.0;
  double y_min = 0.0, y_max = 0.0;

  friend bool operator==(const RoiRect&, const RoiRect&) = default;
};

/// Unweighted means over the non-empty cells whose centers lie in the ROI.
/// Means are nullopt when no such cell exists.
struct RoiSummary {
  std::string name;
  std::optional<double> mean_blind_spot_radius;
  std::optional<double> mean_detection_probability;
  std::size_t nonempty_cell_count = 0;

  bool has_data() const { return nonempty_cell_count > 0; }
};

inline RoiSummary summarize(const RasterPair& rasters, const RoiRect& roi) {
  const GridSpec& g = rasters.radius.spec;
  constexpr double kSlack = 1e-9;
  if (roi.x_min < g.x_min - kSlack || roi.x_max > g.x_max + kSlack ||
      roi.y_min < g.y_min - kSlack || roi.y_max > g.y_max + kSlack || !(roi.x_min < roi.x_max) ||
      !(roi.y_min < roi.y_max)) {
    throw ContractError("summarize: ROI '" + roi.name + "' is not inside its grid");
  }
  RoiSummary s;
  s.name = roi.name;
  double sum_r = 0.0, sum_p = 0.0;
  for (std::size_t ix = 0; ix < g.nx(); ++ix) {
    for (std::size_t iy = 0; iy < g.ny(); ++iy) {
      const Vec2 c = g.cell_center(ix, iy);
      if (c.x() < roi.x_min || c.x() > roi.x_max || c.y() < roi.y_min || c.y() > roi.y_max) {
        continue;
      }
      const double r = rasters.radius.at(ix, iy);
      const double p = rasters.probability.at(ix, iy);
      if (Raster::no_data(r) || Raster::no_data(p)) continue;
      sum_r += r;
      sum_p += p;
      ++s.nonempty_cell_count;
    }
  }
  if (s.nonempty_cell_count > 0) {
    const auto n = static_cast<double>(s.nonempty_cell_count);
    s.mean_blind_spot_radius = sum_r / n;
    s.mean_detection_probability = sum_p / n;
  }
  return s;
}

struct GridDefinition {
  std::string name;
  GridSpec spec;
  VerticalSlab slab;

  friend bool operator==(const GridDefinition&, const GridDefinition&) = default;
};

/// Default grids: 0.2 m cells around the vehicle for the 20 m ROIs and 1 m
/// cells out to 160 m, each for the ground and obstacle slabs.
inline std::vector<GridDefinition> standard_grids() {
  const GridSpec close{-10.0, 20.0, -10.0, 10.0, 0.2};
  const GridSpec far{-10.0, 160.0, -40.0, 40.0, 1.0};
  return {{"close_ground", close, ground_slab()},
          {"close_obstacles", close, obstacle_slab()},
          {"far_ground", far, ground_slab()},
          {"far_obstacles", far, obstacle_slab()}};
}

/// Forward-looking ROIs with a 2:1 length-to-width ratio.
inline std::vector<RoiRect> standard_rois() {
  return {{"close range (20 m) ground", "close_ground", 0.0, 20.0, -5.0, 5.0},
          {"medium range (80 m) ground", "far_ground", 0.0, 80.0, -20.0, 20.0},
          {"long range (160 m) ground", "far_ground", 0.0, 160.0, -40.0, 40.0},
          {"close range (20 m) obstacles", "close_obstacles", 0.0, 20.0, -5.0, 5.0},
          {"medium range (80 m) obstacles", "far_obstacles", 0.0, 80.0, -20.0, 20.0},
          {"long range (160 m) obstacles", "far_obstacles", 0.0, 160.0, -40.0, 40.0}};
}

}  // namespace blindspot

#endif  // BLINDSPOT_COVERAGE_HPP
