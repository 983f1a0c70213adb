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

#ifndef BLINDSPOT_KDTREE_HPP
#define BLINDSPOT_KDTREE_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include "blindspot/core.hpp"
#include "blindspot/parallel.hpp"

namespace blindspot {

struct NnResult {
  static constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

  double distance = std::numeric_limits<double>::infinity();
  std::size_t index = kNone;  // position in the indexed input

  friend bool operator==(const NnResult&, const NnResult&) = default;
};

/// Static k-d tree for exact Euclidean nearest-neighbor queries.
///
/// Nodes split at the median of the axis with the widest coordinate spread.
/// Ties in distance resolve to the lowest input index. Queries are const and
/// may run concurrently.
class KdTree {
 public:
  static constexpr std::size_t kDefaultLeafSize = 32;

  KdTree() = default;

  explicit KdTree(std::span<const Vec3> points, std::size_t leaf_size = kDefaultLeafSize)
      : leaf_size_(std::max<std::size_t>(leaf_size, 1)) {
    build(points);
  }

  std::size_t size() const { return points_.size(); }
  bool empty() const { return points_.empty(); }

  NnResult nearest(const Vec3& q) const {
    if (points_.empty()) return {};
    Query query{q, std::numeric_limits<double>::infinity(), NnResult::kNone};
    search(0, query);
    return {std::sqrt(query.best_d2), query.best_index};
  }

  /// Element i of the result answers queries[i]. Results do not depend on
  /// `threads`.
  std::vector<NnResult> nearest_batch(std::span<const Vec3> queries,
                                      unsigned threads = 1) const {
    std::vector<NnResult> out(queries.size());
    parallel_for(
        queries.size(), threads, [&](std::size_t i) { out[i] = nearest(queries[i]); }, 4096);
    return out;
  }

  /// Input index of every stored point, in leaf order. Every input index
  /// appears exactly once.
  std::span<const std::uint32_t> leaf_order() const { return index_; }
  std::size_t leaf_size() const { return leaf_size_; }

 private:
  struct Node {
    Vec3 lo, hi;                         // tight bounds of the node's points
    double split = 0.0;
    std::uint32_t begin = 0, end = 0;    // range in points_/index_
    std::uint32_t left = 0, right = 0;   // children, inner nodes only
    int axis = -1;                       // -1 for leaves
  };

  struct Query {
    Vec3 q;
    double best_d2;
    std::size_t best_index;
  };

  void build(std::span<const Vec3> input) {
    if (input.size() >= std::numeric_limits<std::uint32_t>::max()) {
      throw ContractError("KdTree: too many points");
    }
    index_.resize(input.size());
    std::iota(index_.begin(), index_.end(), 0u);
    if (input.empty()) return;
    nodes_.reserve(2 * (input.size() / leaf_size_ + 1));
    nodes_.emplace_back();
    struct Task {
      std::uint32_t node, begin, end;
    };
    std::vector<Task> stack{{0, 0, static_cast<std::uint32_t>(input.size())}};
    while (!stack.empty()) {
      const Task task = stack.back();
      stack.pop_back();
      Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
      Vec3 hi = -lo;
      for (std::uint32_t i = task.begin; i < task.end; ++i) {
        lo = lo.cwiseMin(input[index_[i]]);
        hi = hi.cwiseMax(input[index_[i]]);
      }
      nodes_[task.node].begin = task.begin;
      nodes_[task.node].end = task.end;
      nodes_[task.node].lo = lo;
      nodes_[task.node].hi = hi;
      if (task.end - task.begin <= leaf_size_) continue;

      int axis = 0;
      const Vec3 spread = hi - lo;
      spread.maxCoeff(&axis);
      if (!(spread[axis] > 0.0)) continue;  // all points coincide: keep as leaf

      const std::uint32_t mid = task.begin + (task.end - task.begin) / 2;
      std::nth_element(index_.begin() + task.begin, index_.begin() + mid,
                       index_.begin() + task.end, [&](std::uint32_t a, std::uint32_t b) {
                         return input[a][axis] < input[b][axis];
                       });
      const auto left = static_cast<std::uint32_t>(nodes_.size());
      nodes_.emplace_back();
      nodes_.emplace_back();
      Node& node = nodes_[task.node];
      node.axis = axis;
      node.split = input[index_[mid]][axis];
      node.left = left;
      node.right = left + 1;
      // Left holds coordinates <= split, right >= split.
      stack.push_back({left + 1, mid, task.end});
      stack.push_back({left, task.begin, mid});
    }
    points_.resize(input.size());
    for (std::size_t i = 0; i < input.size(); ++i) points_[i] = input[index_[i]];
  }

  // Lower bound on the squared distance from q to any point of the node.
  // Rounding is monotone, so each per-axis gap never exceeds the matching
  // |p - q| of a contained point and the sum, taken in the same order as the
  // point distance, never exceeds that point's squared distance. Pruning only
  // when the bound is strictly greater therefore keeps the exact minimum and
  // every equal-distance candidate for the tie rule.
  static double box_bound(const Node& n, const Vec3& q) {
    double d2 = 0.0;
    for (int a = 0; a < 3; ++a) {
      double g = 0.0;
      if (q[a] < n.lo[a]) {
        g = n.lo[a] - q[a];
      } else if (q[a] > n.hi[a]) {
        g = q[a] - n.hi[a];
      }
      d2 += g * g;
    }
    return d2;
  }

  void search(std::uint32_t node_id, Query& query) const {
    const Node& node = nodes_[node_id];
    if (node.axis < 0) {
      for (std::uint32_t i = node.begin; i < node.end; ++i) {
        const Vec3& p = points_[i];
        const double dx = p.x() - query.q.x();
        const double dy = p.y() - query.q.y();
        const double dz = p.z() - query.q.z();
        const double d2 = dx * dx + dy * dy + dz * dz;
        if (d2 < query.best_d2 || (d2 == query.best_d2 && index_[i] < query.best_index)) {
          query.best_d2 = d2;
          query.best_index = index_[i];
        }
      }
      return;
    }
    const double bl = box_bound(nodes_[node.left], query.q);
    const double br = box_bound(nodes_[node.right], query.q);
    const bool left_first = bl <= br;
    const std::uint32_t first = left_first ? node.left : node.right;
    const std::uint32_t second = left_first ? node.right : node.left;
    if (!((left_first ? bl : br) > query.best_d2)) search(first, query);
    if (!((left_first ? br : bl) > query.best_d2)) search(second, query);
  }

  std::size_t leaf_size_ = kDefaultLeafSize;
  std::vector<Node> nodes_;
  std::vector<Vec3> points_;          // leaf order
  std::vector<std::uint32_t> index_;  // leaf position -> input index
};

/// Exhaustive O(n) search. Reference baseline for benchmarks.
inline NnResult brute_force_nearest(std::span<const Vec3> points, const Vec3& q) {
  NnResult best;
  double best_d2 = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < points.size(); ++i) {
    const double dx = points[i].x() - q.x();
    const double dy = points[i].y() - q.y();
    const double dz = points[i].z() - q.z();
    const double d2 = dx * dx + dy * dy + dz * dz;
    if (d2 < best_d2) {
      best_d2 = d2;
      best.index = i;
    }
  }
  best.distance = std::sqrt(best_d2);
  return best;
}

}  // namespace blindspot

#endif  // BLINDSPOT_KDTREE_HPP
