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

// Chi-square check of sampled positions against the analytic per-axis
// marginal of a box-minus-box shell.

#ifndef BLINDSPOT_TESTS_SHELL_ORACLE_HPP
#define BLINDSPOT_TESTS_SHELL_ORACLE_HPP

#include <algorithm>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>

#include "blindspot/core.hpp"

namespace blindspot::testing {

inline double overlap(double a0, double a1, double b0, double b1) {
  return std::max(0.0, std::min(a1, b1) - std::max(a0, b0));
}

/// Fraction of the shell volume whose `axis` coordinate lies in [a, b).
inline double shell_slab_fraction(const Aabb& outer, const Aabb& inner, int axis, double a,
                                  double b) {
  auto cross = [axis](const Aabb& box) {
    const Vec3 e = box.extent();
    return e[(axis + 1) % 3] * e[(axis + 2) % 3];
  };
  const double total = outer.volume() - inner.volume();
  const double v = overlap(outer.min[axis], outer.max[axis], a, b) * cross(outer) -
                   overlap(inner.min[axis], inner.max[axis], a, b) * cross(inner);
  return v / total;
}

/// Upper-tail p-value of Pearson's statistic for one axis with `bins`
/// equal-width bins over the outer box.
inline double shell_axis_p_value(const std::vector<Vec3>& samples, const Aabb& outer,
                                 const Aabb& inner, int axis, int bins) {
  const double lo = outer.min[axis], hi = outer.max[axis];
  const double w = (hi - lo) / bins;
  std::vector<double> observed(static_cast<std::size_t>(bins), 0.0);
  for (const Vec3& p : samples) {
    const int k = std::clamp(static_cast<int>((p[axis] - lo) / w), 0, bins - 1);
    observed[static_cast<std::size_t>(k)] += 1.0;
  }
  double stat = 0.0;
  int dof = -1;
  const auto n = static_cast<double>(samples.size());
  for (int k = 0; k < bins; ++k) {
    const double b0 = lo + k * w;
    const double b1 = k + 1 == bins ? hi : b0 + w;
    const double expected = n * shell_slab_fraction(outer, inner, axis, b0, b1);
    if (expected <= 0.0) continue;
    const double d = observed[static_cast<std::size_t>(k)] - expected;
    stat += d * d / expected;
    ++dof;
  }
  const boost::math::chi_squared dist(dof);
  return boost::math::cdf(boost::math::complement(dist, stat));
}

}  // namespace blindspot::testing

#endif  // BLINDSPOT_TESTS_SHELL_ORACLE_HPP
